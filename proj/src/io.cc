#include "claimnorm/io.h"

#include <fstream>
#include <functional>
#include <sstream>

#include "claimnorm/corpus.h"

namespace claimnorm::io {

namespace {

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw corpus::JsonlError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

metrics::Aspect parse_aspect(const std::string& name) {
  for (const metrics::Aspect aspect : metrics::kAspects) {
    if (metrics::aspect_name(aspect) == name) return aspect;
  }
  throw std::invalid_argument("unknown aspect: " + name);
}

}  // namespace

std::vector<metrics::RelevanceJudgment> read_judgments(std::istream& in) {
  std::vector<metrics::RelevanceJudgment> out;
  for_each_line(in, [&](const nlohmann::json& j) {
    metrics::RelevanceJudgment judgment;
    judgment.instance_id = j.at("instance_id").get<std::string>();
    judgment.input_kind = metrics::parse_input_kind(j.at("input_kind").get<std::string>());
    judgment.votes = j.at("votes").get<std::vector<std::array<int, 3>>>();
    metrics::validate(judgment);
    out.push_back(std::move(judgment));
  });
  return out;
}

std::vector<metrics::RelevanceJudgment> read_judgments(const std::filesystem::path& path) {
  auto in = open(path);
  return read_judgments(in);
}

std::vector<metrics::HumanRatings> read_ratings(std::istream& in) {
  std::vector<metrics::HumanRatings> out;
  for_each_line(in, [&](const nlohmann::json& j) {
    metrics::HumanRatings ratings;
    ratings.instance_id = j.at("instance_id").get<std::string>();
    for (const auto& [name, values] : j.at("ratings").items()) {
      ratings.ratings[parse_aspect(name)] = values.get<std::vector<int>>();
    }
    out.push_back(std::move(ratings));
  });
  return out;
}

std::vector<metrics::HumanRatings> read_ratings(const std::filesystem::path& path) {
  auto in = open(path);
  return read_ratings(in);
}

std::map<std::string, std::string> read_predictions(std::istream& in) {
  std::map<std::string, std::string> out;
  for_each_line(in, [&](const nlohmann::json& j) {
    auto id = j.at("id").get<std::string>();
    if (!out.emplace(id, j.at("prediction").get<std::string>()).second) {
      throw std::invalid_argument("duplicate prediction for id " + id);
    }
  });
  return out;
}

std::map<std::string, std::string> read_predictions(const std::filesystem::path& path) {
  auto in = open(path);
  return read_predictions(in);
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace claimnorm::io
