#include <fstream>
#include <sstream>

#include "claimnorm/corpus.h"

namespace claimnorm::corpus {

using nlohmann::json;

namespace {

json parse_document(std::string_view document) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what(),
                     e.byte);
  }
}

std::optional<std::string> string_field(const json& obj, const char* key) {
  if (!obj.is_object()) return std::nullopt;
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  auto value = it->get<std::string>();
  if (value.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  return value;
}

bool has_type(const json& obj, std::string_view type) {
  const auto it = obj.find("@type");
  if (it == obj.end()) return false;
  if (it->is_string()) return it->get_ref<const std::string&>() == type;
  if (it->is_array()) {
    for (const auto& t : *it) {
      if (t.is_string() && t.get_ref<const std::string&>() == type) return true;
    }
  }
  return false;
}

bool is_present(const json& value) {
  if (value.is_null()) return false;
  if (value.is_object() || value.is_array() || value.is_string()) return !value.empty();
  return true;
}

std::vector<const json*> as_list(const json& value) {
  std::vector<const json*> out;
  if (value.is_array()) {
    for (const auto& v : value) out.push_back(&v);
  } else if (!value.is_null()) {
    out.push_back(&value);
  }
  return out;
}

std::optional<std::string> language_of(const json& review) {
  const auto it = review.find("inLanguage");
  if (it == review.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (auto alt = string_field(*it, "alternateName")) return alt;
  return string_field(*it, "name");
}

Modality combine(std::optional<Modality> a, Modality b) {
  if (!a || *a == b) return b;
  return Modality::Mixed;
}

RawEntry claimreview_entry(const json& review) {
  const auto item_it = review.find("itemReviewed");
  if (item_it == review.end() || !is_present(*item_it)) {
    throw EntryRejected(Rejection::MissingReviewedItems, "ClaimReview without itemReviewed");
  }
  RawEntry entry;
  entry.source = Source::ClaimReview;
  entry.claim_review = string_field(review, "claimReviewed");
  entry.title = string_field(review, "headline");
  if (!entry.title) entry.title = string_field(review, "name");
  const auto url = string_field(review, "url");
  if (!url) throw EntryRejected(Rejection::MissingRequiredField, "ClaimReview without url");
  if (!entry.title && !entry.claim_review) {
    throw EntryRejected(Rejection::MissingRequiredField, "ClaimReview without headline or claimReviewed");
  }
  entry.fact_check_url = *url;
  entry.language_tag = language_of(review);

  std::optional<Modality> modality;
  for (const json* item : as_list(*item_it)) {
    for (const char* key : {"appearance", "firstAppearance"}) {
      if (!item->is_object() || !item->contains(key)) continue;
      for (const json* appearance : as_list(item->at(key))) {
        if (appearance->is_string()) {
          if (!entry.post_url) entry.post_url = appearance->get<std::string>();
          continue;
        }
        if (!appearance->is_object()) continue;
        Modality kind = Modality::Text;
        if (has_type(*appearance, "ImageObject")) kind = Modality::Image;
        if (has_type(*appearance, "VideoObject")) kind = Modality::Video;
        modality = combine(modality, kind);
        if (!entry.post_text) entry.post_text = string_field(*appearance, "text");
        if (!entry.post_url) entry.post_url = string_field(*appearance, "url");
      }
    }
  }
  entry.modality = modality.value_or(Modality::Text);
  return entry;
}

void collect_reviews(const json& node, ParsedFeed& feed) {
  if (node.is_array()) {
    for (const auto& child : node) collect_reviews(child, feed);
    return;
  }
  if (!node.is_object()) return;
  if (has_type(node, "ClaimReview")) {
    ++feed.report.input;
    try {
      feed.entries.push_back(claimreview_entry(node));
      ++feed.report.accepted;
    } catch (const EntryRejected& e) {
      feed.report.reject(e.reason());
    }
    return;
  }
  for (const auto& [key, child] : node.items()) collect_reviews(child, feed);
}

Modality parse_modality(std::string_view name) {
  if (name == "text") return Modality::Text;
  if (name == "image") return Modality::Image;
  if (name == "video") return Modality::Video;
  if (name == "mixed") return Modality::Mixed;
  throw EntryRejected(Rejection::MissingRequiredField, "unknown modality: " + std::string(name));
}

}  // namespace

ParsedFeed parse_claimreview(std::string_view document) {
  ParsedFeed feed;
  collect_reviews(parse_document(document), feed);
  return feed;
}

RawEntry parse_gfc(const json& record) {
  if (!record.is_object()) throw EntryRejected(Rejection::MissingRequiredField, "GFC record is not an object");
  RawEntry entry;
  entry.source = Source::GFC;
  entry.title = string_field(record, "title");
  if (!entry.title) throw EntryRejected(Rejection::MissingRequiredField, "GFC record without title");
  const auto url = string_field(record, "url");
  if (!url) throw EntryRejected(Rejection::MissingRequiredField, "GFC record without url");
  entry.fact_check_url = *url;
  entry.claim_review = string_field(record, "claim_review");
  entry.post_text = string_field(record, "post_text");
  entry.post_url = string_field(record, "post_url");
  entry.language_tag = string_field(record, "language");
  if (const auto modality = string_field(record, "modality")) entry.modality = parse_modality(*modality);
  return entry;
}

ParsedFeed parse_gfc_feed(std::string_view document) {
  const json root = parse_document(document);
  const json* records = &root;
  if (root.is_object()) {
    for (const char* key : {"records", "claims"}) {
      if (root.contains(key)) {
        records = &root.at(key);
        break;
      }
    }
  }
  if (!records->is_array()) {
    throw ParseError("GFC feed must be an array or an object with \"records\" or \"claims\"", 0);
  }
  ParsedFeed feed;
  for (const auto& record : *records) {
    ++feed.report.input;
    try {
      feed.entries.push_back(parse_gfc(record));
      ++feed.report.accepted;
    } catch (const EntryRejected& e) {
      feed.report.reject(e.reason());
    }
  }
  return feed;
}

nlohmann::ordered_json to_json(const ClaimRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["post"] = record.post;
  j["references"] = record.references;
  j["split"] = split_name(record.split);
  j["source"] = source_name(record.source);
  j["urls"] = record.urls;
  return j;
}

ClaimRecord record_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  auto require = [&](const char* key) -> const json& {
    const auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return *it;
  };
  ClaimRecord record;
  try {
    record.id = require("id").get<std::string>();
    record.post = require("post").get<std::string>();
    record.references = require("references").get<std::vector<std::string>>();
    record.split = parse_split(require("split").get<std::string>());
    record.source = parse_source(require("source").get<std::string>());
    if (j.contains("urls")) record.urls = j.at("urls").get<std::vector<std::string>>();
  } catch (const json::type_error& e) {
    throw std::invalid_argument(std::string("wrong field type: ") + e.what());
  }
  if (record.post.empty()) throw std::invalid_argument("empty post");
  if (record.references.empty()) throw std::invalid_argument("no references");
  for (const auto& ref : record.references) {
    if (ref.empty()) throw std::invalid_argument("empty reference");
  }
  if (record.split == Split::Test && record.references.size() != 2) {
    throw std::invalid_argument("test record must have exactly 2 references");
  }
  return record;
}

void write_jsonl(std::ostream& out, std::span<const ClaimRecord> records) {
  for (const auto& record : records) {
    out << to_json(record).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

void write_jsonl(const std::filesystem::path& path, std::span<const ClaimRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_jsonl(out, records);
  if (!out) throw std::runtime_error("error writing " + path.string());
}

std::vector<ClaimRecord> read_jsonl(std::istream& in) {
  std::vector<ClaimRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw JsonlError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return records;
}

std::vector<ClaimRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_jsonl(in);
}

}  // namespace claimnorm::corpus
