#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "claimnorm/runner.h"

namespace claimnorm::runner {

namespace {

using nlohmann::ordered_json;

std::string metric_label(metrics::Metric m) {
  switch (m) {
    case metrics::Metric::Rouge1: return "ROUGE-1";
    case metrics::Metric::Rouge2: return "ROUGE-2";
    case metrics::Metric::RougeL: return "ROUGE-L";
    case metrics::Metric::Bleu4: return "BLEU-4";
    case metrics::Metric::Meteor: return "METEOR";
    case metrics::Metric::Abstractness: return "Abstractness";
  }
  return "?";
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<metrics::Metric> run_metrics(const RunResult& run) {
  std::vector<metrics::Metric> out;
  if (run.config.contains("metrics")) {
    for (const auto& name : run.config.at("metrics")) out.push_back(metrics::parse_metric(name.get<std::string>()));
  }
  return out;
}

std::size_t target_index(std::span<const RunResult> results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].kind == prompts::PromptKind::Cacn) return i;
  }
  return results.size() - 1;
}

struct Table {
  std::vector<std::string> labels;
  std::vector<std::string> keys;
  std::vector<std::string> row_names;
  std::vector<std::vector<double>> values;  // raw fractions
  std::optional<std::string> delta_name;
  std::vector<std::optional<double>> delta;  // percent; nullopt when best is 0
};

Table build_table(std::span<const RunResult> results) {
  if (results.empty()) throw std::invalid_argument("emit_report: no runs");
  Table t;
  const auto metric_list = run_metrics(results.front());
  t.keys = metric_list.empty() ? results.front().report.columns : metrics::metric_columns(metric_list);
  t.labels = metric_list.empty() ? t.keys : report_columns(metric_list);
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto key_set = sorted(t.keys);
  for (const auto& run : results) {
    if (sorted(run.report.columns) != key_set) {
      throw std::invalid_argument("emit_report: run '" + run.name + "' has a different metric list");
    }
    t.row_names.push_back(run.name);
    std::vector<double> row;
    for (const auto& key : t.keys) row.push_back(run.report.means.at(key));
    t.values.push_back(std::move(row));
  }
  if (results.size() < 2) return t;
  const std::size_t target = target_index(results);
  t.delta_name = "delta (" + results[target].name + " vs best other)";
  for (std::size_t c = 0; c < t.keys.size(); ++c) {
    double best = -1;
    for (std::size_t r = 0; r < results.size(); ++r) {
      if (r != target) best = std::max(best, t.values[r][c]);
    }
    if (best > 0) {
      t.delta.push_back((t.values[target][c] - best) / best * 100.0);
    } else {
      t.delta.push_back(std::nullopt);
    }
  }
  return t;
}

std::string delta_text(const std::optional<double>& d) {
  if (!d) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f%%", *d);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  throw std::invalid_argument("unknown report format: " + std::string(name));
}

std::vector<std::string> report_columns(std::span<const metrics::Metric> metric_list) {
  std::vector<std::string> out;
  for (const auto m : metric_list) {
    const auto label = metric_label(m);
    if (metrics::is_triple_metric(m)) {
      out.push_back(label + " P");
      out.push_back(label + " R");
      out.push_back(label + " F1");
    } else {
      out.push_back(label);
    }
  }
  return out;
}

std::string emit_report(std::span<const RunResult> results, ReportFormat format) {
  const Table t = build_table(results);
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Markdown: {
      out << "| System |";
      for (const auto& l : t.labels) out << ' ' << l << " |";
      out << "\n|---|";
      for (std::size_t c = 0; c < t.labels.size(); ++c) out << "---:|";
      out << '\n';
      for (std::size_t r = 0; r < t.values.size(); ++r) {
        out << "| " << md_cell(t.row_names[r]) << " |";
        for (double v : t.values[r]) out << ' ' << fixed2(v * 100) << " |";
        out << '\n';
      }
      if (t.delta_name) {
        out << "| " << md_cell(*t.delta_name) << " |";
        for (const auto& d : t.delta) out << ' ' << delta_text(d) << " |";
        out << '\n';
      }
      break;
    }
    case ReportFormat::Csv: {
      out << "system";
      for (const auto& l : t.labels) out << ',' << csv_field(l);
      out << '\n';
      for (std::size_t r = 0; r < t.values.size(); ++r) {
        out << csv_field(t.row_names[r]);
        for (double v : t.values[r]) out << ',' << fixed2(v * 100);
        out << '\n';
      }
      if (t.delta_name) {
        out << csv_field(*t.delta_name);
        for (const auto& d : t.delta) out << ',' << delta_text(d);
        out << '\n';
      }
      break;
    }
    case ReportFormat::Json: {
      ordered_json j;
      j["columns"] = t.labels;
      j["runs"] = ordered_json::array();
      for (std::size_t r = 0; r < t.values.size(); ++r) {
        ordered_json scores = ordered_json::object();
        for (std::size_t c = 0; c < t.labels.size(); ++c) scores[t.labels[c]] = t.values[r][c] * 100;
        j["runs"].push_back({{"name", t.row_names[r]}, {"count", results[r].report.count}, {"scores", scores}});
      }
      if (t.delta_name) {
        ordered_json delta = ordered_json::object();
        for (std::size_t c = 0; c < t.labels.size(); ++c) {
          delta[t.labels[c]] = t.delta[c] ? ordered_json(*t.delta[c]) : ordered_json(nullptr);
        }
        j["delta_percent"] = {{"target", results[target_index(results)].name}, {"values", delta}};
      }
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  for (double v : values) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    const auto index = std::min(bins - 1, static_cast<std::size_t>(std::floor(clamped * static_cast<double>(bins))));
    ++h.counts[index];
  }
  return h;
}

Distributions emit_distributions(std::span<const corpus::ClaimRecord> dataset, std::size_t bins) {
  if (dataset.empty()) throw std::invalid_argument("emit_distributions: empty dataset");
  std::vector<std::string> documents;
  std::vector<std::string> posts;
  std::vector<std::string> claims;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& r : dataset) {
    documents.push_back(r.post);
    posts.push_back(r.post);
    for (const auto& ref : r.references) {
      documents.push_back(ref);
      claims.push_back(ref);
      pairs.emplace_back(r.post, ref);
    }
  }
  const metrics::TfIdfIndex index(documents);
  const auto cosines = metrics::pair_cosines(index, pairs);

  std::vector<double> per_record;
  std::size_t at = 0;
  for (const auto& r : dataset) {
    if (r.references.empty()) continue;
    double sum = 0;
    for (std::size_t i = 0; i < r.references.size(); ++i) sum += cosines[at++];
    per_record.push_back(sum / static_cast<double>(r.references.size()));
  }

  Distributions d;
  d.cosine = histogram(per_record, bins);
  d.claim_lengths = textproc::token_length_stats(claims);
  d.post_lengths = textproc::token_length_stats(posts);
  return d;
}

ordered_json Distributions::to_json() const {
  auto box = [](const textproc::BoxStats& b) {
    return ordered_json{{"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}};
  };
  return {{"cosine_histogram", {{"edges", cosine.edges}, {"counts", cosine.counts}}},
          {"claim_length", box(claim_lengths)},
          {"post_length", box(post_lengths)}};
}

RetrievalTable run_retrieval_eval(std::span<const metrics::RelevanceJudgment> judgments) {
  RetrievalTable table;
  for (const auto kind : {metrics::InputKind::NormalizedClaim, metrics::InputKind::Post}) {
    table.rows[kind] = {metrics::precision_at_k(judgments, 1, kind), metrics::precision_at_k(judgments, 3, kind),
                        metrics::precision_at_k(judgments, 5, kind)};
  }
  return table;
}

std::string RetrievalTable::to_markdown() const {
  std::ostringstream out;
  out << "| Input | P@1 | P@3 | P@5 |\n|---|---:|---:|---:|\n";
  for (const auto kind : {metrics::InputKind::NormalizedClaim, metrics::InputKind::Post}) {
    const auto it = rows.find(kind);
    if (it == rows.end()) continue;
    out << "| " << (kind == metrics::InputKind::Post ? "Posts" : "Normalized claims") << " |";
    for (double v : it->second) out << ' ' << fixed2(v) << " |";
    out << '\n';
  }
  return out.str();
}

ordered_json RetrievalTable::to_json() const {
  ordered_json j = ordered_json::object();
  for (const auto& [kind, p] : rows) {
    j[std::string(metrics::input_kind_name(kind))] = {{"p@1", p[0]}, {"p@3", p[1]}, {"p@5", p[2]}};
  }
  return j;
}

}  // namespace claimnorm::runner
