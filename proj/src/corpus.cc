#include "claimnorm/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "claimnorm/hashing.h"
#include "claimnorm/textproc.h"

namespace claimnorm::corpus {

std::string_view source_name(Source source) {
  return source == Source::GFC ? "gfc" : "claimreview";
}

std::string_view modality_name(Modality modality) {
  switch (modality) {
    case Modality::Text: return "text";
    case Modality::Image: return "image";
    case Modality::Video: return "video";
    case Modality::Mixed: return "mixed";
  }
  return "unknown";
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

Source parse_source(std::string_view name) {
  if (name == "gfc") return Source::GFC;
  if (name == "claimreview") return Source::ClaimReview;
  throw std::invalid_argument("unknown source: " + std::string(name));
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split: " + std::string(name));
}

std::string record_id(std::string_view post, std::span<const std::string> references) {
  std::vector<std::string> sorted(references.begin(), references.end());
  std::sort(sorted.begin(), sorted.end());
  std::string material(post);
  for (const auto& ref : sorted) {
    material.push_back('\x1f');
    material += ref;
  }
  return sha256_hex(material).substr(0, 16);
}

std::string_view rejection_name(Rejection reason) {
  switch (reason) {
    case Rejection::MissingReviewedItems: return "missing_reviewed_items";
    case Rejection::NonTextModality: return "non_text_modality";
    case Rejection::NonEnglish: return "non_english";
    case Rejection::PostUnavailable: return "post_unavailable";
    case Rejection::DuplicateTitleReview: return "duplicate_title_review";
    case Rejection::MissingRequiredField: return "missing_required_field";
  }
  return "unknown";
}

std::size_t IngestReport::rejected() const {
  std::size_t total = 0;
  for (const auto& [reason, n] : rejections) total += n;
  return total;
}

std::size_t IngestReport::count(Rejection reason) const {
  const auto it = rejections.find(reason);
  return it == rejections.end() ? 0 : it->second;
}

void IngestReport::reject(Rejection reason) { ++rejections[reason]; }

IngestReport IngestReport::then(const IngestReport& next) const {
  if (next.input != accepted) {
    throw std::logic_error("IngestReport::then: next stage saw " + std::to_string(next.input) +
                           " entries but this stage accepted " + std::to_string(accepted));
  }
  IngestReport out = *this;
  out.accepted = next.accepted;
  for (const auto& [reason, n] : next.rejections) out.rejections[reason] += n;
  out.merged_identical_references += next.merged_identical_references;
  return out;
}

nlohmann::ordered_json IngestReport::to_json() const {
  nlohmann::ordered_json j;
  j["input"] = input;
  j["accepted"] = accepted;
  nlohmann::ordered_json rejected_counts = nlohmann::ordered_json::object();
  for (const Rejection reason : kRejections) rejected_counts[std::string(rejection_name(reason))] = count(reason);
  j["rejected"] = std::move(rejected_counts);
  j["merged_identical_references"] = merged_identical_references;
  return j;
}

namespace {

bool tag_is_english(std::string tag) {
  std::transform(tag.begin(), tag.end(), tag.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return tag == "en" || tag.rfind("en-", 0) == 0 || tag.rfind("en_", 0) == 0 || tag == "english";
}

double ascii_letter_share(std::string_view text) {
  std::size_t ascii = 0;
  std::size_t other = 0;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      ++ascii;
    } else if (c >= 0xC0) {
      ++other;  // UTF-8 lead byte; continuation bytes are not counted
    }
  }
  return ascii + other == 0 ? 0.0 : static_cast<double>(ascii) / static_cast<double>(ascii + other);
}

std::optional<std::string> cleaned(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  std::string out = textproc::clean_text(*text);
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace

bool looks_english(const RawEntry& entry, const FilterOptions& options) {
  if (entry.language_tag && !entry.language_tag->empty()) return tag_is_english(*entry.language_tag);
  std::string text;
  for (const auto* part : {&entry.post_text, &entry.title, &entry.claim_review}) {
    if (*part) {
      text += textproc::clean_text(**part);
      text.push_back(' ');
    }
  }
  const auto tokens = textproc::tokenize(text);
  if (tokens.size() < options.short_text_tokens) return ascii_letter_share(text) >= 0.9;
  const auto& stopwords = textproc::WordList::builtin_stopwords();
  const auto hits = std::count_if(tokens.begin(), tokens.end(),
                                  [&](const std::string& t) { return stopwords.contains(t); });
  return static_cast<double>(hits) / static_cast<double>(tokens.size()) >=
         options.english_stopword_threshold;
}

std::string identity_key(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  while (!out.empty() && (std::ispunct(static_cast<unsigned char>(out.back())) || out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

std::pair<std::vector<ClaimRecord>, IngestReport> filter_and_merge(std::span<const RawEntry> entries,
                                                                    const FilterOptions& options) {
  IngestReport report;
  report.input = entries.size();
  std::vector<ClaimRecord> records;
  std::unordered_set<std::string> seen;

  for (const auto& entry : entries) {
    if (entry.modality != Modality::Text) {
      report.reject(Rejection::NonTextModality);
      continue;
    }
    const auto post = cleaned(entry.post_text);
    if (!post) {
      report.reject(Rejection::PostUnavailable);
      continue;
    }
    std::vector<std::string> references;
    bool merged = false;
    const auto title = cleaned(entry.title);
    const auto review = cleaned(entry.claim_review);
    if (title) references.push_back(*title);
    if (review) {
      if (title && identity_key(*title) == identity_key(*review)) {
        merged = true;
      } else {
        references.push_back(*review);
      }
    }
    if (references.empty() || entry.fact_check_url.empty()) {
      report.reject(Rejection::MissingRequiredField);
      continue;
    }
    if (!looks_english(entry, options)) {
      report.reject(Rejection::NonEnglish);
      continue;
    }
    ClaimRecord record;
    record.id = record_id(*post, references);
    if (!seen.insert(record.id).second) {
      report.reject(Rejection::DuplicateTitleReview);
      continue;
    }
    record.post = *post;
    record.references = std::move(references);
    record.source = entry.source;
    record.urls.push_back(entry.fact_check_url);
    if (entry.post_url && !entry.post_url->empty()) record.urls.push_back(*entry.post_url);
    records.push_back(std::move(record));
    ++report.accepted;
    if (merged) ++report.merged_identical_references;
  }
  std::sort(records.begin(), records.end(),
            [](const ClaimRecord& a, const ClaimRecord& b) { return a.id < b.id; });
  return {std::move(records), report};
}

RawEntry to_raw_entry(const ClaimRecord& record) {
  RawEntry entry;
  entry.source = record.source;
  if (!record.references.empty()) entry.title = record.references[0];
  if (record.references.size() > 1) entry.claim_review = record.references[1];
  entry.post_text = record.post;
  if (!record.urls.empty()) entry.fact_check_url = record.urls[0];
  if (record.urls.size() > 1) entry.post_url = record.urls[1];
  entry.language_tag = "en";
  return entry;
}

namespace {

// Fisher-Yates with a plain modulo draw so the permutation depends only on
// the mt19937_64 stream, not on the standard library's distributions.
void seeded_shuffle(std::vector<std::size_t>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

std::vector<ClaimRecord> assign_splits(std::vector<ClaimRecord> records, std::uint64_t seed,
                                       const SplitOptions& options) {
  if (!(options.train_fraction >= 0.0 && options.train_fraction <= 1.0)) {
    throw std::invalid_argument("assign_splits: train_fraction must be in [0, 1]");
  }
  std::sort(records.begin(), records.end(),
            [](const ClaimRecord& a, const ClaimRecord& b) { return a.id < b.id; });

  std::vector<std::size_t> eligible;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (records[i].references.size() == 2 ? eligible : rest).push_back(i);
  }
  const std::size_t test_size = options.test_size.value_or(eligible.size());
  if (test_size > eligible.size()) {
    throw std::invalid_argument("assign_splits: requested " + std::to_string(test_size) +
                                " test records but only " + std::to_string(eligible.size()) +
                                " have two references (short by " +
                                std::to_string(test_size - eligible.size()) + ")");
  }

  std::mt19937_64 rng(seed);
  seeded_shuffle(eligible, rng);
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    if (i < test_size) {
      records[eligible[i]].split = Split::Test;
    } else {
      rest.push_back(eligible[i]);
    }
  }
  std::sort(rest.begin(), rest.end());
  seeded_shuffle(rest, rng);
  const auto train_size = static_cast<std::size_t>(
      std::llround(options.train_fraction * static_cast<double>(rest.size())));
  for (std::size_t i = 0; i < rest.size(); ++i) {
    records[rest[i]].split = i < train_size ? Split::Train : Split::Val;
  }
  return records;
}

namespace {

struct LengthSums {
  std::size_t pairs = 0;
  double post_tokens = 0;
  double claim_tokens = 0;
  std::size_t claims = 0;

  void add(const ClaimRecord& record) {
    ++pairs;
    post_tokens += static_cast<double>(textproc::tokenize(record.post).size());
    for (const auto& ref : record.references) {
      claim_tokens += static_cast<double>(textproc::tokenize(ref).size());
      ++claims;
    }
  }

  SplitStats finish() const {
    SplitStats s;
    s.pairs = pairs;
    if (pairs > 0) s.avg_post_len = post_tokens / static_cast<double>(pairs);
    if (claims > 0) s.avg_claim_len = claim_tokens / static_cast<double>(claims);
    return s;
  }
};

nlohmann::ordered_json split_stats_json(const SplitStats& s) {
  return {{"pairs", s.pairs}, {"avg_post_len", s.avg_post_len}, {"avg_claim_len", s.avg_claim_len}};
}

}  // namespace

DatasetStats compute_stats(std::span<const ClaimRecord> dataset) {
  if (dataset.empty()) throw std::invalid_argument("compute_stats: empty dataset");
  std::map<Split, LengthSums> per_split{{Split::Train, {}}, {Split::Val, {}}, {Split::Test, {}}};
  LengthSums overall;
  for (const auto& record : dataset) {
    per_split[record.split].add(record);
    overall.add(record);
  }
  DatasetStats stats;
  for (const auto& [split, sums] : per_split) stats.splits[split] = sums.finish();
  stats.overall = overall.finish();
  return stats;
}

nlohmann::ordered_json DatasetStats::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [split, s] : splits) j[std::string(split_name(split))] = split_stats_json(s);
  j["overall"] = split_stats_json(overall);
  return j;
}

}  // namespace claimnorm::corpus
