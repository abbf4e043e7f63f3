#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace claimnorm::corpus {

enum class Source { GFC, ClaimReview };
enum class Modality { Text, Image, Video, Mixed };
enum class Split { Train, Val, Test };

std::string_view source_name(Source source);    // "gfc", "claimreview"
std::string_view modality_name(Modality modality);
std::string_view split_name(Split split);       // "train", "val", "test"
Source parse_source(std::string_view name);
Split parse_split(std::string_view name);

/// One fact-check entry before filtering.
struct RawEntry {
  Source source = Source::GFC;
  std::optional<std::string> title;
  std::optional<std::string> claim_review;
  std::optional<std::string> post_text;
  std::string fact_check_url;
  std::optional<std::string> post_url;
  Modality modality = Modality::Text;
  std::optional<std::string> language_tag;

  friend bool operator==(const RawEntry&, const RawEntry&) = default;
};

/// A cleaned post with one or two gold normalized claims.
struct ClaimRecord {
  std::string id;
  std::string post;
  std::vector<std::string> references;
  Split split = Split::Train;
  Source source = Source::GFC;
  std::vector<std::string> urls;

  friend bool operator==(const ClaimRecord&, const ClaimRecord&) = default;
};

/// Content hash of the post and its references (order-independent in the
/// references). Used as ClaimRecord::id.
std::string record_id(std::string_view post, std::span<const std::string> references);

enum class Rejection {
  MissingReviewedItems,
  NonTextModality,
  NonEnglish,
  PostUnavailable,
  DuplicateTitleReview,
  MissingRequiredField,
};
inline constexpr Rejection kRejections[] = {
    Rejection::MissingReviewedItems, Rejection::NonTextModality,      Rejection::NonEnglish,
    Rejection::PostUnavailable,      Rejection::DuplicateTitleReview, Rejection::MissingRequiredField};
std::string_view rejection_name(Rejection reason);

/// Per-stage accounting. `accepted + rejected() == input` always holds.
struct IngestReport {
  std::size_t input = 0;
  std::size_t accepted = 0;
  std::map<Rejection, std::size_t> rejections;
  /// Entries whose title and claim review collapsed into a single reference.
  /// Informational; these entries are also counted in `accepted`.
  std::size_t merged_identical_references = 0;

  std::size_t rejected() const;
  std::size_t count(Rejection reason) const;
  void reject(Rejection reason);
  bool reconciles() const { return accepted + rejected() == input; }

  /// Chains a parse stage with the filter stage run on its accepted entries.
  /// Throws std::logic_error when `next.input != accepted`.
  IngestReport then(const IngestReport& next) const;

  nlohmann::ordered_json to_json() const;
};

/// Malformed input document. `offset` is the byte position reported by the
/// JSON parser.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A single record that cannot become a RawEntry.
class EntryRejected : public std::runtime_error {
 public:
  EntryRejected(Rejection reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  Rejection reason() const { return reason_; }

 private:
  Rejection reason_;
};

struct ParsedFeed {
  std::vector<RawEntry> entries;
  IngestReport report;
};

/// Collects every object typed ClaimReview anywhere in the document (bare,
/// in arrays, DataFeed items or @graph). Objects without itemReviewed are
/// rejected as missing_reviewed_items; objects without a URL or without both
/// headline/name and claimReviewed as missing_required_field.
ParsedFeed parse_claimreview(std::string_view document);

/// Flat GFC export record: {title, url, claim_review?, post_text?, post_url?,
/// modality?, language?}. Throws EntryRejected for a missing title or URL.
RawEntry parse_gfc(const nlohmann::json& record);

/// A JSON array of GFC records, or an object holding one under "records" or
/// "claims".
ParsedFeed parse_gfc_feed(std::string_view document);

struct FilterOptions {
  /// Minimum share of stopword tokens (post plus claims) for the heuristic
  /// English check. Texts shorter than `short_text_tokens` fall back to the
  /// share of ASCII letters among all letters, which must reach 0.9.
  double english_stopword_threshold = 0.1;
  std::size_t short_text_tokens = 5;
};

/// A language tag, when present, decides on its own ("en" or "en-*").
bool looks_english(const RawEntry& entry, const FilterOptions& options = {});

/// Case-fold, collapse whitespace and strip trailing punctuation.
std::string identity_key(std::string_view text);

/// Cleans posts and claims, drops non-text, non-English, post-less and
/// duplicate entries, and merges title/claim review into the reference
/// list. Output is sorted by id with split = train.
std::pair<std::vector<ClaimRecord>, IngestReport> filter_and_merge(
    std::span<const RawEntry> entries, const FilterOptions& options = {});

/// Inverse view used to feed records back through filter_and_merge.
RawEntry to_raw_entry(const ClaimRecord& record);

struct SplitOptions {
  /// Unset: every two-reference record goes to test.
  std::optional<std::size_t> test_size;
  /// Share of the non-test records assigned to train (Table-3 proportion).
  double train_fraction = 5341.0 / 5935.0;
};

/// Seeded split. Test is drawn only from two-reference records; the rest is
/// shuffled and cut into train/val. A pure function of (records, seed,
/// options); output is sorted by id.
std::vector<ClaimRecord> assign_splits(std::vector<ClaimRecord> records, std::uint64_t seed,
                                       const SplitOptions& options = {});

struct SplitStats {
  std::size_t pairs = 0;
  double avg_post_len = 0;
  double avg_claim_len = 0;
};

struct DatasetStats {
  std::map<Split, SplitStats> splits;
  SplitStats overall;

  nlohmann::ordered_json to_json() const;
};

/// Token counts use textproc::tokenize; the claim average runs over every
/// reference. Throws std::invalid_argument on an empty dataset.
DatasetStats compute_stats(std::span<const ClaimRecord> dataset);

/// Malformed JSONL input; `line` is 1-based.
class JsonlError : public std::runtime_error {
 public:
  JsonlError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

nlohmann::ordered_json to_json(const ClaimRecord& record);
ClaimRecord record_from_json(const nlohmann::json& j);

void write_jsonl(std::ostream& out, std::span<const ClaimRecord> records);
void write_jsonl(const std::filesystem::path& path, std::span<const ClaimRecord> records);
std::vector<ClaimRecord> read_jsonl(std::istream& in);
std::vector<ClaimRecord> read_jsonl(const std::filesystem::path& path);

}  // namespace claimnorm::corpus
