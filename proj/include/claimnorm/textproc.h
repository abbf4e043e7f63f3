#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace claimnorm::textproc {

/// Lowercase, punctuation-stripped tokens in source order. Never holds an
/// empty token.
using TokenSeq = std::vector<std::string>;

/// N-gram multiset. Keys are the n tokens joined by a single space (tokens
/// never contain whitespace, so the join is unambiguous).
using NgramCounts = std::unordered_map<std::string, int>;

/// Ordered, deduplicated subject/object keywords.
struct KeywordSet {
  std::vector<std::string> keywords;

  bool empty() const { return keywords.empty(); }
  std::size_t size() const { return keywords.size(); }
};

/// Five-number summary of token counts.
struct BoxStats {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
};

/// A set of lowercase words loaded from a one-word-per-line file. Blank lines
/// and lines starting with '#' are ignored.
class WordList {
 public:
  WordList() = default;
  explicit WordList(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  static WordList parse(std::string_view text);
  static WordList load(const std::filesystem::path& path);

  /// Lists shipped in data/ and compiled into the library.
  static const WordList& builtin_verbs();
  static const WordList& builtin_stopwords();

  bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Removes URLs, strips '#'/'@' sigils (keeping the word), drops characters
/// other than letters, digits, whitespace, '.', ',', '\'' and '-', and
/// collapses whitespace. Bytes >= 0x80 (UTF-8 sequences) are kept as letters.
/// Idempotent.
std::string clean_text(std::string_view raw);

/// Lowercases, splits on whitespace and trims leading/trailing punctuation
/// from each token; tokens that are pure punctuation are dropped.
TokenSeq tokenize(std::string_view text);

/// Throws std::invalid_argument when n < 1.
NgramCounts ngrams(std::span<const std::string> tokens, int n);

/// Total multiplicity of an n-gram multiset.
long total_count(const NgramCounts& counts);

/// Splits on '.', '!', '?' and newlines. Empty sentences are dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Heuristic subject/object extraction. In every sentence the first token on
/// the verb list splits it: the non-stopword tokens before it are subjects,
/// the non-stopword tokens after it (up to the next verb) are objects.
KeywordSet extract_svo_keywords(std::string_view text,
                                const WordList& verbs = WordList::builtin_verbs(),
                                const WordList& stopwords = WordList::builtin_stopwords());

/// Linear interpolation between closest ranks: position (n-1)*p in the
/// sorted sample. `sorted` must be sorted ascending and non-empty.
double quantile(std::span<const double> sorted, double p);

/// Box statistics of tokenize() lengths. Throws std::invalid_argument on an
/// empty list.
BoxStats token_length_stats(std::span<const std::string> claims);

/// Porter (1980) suffix stripper, original rule set. Expects a lowercase word.
std::string porter_stem(std::string_view word);

}  // namespace claimnorm::textproc
