#include "claimnorm/textproc.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "claimnorm/resources.h"

namespace claimnorm::textproc {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Letters, digits and any byte of a multi-byte UTF-8 sequence.
bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_kept_punct(char c) { return c == '.' || c == ',' || c == '\'' || c == '-'; }

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[i]) != prefix[i]) return false;
  }
  return true;
}

bool looks_like_url(std::string_view chunk) {
  if (chunk.find("://") != std::string_view::npos) return true;
  std::size_t i = 0;
  while (i < chunk.size() && !is_word_byte(chunk[i])) ++i;
  return starts_with_ci(chunk.substr(i), "www.");
}

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_chunks(const std::vector<std::string_view>& chunks) {
  std::string out;
  for (const auto chunk : chunks) {
    if (!out.empty()) out.push_back(' ');
    out.append(chunk);
  }
  return out;
}

}  // namespace

WordList WordList::parse(std::string_view text) {
  std::unordered_set<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto chunks = split_ws(line);
    if (chunks.empty() || chunks.front().front() == '#') continue;
    std::string word(chunks.front());
    std::transform(word.begin(), word.end(), word.begin(), ascii_lower);
    words.insert(std::move(word));
  }
  return WordList(std::move(words));
}

WordList WordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word list: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const WordList& WordList::builtin_verbs() {
  static const WordList list = parse(resources::find("verbs.txt").value_or(""));
  return list;
}

const WordList& WordList::builtin_stopwords() {
  static const WordList list = parse(resources::find("stopwords.txt").value_or(""));
  return list;
}

std::string clean_text(std::string_view raw) {
  std::vector<std::string_view> kept;
  for (const auto chunk : split_ws(raw)) {
    if (!looks_like_url(chunk)) kept.push_back(chunk);
  }

  std::string filtered;
  filtered.reserve(raw.size());
  for (const auto chunk : kept) {
    filtered.push_back(' ');
    for (const char c : chunk) {
      if (c == '#' || c == '@') continue;
      filtered.push_back(is_word_byte(c) || is_kept_punct(c) ? c : ' ');
    }
  }

  // Filtering can expose a "www." prefix that was hidden behind a dropped
  // character, so the URL rule runs once more on the result.
  std::vector<std::string_view> out;
  for (const auto chunk : split_ws(filtered)) {
    if (!looks_like_url(chunk)) out.push_back(chunk);
  }
  return join_chunks(out);
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  for (auto chunk : split_ws(text)) {
    std::size_t b = 0;
    std::size_t e = chunk.size();
    while (b < e && !is_word_byte(chunk[b])) ++b;
    while (e > b && !is_word_byte(chunk[e - 1])) --e;
    if (b == e) continue;
    std::string token(chunk.substr(b, e - b));
    std::transform(token.begin(), token.end(), token.begin(), ascii_lower);
    tokens.push_back(std::move(token));
  }
  return tokens;
}

NgramCounts ngrams(std::span<const std::string> tokens, int n) {
  if (n < 1) throw std::invalid_argument("ngram order must be >= 1, got " + std::to_string(n));
  NgramCounts counts;
  const auto order = static_cast<std::size_t>(n);
  if (tokens.size() < order) return counts;
  std::string key;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t j = 0; j < order; ++j) {
      if (j) key.push_back(' ');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

long total_count(const NgramCounts& counts) {
  long total = 0;
  for (const auto& [_, c] : counts) total += c;
  return total;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto chunks = split_ws(current);
    if (!chunks.empty()) out.push_back(join_chunks(chunks));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    const bool terminal = c == '.' || c == '!' || c == '?';
    if (terminal && (i + 1 == text.size() || is_space(text[i + 1]))) {
      flush();
      continue;
    }
    current.push_back(c);
  }
  flush();
  return out;
}

KeywordSet extract_svo_keywords(std::string_view text, const WordList& verbs,
                                const WordList& stopwords) {
  KeywordSet result;
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& token) {
    if (stopwords.contains(token) || verbs.contains(token)) return;
    if (token.find("://") != std::string::npos) return;
    if (seen.insert(token).second) result.keywords.push_back(token);
  };

  for (const auto& sentence : split_sentences(text)) {
    const TokenSeq tokens = tokenize(sentence);
    const auto verb = std::find_if(tokens.begin(), tokens.end(),
                                   [&](const std::string& t) { return verbs.contains(t); });
    if (verb == tokens.end()) continue;
    for (auto it = tokens.begin(); it != verb; ++it) add(*it);
    for (auto it = std::next(verb); it != tokens.end() && !verbs.contains(*it); ++it) add(*it);
  }
  return result;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

BoxStats token_length_stats(std::span<const std::string> claims) {
  if (claims.empty()) throw std::invalid_argument("token_length_stats: empty claim list");
  std::vector<double> lengths;
  lengths.reserve(claims.size());
  for (const auto& claim : claims) lengths.push_back(static_cast<double>(tokenize(claim).size()));
  std::sort(lengths.begin(), lengths.end());
  return BoxStats{lengths.front(), quantile(lengths, 0.25), quantile(lengths, 0.5),
                  quantile(lengths, 0.75), lengths.back()};
}

}  // namespace claimnorm::textproc
