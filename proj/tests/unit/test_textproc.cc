#include <fstream>
#include <random>

#include "claimnorm/textproc.h"
#include "doctest.h"
#include "json.hpp"

using namespace claimnorm::textproc;

namespace {

std::string random_text(std::mt19937& rng) {
  static const std::vector<std::string> pieces = {
      "http://", "https://t.co/x", "www.", "w", "#", "@", ".", ",", "'", "-", "!", "?", ":",
      "/",       " ",              "  ",   "\n", "ab", "Covid-19", "B12", "isn't", "é", "—", "(",
      ")",       "&",              "ww",   "x.y"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 14);
  std::string s;
  for (int i = len(rng); i > 0; --i) s += pieces[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("clean_text removes links and punctuation but keeps hashtag words") {
  CHECK(clean_text("Check https://t.co/abc now!!!") == "Check now");
  CHECK(clean_text("#RootCanal causes #CANCER") == "RootCanal causes CANCER");
  CHECK(clean_text("") == "");
  CHECK(clean_text("visit www.example.com today") == "visit today");
  CHECK(clean_text("@WHO says: COVID-19 isn't over.") == "WHO says COVID-19 isn't over.");
  CHECK(clean_text("  multiple \t spaces\n\nhere ") == "multiple spaces here");
}

TEST_CASE("clean_text is idempotent on generated inputs") {
  std::mt19937 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const std::string raw = random_text(rng);
    const std::string once = clean_text(raw);
    CAPTURE(raw);
    CHECK(clean_text(once) == once);
    for (const auto& token : tokenize(once)) {
      CHECK(token.find("://") == std::string::npos);
      CHECK(token.rfind("www.", 0) != 0);
      CHECK(token.find('#') == std::string::npos);
      CHECK(token.find('@') == std::string::npos);
      CHECK(!token.empty());
    }
  }
}

TEST_CASE("tokenize lowercases and strips edge punctuation") {
  CHECK(tokenize("The cat sat.") == TokenSeq{"the", "cat", "sat"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("B12 isn't toxic") == TokenSeq{"b12", "isn't", "toxic"});
  CHECK(tokenize("-- ... !!") .empty());
  CHECK(tokenize("\"COVID-19\" (vaccine)") == TokenSeq{"covid-19", "vaccine"});
}

TEST_CASE("ngrams keeps multiplicity") {
  const TokenSeq abc{"a", "b", "c"};
  const auto bigrams = ngrams(abc, 2);
  CHECK(bigrams.size() == 2);
  CHECK(bigrams.at("a b") == 1);
  CHECK(bigrams.at("b c") == 1);
  CHECK(ngrams(TokenSeq{"a"}, 2).empty());
  const auto triple = ngrams(TokenSeq{"a", "a", "a"}, 1);
  CHECK(triple.size() == 1);
  CHECK(triple.at("a") == 3);
  CHECK_THROWS_AS(ngrams(abc, 0), std::invalid_argument);
}

TEST_CASE("ngram cardinality law") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<int> word(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    TokenSeq seq;
    for (int i = len(rng); i > 0; --i) seq.push_back(std::string(1, static_cast<char>('a' + word(rng))));
    for (int n = 1; n <= 5; ++n) {
      const long expected = std::max<long>(0, static_cast<long>(seq.size()) - n + 1);
      CHECK(total_count(ngrams(seq, n)) == expected);
    }
  }
}

TEST_CASE("svo keywords") {
  CHECK(extract_svo_keywords("Zelensky sold farmland").keywords ==
        std::vector<std::string>{"zelensky", "farmland"});
  CHECK(extract_svo_keywords("").empty());
  CHECK(extract_svo_keywords("Honey cures corona. Ginger cures corona.").keywords ==
        std::vector<std::string>{"honey", "corona", "ginger"});
  CHECK(extract_svo_keywords("no verb here at all").empty());
  CHECK(extract_svo_keywords("The vaccine causes infertility in women").keywords ==
        std::vector<std::string>{"vaccine", "infertility", "women"});
}

TEST_CASE("svo keywords are a subset of the text's tokens") {
  const std::vector<std::string> texts = {
      "As if it couldn't get any worse. #Hope4Cancer says #RootCanal causes #CANCER Solution...",
      "Bill Gates wants microchips in vaccines! Share https://t.co/xyz now.",
      "Did you know when ur child turns 6. U can add them as authorized user to one of ur cards.",
      "Onions absorb viruses? Experts said no.\nThe WHO denied it."};
  for (const auto& text : texts) {
    const auto tokens = tokenize(text);
    for (const auto& kw : extract_svo_keywords(text).keywords) {
      CAPTURE(kw);
      CHECK(std::find(tokens.begin(), tokens.end(), kw) != tokens.end());
    }
  }
}

TEST_CASE("word lists are shipped") {
  CHECK(WordList::builtin_verbs().contains("cures"));
  CHECK(WordList::builtin_verbs().contains("sold"));
  CHECK(WordList::builtin_stopwords().contains("the"));
  const auto custom = WordList::parse("# comment\n\nFoo\nbar baz\n");
  CHECK(custom.size() == 2);
  CHECK(custom.contains("foo"));
  CHECK(custom.contains("bar"));
}

TEST_CASE("token length box statistics") {
  const std::vector<std::string> ten{"one two three four five six seven eight nine ten"};
  const auto single = token_length_stats(ten);
  CHECK(single.min == 10);
  CHECK(single.q1 == 10);
  CHECK(single.median == 10);
  CHECK(single.q3 == 10);
  CHECK(single.max == 10);

  std::vector<std::string> claims;
  for (int n = 1; n <= 100; ++n) {
    std::string claim;
    for (int i = 0; i < n; ++i) claim += "w ";
    claims.push_back(claim);
  }
  const auto box = token_length_stats(claims);
  CHECK(box.min == 1);
  CHECK(box.median == doctest::Approx(50.5));
  CHECK(box.q1 == doctest::Approx(25.75));
  CHECK(box.q3 == doctest::Approx(75.25));
  CHECK(box.max == 100);
  CHECK_THROWS_AS(token_length_stats(std::vector<std::string>{}), std::invalid_argument);
}

TEST_CASE("porter stemmer matches the reference stems") {
  std::ifstream in(std::string(CLAIMNORM_SOURCE_DIR) + "/tests/fixtures/porter_oracle.json");
  REQUIRE(in);
  const auto oracle = nlohmann::json::parse(in);
  REQUIRE(oracle.size() > 700);
  for (const auto& [word, stem] : oracle.items()) {
    CAPTURE(word);
    CHECK(porter_stem(word) == stem.get<std::string>());
  }
}
