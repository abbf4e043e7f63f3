// Serial reference vs OpenMP scoring kernels on synthetic claims.
//
//   ./build/bench_kernels --benchmark_filter=Score

#include <benchmark/benchmark.h>

#include <random>

#include "claimnorm/metrics.h"

namespace {

using claimnorm::metrics::Metric;

std::vector<std::string> vocabulary() {
  std::vector<std::string> words;
  for (int i = 0; i < 400; ++i) words.push_back("w" + std::to_string(i));
  return words;
}

claimnorm::textproc::TokenSeq sentence(std::mt19937_64& rng, const std::vector<std::string>& vocab, int len) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  claimnorm::textproc::TokenSeq out;
  for (int i = 0; i < len; ++i) out.push_back(vocab[pick(rng)]);
  return out;
}

std::vector<claimnorm::metrics::ScoringInput> inputs(std::size_t n) {
  std::mt19937_64 rng(17);
  const auto vocab = vocabulary();
  std::vector<claimnorm::metrics::ScoringInput> out(n);
  for (auto& in : out) {
    in.hypothesis = sentence(rng, vocab, 16);
    in.references = {sentence(rng, vocab, 16), sentence(rng, vocab, 12)};
    in.post = sentence(rng, vocab, 45);
  }
  return out;
}

const std::vector<Metric> kMetrics = {Metric::Rouge1, Metric::Rouge2, Metric::RougeL,
                                      Metric::Bleu4,  Metric::Meteor, Metric::Abstractness};

void BM_ScoreSerial(benchmark::State& state) {
  const auto data = inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(claimnorm::metrics::score_batch_serial(data, kMetrics));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto data = inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(claimnorm::metrics::score_batch(data, kMetrics));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<std::pair<std::string, std::string>> text_pairs(std::size_t n) {
  std::mt19937_64 rng(23);
  const auto vocab = vocabulary();
  auto join = [](const claimnorm::textproc::TokenSeq& t) {
    std::string s;
    for (const auto& w : t) s += w + " ";
    return s;
  };
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(join(sentence(rng, vocab, 45)), join(sentence(rng, vocab, 16)));
  return out;
}

claimnorm::metrics::TfIdfIndex index_for(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::string> docs;
  for (const auto& [a, b] : pairs) {
    docs.push_back(a);
    docs.push_back(b);
  }
  return claimnorm::metrics::TfIdfIndex(docs);
}

void BM_CosineSerial(benchmark::State& state) {
  const auto pairs = text_pairs(static_cast<std::size_t>(state.range(0)));
  const auto index = index_for(pairs);
  for (auto _ : state) benchmark::DoNotOptimize(claimnorm::metrics::pair_cosines_serial(index, pairs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CosineParallel(benchmark::State& state) {
  const auto pairs = text_pairs(static_cast<std::size_t>(state.range(0)));
  const auto index = index_for(pairs);
  for (auto _ : state) benchmark::DoNotOptimize(claimnorm::metrics::pair_cosines(index, pairs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ScoreSerial)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CosineSerial)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineParallel)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
