#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "slantkit/aggregate.hpp"
#include "slantkit/corpus.hpp"
#include "slantkit/lexicon.hpp"
#include "slantkit/slant.hpp"

using namespace slantkit;

namespace {

std::vector<Document> synthetic_docs(std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<std::string> vocab;
  for (int i = 0; i < 2000; ++i) vocab.push_back("word" + std::to_string(i));
  vocab.insert(vocab.end(), {"the", "of", "and", "to"});
  std::vector<Document> docs(n);
  for (std::size_t d = 0; d < n; ++d) {
    docs[d].id = std::to_string(d);
    for (int k = 0; k < 200; ++k) {
      docs[d].text += vocab[rng() % vocab.size()];
      docs[d].text += (k % 17 == 16) ? ". " : " ";
    }
  }
  return docs;
}

const StopWords& stop() {
  static const StopWords s{"the", "of", "and", "to"};
  return s;
}

void BM_Tokenize(benchmark::State& state) {
  const auto docs = synthetic_docs(1);
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(docs[0].text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * docs[0].text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_CountBigrams(benchmark::State& state) {
  const auto docs = synthetic_docs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(count_bigrams(docs, stop()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountBigrams)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_CountBigramsSharded(benchmark::State& state) {
  const auto docs = synthetic_docs(1000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(count_bigrams_sharded(docs, stop(), static_cast<std::size_t>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_CountBigramsSharded)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ChiSquare(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<PartyTermCounts> tuples(4096);
  for (auto& t : tuples) t = {1 + rng() % 1000000, 1 + rng() % 1000000, 1 + rng() % 1000000, 1 + rng() % 1000000};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(chi_square_bigram(tuples[i++ & 4095]));
}
BENCHMARK(BM_ChiSquare);

void BM_JensenShannon(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> p(n), q(n);
  double sp = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sp += p[i] = u(rng);
    sq += q[i] = u(rng);
  }
  for (auto& x : p) x /= sp;
  for (auto& x : q) x /= sq;
  for (auto _ : state) benchmark::DoNotOptimize(jensen_shannon(p, q));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_JensenShannon)->Arg(2000);

void BM_Combine(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  std::vector<MethodScore> scores;
  for (int m = 0; m < state.range(0); ++m) {
    for (Method method : kMethods) scores.push_back({"model" + std::to_string(m), method, g(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(combine(scores));
}
BENCHMARK(BM_Combine)->Arg(24);

}  // namespace

BENCHMARK_MAIN();
