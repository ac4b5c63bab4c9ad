#include <benchmark/benchmark.h>

#include "gr/common/random.hpp"
#include "gr/featurize/encoder.hpp"
#include "gr/forest/forest.hpp"
#include "gr/reduce/feature_matrix.hpp"
#include "gr/reduce/pca.hpp"
#include "gr/simstore/store.hpp"
#include "synth.hpp"

using namespace gr;

namespace {

LabeledData random_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  LabeledData d(dim, 3);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint32_t>(uniform_index(rng, 3));
    for (std::size_t j = 0; j < dim; ++j) x[j] = (j % 3 == label ? 1.0 : 0.0) + uniform_unit(rng);
    d.add(x, label, i);
  }
  return d;
}

const std::vector<AlertRecord>& alerts() {
  static const auto stream = [] {
    SynthOptions o;
    o.incidents = 5000;
    o.orgs = 50;
    o.detectors = 200;
    o.detector_groups = 800;
    return synthesize_guide(o);
  }();
  return stream;
}

}  // namespace

static void BM_ForestPredict(benchmark::State& state) {
  const auto data = random_rows(5000, 40, 1);
  ForestParams p;
  p.n_estimators = static_cast<std::uint32_t>(state.range(0));
  const auto model = train_forest(data, {"TP", "FP", "BP"}, p);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_scores(model, data.row(i++ % data.rows())));
  }
}
BENCHMARK(BM_ForestPredict)->Arg(100)->Arg(400);

static void BM_PcaTransformSparse(benchmark::State& state) {
  const auto& stream = alerts();
  const auto encoder = fit_encoder(stream, 10);
  FeatureMatrix matrix(encoder.dimension());
  std::vector<SparseVector> rows;
  for (std::size_t i = 0; i < 3000; ++i) {
    rows.push_back(encoder.feature_vector(encoder.encode(stream[i])));
    matrix.add_row(rows.back());
  }
  const auto pca = fit_pca(matrix, PcaOptions{});
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pca.transform(rows[i++ % rows.size()]));
}
BENCHMARK(BM_PcaTransformSparse);

static void BM_FindSimilar(benchmark::State& state) {
  constexpr std::size_t k = 40;
  Rng rng(3);
  EmbeddingStore store("bench", k);
  std::vector<EmbeddingEntry> entries;
  const auto now = from_unix(1'718'000'000);
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    EmbeddingEntry e;
    e.org_id = "org";
    e.incident_id = std::to_string(i);
    e.incident_hash = std::to_string(uniform_index(rng, 500));
    e.grade = static_cast<Grade>(uniform_index(rng, 3));
    e.embedding.resize(k);
    for (auto& v : e.embedding) v = uniform_unit(rng) - 0.5;
    e.timestamp = now - Seconds{static_cast<std::int64_t>(uniform_index(rng, 150 * 86400))};
    entries.push_back(std::move(e));
  }
  store.upsert(entries, 5);
  SimilarQuery q;
  q.org_id = "org";
  q.incident_hash = "7";
  q.embedding = entries[0].embedding;
  q.grade_rec = Grade::TP;
  q.now = now;
  for (auto _ : state) benchmark::DoNotOptimize(store.find_similar(q));
}
BENCHMARK(BM_FindSimilar)->Arg(1000)->Arg(20000);

static void BM_EncodeAlert(benchmark::State& state) {
  const auto& stream = alerts();
  const auto encoder = fit_encoder(stream, 10);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(encoder.encode(stream[i++ % stream.size()]));
}
BENCHMARK(BM_EncodeAlert);

BENCHMARK_MAIN();
