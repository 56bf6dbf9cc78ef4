// Serial reference kernels against their OpenMP counterparts.
//   ./aqp_bench --benchmark_filter=Label
#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "aqp/encoder.hpp"
#include "aqp/executor.hpp"
#include "aqp/lstm.hpp"
#include "aqp/querygen.hpp"
#include "aqp/synth.hpp"

using namespace aqp;

namespace {

struct LabelFixture {
  Dataset ds;
  std::vector<FlatQuery> queries;

  LabelFixture() {
    SyntheticSpec spec;
    spec.rows = 200'000;
    ds = make_synthetic_sales(spec);
    queries = generate_workload(ds, synthetic_sales_template(ds, 10, 42)).queries;
  }
  static const LabelFixture& get() {
    static LabelFixture f;
    return f;
  }
};

struct PredictFixture {
  nnet::LstmModel model;
  std::vector<EncodedQuery> xs;

  PredictFixture() {
    nnet::ModelConfig c;
    c.seq_len = 13;
    c.input_width = 12;
    model = nnet::init(c);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 4096; ++i) {
      EncodedQuery q(c.seq_len, c.input_width);
      for (auto& cell : q.cells) cell = rng() & 1u;
      xs.push_back(q);
    }
  }
  static const PredictFixture& get() {
    static PredictFixture f;
    return f;
  }
};

void BM_LabelSerial(benchmark::State& st) {
  const auto& f = LabelFixture::get();
  for (auto _ : st) benchmark::DoNotOptimize(label_queries_serial(f.ds, f.queries));
  st.SetItemsProcessed(st.iterations() * std::int64_t(f.queries.size()));
}

void BM_LabelParallel(benchmark::State& st) {
  const auto& f = LabelFixture::get();
  for (auto _ : st) benchmark::DoNotOptimize(label_queries(f.ds, f.queries, int(st.range(0))));
  st.SetItemsProcessed(st.iterations() * std::int64_t(f.queries.size()));
}

void BM_LabelGrouped(benchmark::State& st) {
  const auto& f = LabelFixture::get();
  for (auto _ : st) benchmark::DoNotOptimize(label_queries_grouped(f.ds, f.queries, int(st.range(0))));
  st.SetItemsProcessed(st.iterations() * std::int64_t(f.queries.size()));
}

void BM_Forward(benchmark::State& st) {
  const auto& f = PredictFixture::get();
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(nnet::forward(f.model, f.xs[i++ % f.xs.size()]));
  st.SetItemsProcessed(st.iterations());
}

void BM_PredictSerial(benchmark::State& st) {
  const auto& f = PredictFixture::get();
  for (auto _ : st) benchmark::DoNotOptimize(nnet::predict_batch_serial(f.model, f.xs));
  st.SetItemsProcessed(st.iterations() * std::int64_t(f.xs.size()));
}

void BM_PredictParallel(benchmark::State& st) {
  const auto& f = PredictFixture::get();
  for (auto _ : st) benchmark::DoNotOptimize(nnet::predict_batch(f.model, f.xs, int(st.range(0))));
  st.SetItemsProcessed(st.iterations() * std::int64_t(f.xs.size()));
}

void worker_counts(benchmark::internal::Benchmark* b) {
  for (int w = 1; w <= std::max(4, omp_get_num_procs()); w *= 2) b->Arg(w);
}

}  // namespace

BENCHMARK(BM_LabelSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelParallel)->Apply(worker_counts)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelGrouped)->Apply(worker_counts)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->Apply(worker_counts)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
