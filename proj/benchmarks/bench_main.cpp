// Microbenchmarks for the hot paths: parsing, golden tracing, injection
// campaigns, feature assembly, and the trained-predictor inference path.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "faultcast/corpus.hpp"
#include "faultcast/features.hpp"
#include "faultcast/inject.hpp"
#include "faultcast/interp.hpp"
#include "faultcast/ir.hpp"
#include "faultcast/models.hpp"
#include "faultcast/rng.hpp"
#include "faultcast/trace.hpp"
#include "faultcast/whiten.hpp"

namespace {

using namespace faultcast;

const corpus::GeneratedKernel& kernel() {
  static corpus::GeneratedKernel k = corpus::generate_kernel(1, 0);
  return k;
}

trace::Trace golden_trace() {
  auto p = ir::parse_program(kernel().program);
  auto in = fi::parse_bindings(kernel().inputs);
  trace::TraceBuilder b;
  fi::execute(p, in, {}, {&b});
  return b.take();
}

void BM_ParseProgram(benchmark::State& state) {
  for (auto _ : state) {
    auto p = ir::parse_program(kernel().program);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_ParseProgram);

void BM_GoldenTrace(benchmark::State& state) {
  auto p = ir::parse_program(kernel().program);
  auto in = fi::parse_bindings(kernel().inputs);
  fi::Engine engine(p);
  for (auto _ : state) {
    trace::TraceBuilder b;
    auto out = engine.run(in, {}, {&b});
    benchmark::DoNotOptimize(out);
    benchmark::DoNotOptimize(b.trace());
  }
}
BENCHMARK(BM_GoldenTrace);

void BM_Campaign200(benchmark::State& state) {
  auto p = ir::parse_program(kernel().program);
  auto in = fi::parse_bindings(kernel().inputs);
  fi::Verifier v{1e-6, false};
  fi::CampaignConfig cfg;
  cfg.runs = 200;
  for (auto _ : state) {
    auto res = fi::run_campaign(p, in, v, cfg);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_Campaign200);

void BM_FeatureAssembly(benchmark::State& state) {
  trace::Trace t = golden_trace();
  for (auto _ : state) {
    auto f = features::assemble_feature_vector(t);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_FeatureAssembly);

void BM_TraceRoundtrip(benchmark::State& state) {
  std::string text = trace::serialize_trace(golden_trace());
  for (auto _ : state) {
    auto t = trace::parse_trace_text(text);
    benchmark::DoNotOptimize(t);
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_TraceRoundtrip);

learn::Dataset synthetic_dataset(size_t rows) {
  SplitMix64 rng(9);
  learn::Dataset d;
  d.x = learn::Matrix(rows, features::kFeatureDims);
  for (size_t r = 0; r < rows; ++r) {
    d.ids.push_back("row" + std::to_string(r));
    for (size_t c = 0; c < d.x.cols; ++c) d.x.at(r, c) = rng.unit();
    d.success.push_back(0.25 + 0.5 * rng.unit());
    d.interruption.push_back(0.25 * rng.unit());
  }
  return d;
}

void BM_WhitenFit(benchmark::State& state) {
  learn::Dataset d = synthetic_dataset(150);
  for (auto _ : state) {
    auto w = learn::whiten_fit(d.x);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_WhitenFit);

void BM_PredictorPredict(benchmark::State& state) {
  learn::Dataset d = synthetic_dataset(60);
  auto pred = learn::train(learn::ModelSpec::defaults(learn::ModelKind::Gbrt), d,
                           learn::Target::Success, 1);
  std::vector<double> x(d.x.row(0).begin(), d.x.row(0).end());
  for (auto _ : state) {
    double y = pred.predict(x);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(BM_PredictorPredict);

}  // namespace

BENCHMARK_MAIN();
