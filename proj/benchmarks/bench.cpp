#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "slscan/decode.hpp"
#include "slscan/patterns.hpp"
#include "slscan/register.hpp"
#include "slscan/simulator.hpp"
#include "slscan/triangulate.hpp"

namespace {

using namespace slscan;

StereoRig bench_rig() {
  RigSpec spec;
  spec.camera_distortion = Distortion(0.05, 0, 0, 0, 0);
  spec.projector_distortion = Distortion(0.05, 0, 0, 0, 0);
  return make_rig(spec);
}

struct TriangulationInputs {
  std::vector<int> u, v;
  std::vector<double> p;
};

TriangulationInputs random_inputs(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> u(0, 639), v(0, 479);
  std::uniform_real_distribution<double> p(200.0, 700.0);
  TriangulationInputs in;
  for (std::size_t i = 0; i < n; ++i) {
    in.u.push_back(u(rng));
    in.v.push_back(v(rng));
    in.p.push_back(p(rng));
  }
  return in;
}

void BM_TriangulateTable(benchmark::State& state) {
  const StereoRig rig = bench_rig();
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  const TriangulationInputs in = random_inputs(4096);
  for (auto _ : state) {
    for (std::size_t i = 0; i < in.p.size(); ++i) benchmark::DoNotOptimize(table.evaluate(in.u[i], in.v[i], in.p[i]));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.p.size()));
}
BENCHMARK(BM_TriangulateTable);

void BM_TriangulateDirect(benchmark::State& state) {
  const StereoRig rig = bench_rig();
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  const TriangulationInputs in = random_inputs(4096);
  for (auto _ : state) {
    for (std::size_t i = 0; i < in.p.size(); ++i) {
      benchmark::DoNotOptimize(triangulate_pixel(rig, table.ideal_pixel(in.u[i], in.v[i]), in.p[i], ProjectorAxis::u));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.p.size()));
}
BENCHMARK(BM_TriangulateDirect);

void BM_TableBuild(benchmark::State& state) {
  const StereoRig rig = bench_rig();
  for (auto _ : state) benchmark::DoNotOptimize(TriangulationTable::build(rig, ProjectorAxis::u));
}
BENCHMARK(BM_TableBuild)->Unit(benchmark::kMillisecond);

FrameSet plane_frames(int steps) {
  PatternSpec spec;
  spec.steps = steps;
  spec.n_fringe = 16;
  RenderConfig cfg;
  cfg.noise_sigma = 0.005;
  cfg.seed = 3;
  return render_sequence(bench_rig(), Scene(Plane{Vec3(0, 0, 0.5), Vec3(0, 0, -1)}), generate(spec), cfg).frames;
}

void BM_DecodeFull(benchmark::State& state) {
  const FrameSet frames = plane_frames(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(decode_full(frames));
  state.SetItemsProcessed(state.iterations() * frames.width() * frames.height());
}
BENCHMARK(BM_DecodeFull)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Triangulate640x480(benchmark::State& state) {
  const StereoRig rig = bench_rig();
  const DecodeResult decoded = decode_full(plane_frames(3));
  const TriangulationTable table = TriangulationTable::build(rig, ProjectorAxis::u);
  for (auto _ : state) benchmark::DoNotOptimize(triangulate_map(decoded.coords, rig, table));
  state.SetItemsProcessed(state.iterations() * 640 * 480);
}
BENCHMARK(BM_Triangulate640x480)->Unit(benchmark::kMillisecond);

void BM_PhaseCorrelate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD f(n, n), m(n, n);
  for (auto& v : f.pixels()) v = u(rng);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) m(x, y) = f((x + n - 3) % n, (y + n - 1) % n);
  }
  for (auto _ : state) benchmark::DoNotOptimize(phase_correlate(f, m, AxisConstraint::none));
}
BENCHMARK(BM_PhaseCorrelate)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
