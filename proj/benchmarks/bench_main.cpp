#include <benchmark/benchmark.h>

#include <random>

#include "isac/beamforming.hpp"
#include "isac/cubic.hpp"
#include "isac/harness.hpp"
#include "isac/sensing_dft.hpp"
#include "isac/sparse_recovery.hpp"
#include "isac/waveform.hpp"

using namespace isac;

namespace {

struct EchoFixture {
  SystemConfig cfg = desk_profile();
  std::vector<Eigen::MatrixXcd> x;
  EchoCube y;
  SelectionMask mask;

  EchoFixture() {
    const auto spec = make_sensing_spec(cfg, cfg.n_sel);
    mask = make_selection_mask(cfg, 1);
    x = transmit_blocks(initialize(cfg, spec, &mask).precoders(), generate_symbols(cfg, 1));
    y = generate_echo(random_scene(cfg, 1), x, cfg, 1, false);
  }
};

const EchoFixture& echo_fixture() {
  static const EchoFixture f;
  return f;
}

void BM_DftChain(benchmark::State& state) {
  const auto& f = echo_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(dft_process(f.y, f.x, f.cfg));
}
BENCHMARK(BM_DftChain)->Unit(benchmark::kMillisecond);

void BM_CsChain(benchmark::State& state) {
  const auto& f = echo_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(cs_process(f.y, f.x, f.mask, f.cfg));
}
BENCHMARK(BM_CsChain)->Unit(benchmark::kMillisecond);

void BM_BasisPursuitFiber(benchmark::State& state) {
  const int n_d = static_cast<int>(state.range(0));
  const auto a = measurement_operator(make_selection_mask(n_d, n_d, n_d / 4, 2));
  Eigen::VectorXcd truth = Eigen::VectorXcd::Zero(n_d);
  truth(n_d / 3) = {1.0, -0.5};
  const Eigen::VectorXcd b = a * truth;
  for (auto _ : state) benchmark::DoNotOptimize(basis_pursuit(a, b, n_d));
}
BENCHMARK(BM_BasisPursuitFiber)->Arg(32)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_UpdateW(benchmark::State& state) {
  const int n_t = static_cast<int>(state.range(0));
  const int k = 2;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  auto rand_mat = [&](int r, int c) {
    Eigen::MatrixXcd m(r, c);
    for (auto& v : m.reshaped()) v = {nd(rng), nd(rng)};
    return m;
  };
  const Eigen::MatrixXcd h = rand_mat(n_t, k);
  const FpTerms fp = fp_update(rand_mat(n_t, k), h, 0.5);
  const Eigen::VectorXcd x = rand_mat(n_t * k, 1);
  const Eigen::VectorXcd mu = rand_mat(n_t * k, 1);
  BlockInputs in;
  in.h = &h;
  in.fp = &fp;
  in.x = &x;
  in.mu = &mu;
  for (int g = 0; g < 4; ++g) {
    in.mm.push_back(mm_surrogate(rand_mat(n_t * k, 1), rand_mat(n_t, 1), k));
    in.gamma_var.push_back(1.0);
    in.gamma_dual.push_back(0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(update_w(assemble_quadratic(in, 500.0, 50.0)));
}
BENCHMARK(BM_UpdateW)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_SolverIterations(benchmark::State& state) {
  const auto cfg = desk_profile();
  const auto h = generate_channel(cfg, 4);
  const auto mask = make_selection_mask(cfg, 4);
  const auto spec = make_sensing_spec(cfg, cfg.n_sel);
  StopRule stop;
  stop.max_iter = 20;
  stop.eps_primal = stop.eps_dual = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(solve(cfg, h, spec, &mask, stop, {false, false}));
  state.SetItemsProcessed(state.iterations() * stop.max_iter);
}
BENCHMARK(BM_SolverIterations)->Unit(benchmark::kMillisecond);

void BM_CubicRoots(benchmark::State& state) {
  double c0 = -2.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(real_cubic_roots(1.3, 0.0, -0.7, c0));
    c0 = c0 < 2.5 ? c0 + 1e-3 : -2.5;
  }
}
BENCHMARK(BM_CubicRoots);

}  // namespace

BENCHMARK_MAIN();
