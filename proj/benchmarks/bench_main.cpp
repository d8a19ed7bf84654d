#include <benchmark/benchmark.h>

#include "emitloc/channel.hpp"
#include "emitloc/crlb.hpp"
#include "emitloc/cwc.hpp"
#include "emitloc/estimator.hpp"
#include "emitloc/gpm.hpp"
#include "emitloc/scenario.hpp"
#include "emitloc/signal.hpp"

using namespace emitloc;

namespace {

struct Setup {
  FrequencyGrid grid;
  Scenario sc;
  TransmitSignal x;
  ObservationSet obs;
  std::vector<ChannelCovariance> covs;
};

// Exp2-like draw at 30 dB.
Setup make_setup(int K, int D, int M) {
  Setup s;
  s.grid = {K, 60e6};
  GeometryConfig geo;
  geo.num_stations = M;
  Rng rng = make_rng(1, 0, 0, "bench");
  s.sc = sample_scenario(geo, rng);
  const Pdp pdp = exp_pdp(ExpPdpParams::exp2());
  std::vector<ChannelRealization> ch;
  for (int m = 0; m < M; ++m) ch.push_back(sample_rayleigh_channel(pdp, rng));
  s.x = gen_white(K, D, rng);
  const double nv = noise_variance_for_snr(s.x, pdp.total_power(), 30.0);
  s.obs = synthesize_observations(s.sc, ch, s.x, s.grid, nv, rng);
  s.covs.assign(M, channel_covariance_eigen(pdp, s.grid, 1e-10));
  return s;
}

void BM_CostMatrix(benchmark::State& st) {
  const Setup s = make_setup(16, static_cast<int>(st.range(0)), 8);
  const UsageProblem p(s.obs, s.covs, s.sc.stations, estimate_magnitudes(s.obs, s.covs));
  for (auto _ : st) benchmark::DoNotOptimize(p.cost_matrix(s.sc.emitter));
}
BENCHMARK(BM_CostMatrix)->Arg(1)->Arg(10);

void BM_GpmSolve(benchmark::State& st) {
  const Setup s = make_setup(16, static_cast<int>(st.range(0)), 8);
  const UsageProblem p(s.obs, s.covs, s.sc.stations, estimate_magnitudes(s.obs, s.covs));
  const CMatrix A = p.cost_matrix(s.sc.emitter);
  GpmConfig cfg;
  cfg.validate_input = false;
  for (auto _ : st) benchmark::DoNotOptimize(gpm_solve(A, cfg));
}
BENCHMARK(BM_GpmSolve)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_CwcCombine(benchmark::State& st) {
  const Setup s = make_setup(16, 10, 8);
  for (auto _ : st) benchmark::DoNotOptimize(cwc_combine(s.obs));
}
BENCHMARK(BM_CwcCombine);

void BM_Fim(benchmark::State& st) {
  const Setup s = make_setup(16, static_cast<int>(st.range(0)), 8);
  FimOptions o;
  o.threads = 1;
  for (auto _ : st) benchmark::DoNotOptimize(fim(s.x, s.covs, s.sc, s.grid, s.obs.noise_variance, o));
}
BENCHMARK(BM_Fim)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
