#include "chest/denoiser.hpp"
#include "chest/estimators.hpp"
#include "chest/experts.hpp"
#include "chest/training.hpp"
#include "chest/variational.hpp"

#include <benchmark/benchmark.h>

using namespace chest;

namespace {

constexpr int kNr = 4;
constexpr int kNt = 16;

struct Problem {
  NoiseSchedule schedule = linear_schedule();
  MeasurementSetup setup;
  ComplexMatrix y;
};

Problem make_problem(int np) {
  Problem p;
  RngStream r(1);
  const ComplexMatrix h = sample_standard_complex_gaussian(kNr, kNt, r) *
                          psd_factor(exponential_correlation(kNt, 0.9)).transpose();
  p.setup = make_setup(make_pilots(kNt, np, r), noise_variance_for_snr(kNt, 15.0));
  p.y = simulate_measurement(h, p.setup, r);
  return p;
}

std::shared_ptr<const ScorePrior> network_prior(const std::array<int, 4>& widths,
                                                const NoiseSchedule& schedule,
                                                std::uint64_t seed) {
  DenoiserConfig cfg;
  cfg.widths = widths;
  auto net = std::make_shared<DenoiserNetwork>(cfg);
  RngStream r(seed);
  net->initialize(r);
  return std::make_shared<DenoiserPrior>(net, schedule, "net" + std::to_string(seed));
}

}  // namespace

static void BM_DenoiserForward(benchmark::State& state) {
  DenoiserConfig cfg;
  if (state.range(0) == 1) cfg.widths = {32, 64, 36, 32};
  DenoiserNetwork net(cfg);
  RngStream r(2);
  net.initialize(r);
  const ComplexMatrix x = sample_standard_complex_gaussian(kNr, kNt, r);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x, 50));
  state.SetLabel(std::to_string(net.parameter_count()) + " params");
}
BENCHMARK(BM_DenoiserForward)->Arg(0)->Arg(1);

// Arg: batch size, expert (0) or aggregated (1) widths.
static void BM_DenoiserTrainStep(benchmark::State& state) {
  DenoiserConfig cfg;
  if (state.range(1) == 1) cfg.widths = {32, 64, 36, 32};
  DenoiserNetwork net{cfg};
  RngStream r(3);
  net.initialize(r);
  const auto batch = static_cast<int>(state.range(0));
  std::vector<ComplexMatrix> clean;
  std::vector<ComplexMatrix> noise;
  std::vector<int> steps;
  for (int i = 0; i < batch; ++i) {
    clean.push_back(sample_standard_complex_gaussian(kNr, kNt, r));
    noise.push_back(sample_standard_complex_gaussian(kNr, kNt, r));
    steps.push_back(1 + static_cast<int>(r.below(100)));
  }
  const NoiseSchedule s = linear_schedule();
  std::vector<double> grad(net.parameter_count());
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    benchmark::DoNotOptimize(batch_loss_and_gradient(net, clean, steps, noise, s, grad));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DenoiserTrainStep)->Args({128, 0})->Args({128, 1})->Unit(benchmark::kMillisecond);

static void BM_DeterministicDmAnalytic(benchmark::State& state) {
  const Problem p = make_problem(8);
  const PriorSet priors{
      std::make_shared<AnalyticGaussianPrior>(exponential_correlation(kNt, 0.9), kNr, p.schedule)};
  const std::vector<double> rho{1.0};
  RngStream r(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(deterministic_dm_estimate(p.y, p.setup, priors, rho, 2.0, p.schedule, r));
  }
}
BENCHMARK(BM_DeterministicDmAnalytic)->Unit(benchmark::kMillisecond);

static void BM_DeterministicDmNetwork(benchmark::State& state) {
  const Problem p = make_problem(8);
  const PriorSet priors{network_prior({32, 64, 36, 32}, p.schedule, 5)};
  const std::vector<double> rho{1.0};
  RngStream r(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(deterministic_dm_estimate(p.y, p.setup, priors, rho, 2.0, p.schedule, r));
  }
}
BENCHMARK(BM_DeterministicDmNetwork)->Unit(benchmark::kMillisecond);

// K network experts, fixed number of outer iterations.
static void BM_DmvbNetwork(benchmark::State& state) {
  const Problem p = make_problem(8);
  PriorSet priors;
  for (int k = 0; k < state.range(0); ++k) {
    priors.push_back(network_prior({16, 32, 16, 16}, p.schedule, 10 + static_cast<std::uint64_t>(k)));
  }
  VBOptions opt;
  opt.max_iterations = 2;
  opt.tolerance = 1e-300;
  RngStream r(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dmvb_estimate(p.y, p.setup, priors, p.schedule, opt, r));
  }
}
BENCHMARK(BM_DmvbNetwork)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
