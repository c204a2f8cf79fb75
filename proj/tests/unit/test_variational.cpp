#include "chest/variational.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace chest;

namespace {

struct Fixture {
  NoiseSchedule schedule = linear_schedule();
  ComplexMatrix h;
  MeasurementSetup setup;
  ComplexMatrix y;
  PriorSet priors;
};

Fixture make_fixture(std::uint64_t seed, int np = 8) {
  Fixture f;
  RngStream r(seed);
  const ComplexMatrix c = exponential_correlation(16, 0.9);
  f.h = sample_standard_complex_gaussian(4, 16, r) * psd_factor(c).transpose();
  f.setup = make_setup(make_pilots(16, np, r), noise_variance_for_snr(16, 15.0));
  f.y = simulate_measurement(f.h, f.setup, r);
  f.priors.push_back(std::make_shared<AnalyticGaussianPrior>(c, 4, f.schedule, "corr"));
  f.priors.push_back(std::make_shared<AnalyticGaussianPrior>(
      exponential_correlation(16, 0.0), 4, f.schedule, "white"));
  return f;
}

}  // namespace

TEST(Digamma, MatchesBoost) {
  for (double x : {1e-3, 0.1, 0.5, 1.0, 1.5, 2.5, 5.99, 6.0, 7.3, 30.0, 100.0, 1e6}) {
    const double want = boost::math::digamma(x);
    EXPECT_NEAR(digamma(x), want, 1e-13 * std::max(1.0, std::abs(want))) << "x=" << x;
  }
  EXPECT_NEAR(digamma(1.0), -0.5772156649015329, 1e-14);
  EXPECT_THROW(static_cast<void>(digamma(0.0)), std::domain_error);
}

TEST(Digamma, Recurrence) {
  for (double x : {0.3, 2.0, 11.7}) EXPECT_NEAR(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-13);
}

TEST(ExpectedLogPi, UniformDirichlet) {
  const std::vector<double> g{1.0, 1.0};
  for (double v : expected_log_pi(g)) EXPECT_NEAR(v, -1.0, 1e-14);
  const std::vector<double> g3{2.0, 3.0, 5.0};
  const auto e = expected_log_pi(g3);
  EXPECT_NEAR(e[2], boost::math::digamma(5.0) - boost::math::digamma(10.0), 1e-13);
}

TEST(Softmax, ShiftInvarianceAndExtremes) {
  const std::vector<double> a{0.3, -1.2, 2.0, 0.0};
  std::vector<double> b = a;
  for (auto& v : b) v += 1234.5;
  const auto pa = softmax(a);
  const auto pb = softmax(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(pa[i], pb[i], 1e-12);
    sum += pa[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  const auto big = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_EQ(big[0], 1.0);
  EXPECT_TRUE(std::isfinite(big[1]));
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1U);
  EXPECT_EQ(argmax(std::vector<double>{3.0}), 0U);
}

TEST(UpdateQpi, AddsResponsibilities) {
  const std::vector<double> g{1.0, 2.5, 0.25};
  const std::vector<double> rho{0.125, 0.5, 0.375};
  EXPECT_EQ(update_qpi(g, rho), (std::vector<double>{1.125, 3.0, 0.625}));
  EXPECT_THROW(static_cast<void>(update_qpi(g, std::vector<double>{1.0})), std::invalid_argument);
}

TEST(DataConsistency, HalfInverseNoiseScaling) {
  const Fixture f = make_fixture(1);
  const double want = -(f.y - f.h * f.setup.pilots).squaredNorm() / (2.0 * f.setup.noise_variance);
  EXPECT_NEAR(data_consistency_loglik(f.y, f.h, f.setup), want, 1e-12 * std::abs(want));
}

TEST(UpdateQz, SharedDrawsAndLogitComposition) {
  const Fixture f = make_fixture(2);
  const std::vector<int> subset{1, 34, 67, 100};
  const std::vector<double> gamma{1.5, 1.0};
  RngStream r(9);
  RngStream copy(9);
  const QzUpdate q = update_qz(f.h, f.y, f.setup, f.priors, gamma, subset, r);

  std::vector<ComplexMatrix> noises;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    noises.push_back(sample_standard_complex_gaussian(4, 16, copy));
  }
  const ComplexMatrix refine_noise = sample_standard_complex_gaussian(4, 16, copy);
  std::vector<double> logits;
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(q.log_prior[k], log_prior_elbo(*f.priors[k], f.h, subset, noises));
    const ComplexMatrix refined = refine_estimate(*f.priors[k], f.h, 100, refine_noise);
    EXPECT_EQ(q.refined[k], refined);
    logits.push_back(q.log_prior[k] + q.expected_log_pi[k] +
                     data_consistency_loglik(f.y, refined, f.setup));
  }
  const auto rho = softmax(logits);
  EXPECT_NEAR(q.rho[0], rho[0], 1e-15);
  // both streams consumed the same number of draws
  EXPECT_EQ(r.bits(), copy.bits());
  // the true (correlated) prior explains the true channel better
  EXPECT_GT(q.rho[0], 0.5);
}

TEST(UpdateQz, ExplicitRefineStep) {
  const Fixture f = make_fixture(2);
  const std::vector<int> subset{1, 34, 67, 100};
  const std::vector<double> gamma{1.0, 1.0};
  RngStream r(9);
  RngStream copy(9);
  const QzUpdate q = update_qz(f.h, f.y, f.setup, f.priors, gamma, subset, r, 90);
  for (std::size_t i = 0; i <= subset.size(); ++i) {
    static_cast<void>(sample_standard_complex_gaussian(4, 16, copy));
  }
  RngStream again(9);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    static_cast<void>(sample_standard_complex_gaussian(4, 16, again));
  }
  const ComplexMatrix refine_noise = sample_standard_complex_gaussian(4, 16, again);
  EXPECT_EQ(q.refined[1], refine_estimate(*f.priors[1], f.h, 90, refine_noise));
  EXPECT_EQ(r.bits(), copy.bits());

  VBOptions opt;
  opt.refine_step = 101;
  EXPECT_THROW(dmvb_estimate(f.y, f.setup, f.priors, f.schedule, opt, r), std::invalid_argument);
}

TEST(Dmvb, SingleExpertEqualsDeterministicEstimate) {
  const Fixture f = make_fixture(3);
  const PriorSet one{f.priors[0]};
  VBOptions opt;
  opt.s = 2.0;
  RngStream a(4);
  RngStream b(4);
  const EstimatorReport rep = dmvb_estimate(f.y, f.setup, one, f.schedule, opt, a, &f.h);
  const std::vector<double> rho{1.0};
  const ComplexMatrix det = deterministic_dm_estimate(f.y, f.setup, one, rho, 2.0, f.schedule, b);
  EXPECT_EQ(rep.estimate, det);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_EQ(rep.final_rho(), rho);
  EXPECT_EQ(rep.reverse_steps, 100);
  ASSERT_TRUE(rep.nmse.has_value());
  EXPECT_DOUBLE_EQ(*rep.nmse, nmse(f.h, det));
}

TEST(Dmvb, StopsWithinBoundAndIsReproducible) {
  const Fixture f = make_fixture(5);
  VBOptions opt;
  opt.max_iterations = 4;
  RngStream a(6);
  RngStream b(6);
  const EstimatorReport x = dmvb_estimate(f.y, f.setup, f.priors, f.schedule, opt, a);
  const EstimatorReport y = dmvb_estimate(f.y, f.setup, f.priors, f.schedule, opt, b);
  EXPECT_LE(x.iterations, 4);
  EXPECT_EQ(static_cast<int>(x.rho_trajectory.size()), x.iterations);
  EXPECT_EQ(x.estimate, y.estimate);
  EXPECT_EQ(x.rho_trajectory, y.rho_trajectory);
  EXPECT_EQ(x.reverse_steps, 100LL * x.iterations);
  for (const auto& rho : x.rho_trajectory) EXPECT_NEAR(rho[0] + rho[1], 1.0, 1e-14);
}

TEST(Dmvb, WarmStartRuns) {
  const Fixture f = make_fixture(7);
  VBOptions opt;
  opt.warm_start = true;
  opt.tolerance = 1e-12;
  opt.max_iterations = 3;
  RngStream r(1);
  const EstimatorReport rep = dmvb_estimate(f.y, f.setup, f.priors, f.schedule, opt, r, &f.h);
  EXPECT_GE(rep.iterations, 1);
  EXPECT_LE(rep.iterations, 3);
  EXPECT_LT(*rep.nmse, 1.0);
}

TEST(Dmvb, RejectsBadOptions) {
  const Fixture f = make_fixture(8);
  RngStream r(1);
  VBOptions opt;
  opt.max_iterations = 0;
  EXPECT_THROW(dmvb_estimate(f.y, f.setup, f.priors, f.schedule, opt, r), std::invalid_argument);
  opt = {};
  opt.subset = {0, 5};
  EXPECT_THROW(dmvb_estimate(f.y, f.setup, f.priors, f.schedule, opt, r), std::invalid_argument);
  EXPECT_THROW(dmvb_estimate(f.y, f.setup, {}, f.schedule, VBOptions{}, r), std::invalid_argument);
}
