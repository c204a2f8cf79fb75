#include "chest/denoiser.hpp"
#include "chest/training.hpp"
#include "chest/weights_io.hpp"

#include "tempdir.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <vector>

using namespace chest;

namespace {

DenoiserConfig small_config() {
  DenoiserConfig c;
  c.nr = 4;
  c.nt = 4;
  c.time_dim = 8;
  c.widths = {8, 8, 8, 8};
  return c;
}

// Random weights with nonzero biases, so every ReLU sees both signs.
DenoiserNetwork random_net(const DenoiserConfig& cfg, std::uint64_t seed) {
  DenoiserNetwork net(cfg);
  RngStream r(seed);
  net.initialize(r);
  for (auto& p : net.parameters()) p += 0.05 * r.normal();
  return net;
}

}  // namespace

TEST(DenoiserConfig, ParameterBudgets) {
  EXPECT_EQ(DenoiserNetwork(DenoiserConfig{}).parameter_count(), 14290U);
  DenoiserConfig agg;
  agg.widths = {32, 64, 36, 32};
  EXPECT_EQ(DenoiserNetwork(agg).parameter_count(), 55078U);
  DenoiserConfig bad;
  bad.time_dim = 7;
  EXPECT_THROW(DenoiserNetwork{bad}, std::invalid_argument);
}

TEST(Denoiser, LayoutIsContiguous) {
  const DenoiserNetwork net(small_config());
  std::size_t next = 0;
  for (const auto& b : net.layout()) {
    EXPECT_EQ(b.offset, next) << b.name;
    std::size_t n = 1;
    for (int d : b.shape) n *= static_cast<std::size_t>(d);
    EXPECT_EQ(b.size, n) << b.name;
    next += b.size;
  }
  EXPECT_EQ(next, net.parameter_count());
}

TEST(Denoiser, BackwardMatchesFiniteDifferences) {
  const DenoiserConfig cfg = small_config();
  DenoiserNetwork net = random_net(cfg, 21);
  RngStream r(22);
  const int batch = 2;
  Eigen::MatrixXd input(2, batch * cfg.positions());
  for (Eigen::Index i = 0; i < input.size(); ++i) input.data()[i] = r.normal();
  Eigen::MatrixXd weight(2, input.cols());
  for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = r.normal();
  const std::vector<int> steps{3, 71};

  ForwardTape tape;
  static_cast<void>(net.forward(input, steps, &tape));
  std::vector<double> grad(net.parameter_count(), 0.0);
  Eigen::MatrixXd grad_input;
  net.backward(tape, weight, grad, &grad_input);

  auto loss = [&](const DenoiserNetwork& n, const Eigen::MatrixXd& x) {
    return n.forward(x, steps).cwiseProduct(weight).sum();
  };
  const double h = 1e-6;
  std::vector<double> fd(grad.size());
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = loss(net, input);
    params[i] = keep - h;
    const double down = loss(net, input);
    params[i] = keep;
    fd[i] = (up - down) / (2.0 * h);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    num += (grad[i] - fd[i]) * (grad[i] - fd[i]);
    den += fd[i] * fd[i];
  }
  EXPECT_LT(std::sqrt(num / den), 1e-5);

  Eigen::MatrixXd fd_input(input.rows(), input.cols());
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    Eigen::MatrixXd a = input;
    Eigen::MatrixXd b = input;
    a.data()[i] += h;
    b.data()[i] -= h;
    fd_input.data()[i] = (loss(net, a) - loss(net, b)) / (2.0 * h);
  }
  EXPECT_LT((grad_input - fd_input).norm() / fd_input.norm(), 1e-5);
}

TEST(Denoiser, BackwardAccumulatesAndNeedsTape) {
  const DenoiserConfig cfg = small_config();
  const DenoiserNetwork net = random_net(cfg, 3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, cfg.positions());
  const std::vector<int> steps{5};
  ForwardTape tape;
  std::vector<double> grad(net.parameter_count(), 0.0);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Ones(2, cfg.positions());
  EXPECT_THROW(net.backward(tape, g, grad), std::logic_error);
  static_cast<void>(net.forward(x, steps, &tape));
  net.backward(tape, g, grad);
  const std::vector<double> once = grad;
  net.backward(tape, g, grad);
  for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_DOUBLE_EQ(grad[i], 2.0 * once[i]);
}

TEST(Denoiser, BatchMatchesSingleSamples) {
  const DenoiserConfig cfg = small_config();
  const DenoiserNetwork net = random_net(cfg, 4);
  RngStream r(5);
  const ComplexMatrix a = sample_standard_complex_gaussian(4, 4, r);
  const ComplexMatrix b = sample_standard_complex_gaussian(4, 4, r);
  Eigen::MatrixXd both(2, 32);
  both << to_channels(a), to_channels(b);
  const std::vector<int> steps{10, 90};
  const Eigen::MatrixXd out = net.forward(both, steps);
  EXPECT_LT((from_channels(out, 4, 4, 0) - net.predict(a, 10)).norm(), 1e-12);
  EXPECT_LT((from_channels(out, 4, 4, 1) - net.predict(b, 90)).norm(), 1e-12);
}

TEST(Denoiser, ChannelPacking) {
  ComplexMatrix h(2, 3);
  h << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(7, 8), Complex(9, 10), Complex(11, 12);
  const Eigen::MatrixXd x = to_channels(h);
  EXPECT_DOUBLE_EQ(x(0, 4), 9.0);
  EXPECT_DOUBLE_EQ(x(1, 4), 10.0);
  EXPECT_EQ(from_channels(x, 2, 3), h);
}

TEST(Denoiser, FilmModulation) {
  Eigen::MatrixXd f(2, 3);
  f << 1, 2, 3, 4, 5, 6;
  RealVector scale(2);
  scale << 1.0, -0.5;
  RealVector shift(2);
  shift << 0.5, 1.0;
  const Eigen::MatrixXd m = film_modulate(f, scale, shift);
  EXPECT_DOUBLE_EQ(m(0, 2), 6.5);
  EXPECT_DOUBLE_EQ(m(1, 0), 3.0);
  EXPECT_THROW(film_modulate(f, RealVector::Zero(3), shift), std::invalid_argument);
}

TEST(Training, AdamFirstStepIsLearningRateSized) {
  Adam adam(2, 0.1);
  std::vector<double> p{1.0, -1.0};
  const std::vector<double> g{3.0, -0.001};
  adam.step(p, g);
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -0.9, 1e-4);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Training, StepsPerEpoch) {
  EXPECT_EQ(steps_per_epoch(40000, 128, 0), 313);
  EXPECT_EQ(steps_per_epoch(40000, 128, 313), 313);
  EXPECT_EQ(steps_per_epoch(10000, 128, 313), 313);
  EXPECT_EQ(steps_per_epoch(1000, 128, 313), 313);
  EXPECT_EQ(steps_per_epoch(10, 4, 0), 3);
  EXPECT_THROW(static_cast<void>(steps_per_epoch(0, 4, 1)), std::invalid_argument);
}

TEST(Training, LossGradientMatchesFiniteDifferences) {
  const DenoiserConfig cfg = small_config();
  DenoiserNetwork net = random_net(cfg, 6);
  const NoiseSchedule s = linear_schedule(20, 1e-3, 0.2);
  RngStream r(7);
  std::vector<ComplexMatrix> clean;
  std::vector<ComplexMatrix> noise;
  for (int i = 0; i < 3; ++i) {
    clean.push_back(sample_standard_complex_gaussian(4, 4, r));
    noise.push_back(sample_standard_complex_gaussian(4, 4, r));
  }
  const std::vector<int> steps{1, 10, 20};
  std::vector<double> grad(net.parameter_count(), 0.0);
  const double loss = batch_loss_and_gradient(net, clean, steps, noise, s, grad);
  EXPECT_GT(loss, 0.0);
  auto params = net.parameters();
  std::vector<double> scratch(grad.size());
  for (std::size_t i : {std::size_t{0}, std::size_t{200}, params.size() - 1}) {
    const double keep = params[i];
    params[i] = keep + 1e-6;
    const double up = batch_loss_and_gradient(net, clean, steps, noise, s, scratch);
    params[i] = keep - 1e-6;
    const double down = batch_loss_and_gradient(net, clean, steps, noise, s, scratch);
    params[i] = keep;
    EXPECT_NEAR(grad[i], (up - down) / 2e-6, 1e-6 * std::max(1.0, std::abs(grad[i])));
  }
}

TEST(Training, LossDecreasesAndIsReproducible) {
  const DenoiserConfig cfg = small_config();
  const NoiseSchedule s = linear_schedule(20, 1e-3, 0.2);
  RngStream data(1);
  std::vector<ComplexMatrix> samples;
  for (int i = 0; i < 256; ++i) {
    const ComplexMatrix w = sample_standard_complex_gaussian(4, 4, data);
    samples.push_back(w * psd_factor(exponential_correlation(4, 0.9)).transpose());
  }
  TrainOptions opt;
  opt.epochs = 15;
  opt.batch_size = 32;
  opt.learning_rate = 3e-3;
  auto run = [&] {
    DenoiserNetwork net(cfg);
    RngStream r(2);
    net.initialize(r);
    auto losses = train_expert(samples, net, s, opt, r);
    return std::pair{losses, std::vector<double>(net.parameters().begin(), net.parameters().end())};
  };
  const auto [losses, params] = run();
  ASSERT_EQ(losses.size(), 15U);
  EXPECT_LT(losses.back(), losses.front());
  EXPECT_EQ(run().second, params);
}

TEST(WeightsIo, RoundTripAndRejectsDamage) {
  testutil::TempDir dir("wt");
  WeightsFile w;
  w.network = std::make_shared<DenoiserNetwork>(random_net(small_config(), 9));
  w.schedule = {50, 2e-4, 0.05};
  w.expert_id = "sparse";
  w.seed = 77;
  write_weights(w, dir / "a.dmwt");
  const WeightsFile back = read_weights(dir / "a.dmwt");
  EXPECT_EQ(back.expert_id, "sparse");
  EXPECT_EQ(back.seed, 77U);
  EXPECT_EQ(back.schedule.steps, 50);
  EXPECT_DOUBLE_EQ(back.schedule.beta_end, 0.05);
  EXPECT_EQ(back.network->config().widths, w.network->config().widths);
  const auto a = w.network->parameters();
  const auto b = back.network->parameters();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));

  std::ifstream in(dir / "a.dmwt", std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  {
    std::ofstream out(dir / "long.dmwt", std::ios::binary);
    out << bytes << "x";
  }
  EXPECT_THROW(read_weights(dir / "long.dmwt"), std::runtime_error);
  {
    std::ofstream out(dir / "short.dmwt", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 8);
  }
  EXPECT_THROW(read_weights(dir / "short.dmwt"), std::runtime_error);
}
