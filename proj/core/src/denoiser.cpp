#include "chest/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace chest {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMatrix>;
using Weights = Eigen::Map<RowMajorMatrix>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;
using Bias = Eigen::Map<Eigen::VectorXd>;

constexpr int kTaps = 9;

// Block indices into the parameter layout, in declaration order.
enum Block : std::size_t {
  kConv1W, kConv1B, kConv2W, kConv2B, kDenseW, kDenseB,
  kConv3W, kConv3B, kConv4W, kConv4B, kConv5W, kConv5B, kBlockCount
};

// Rows of the column matrix are ordered tap-major: row = tap * channels + c.
// With `relu` set, the input is passed through max(0, .) on the way.
void im2col(const Eigen::MatrixXd& x, bool relu, int nr, int nt, Eigen::MatrixXd& cols) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index hw = nr * nt;
  const Eigen::Index batch = x.cols() / hw;
  cols.setZero(channels * kTaps, x.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < nt; ++j) {
        const Eigen::Index col = b * hw + i * nt + j;
        for (int ky = 0; ky < 3; ++ky) {
          const int si = i + ky - 1;
          if (si < 0 || si >= nr) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sj = j + kx - 1;
            if (sj < 0 || sj >= nt) continue;
            const int tap = ky * 3 + kx;
            auto dst = cols.col(col).segment(tap * channels, channels);
            const auto src = x.col(b * hw + si * nt + sj);
            if (relu) {
              dst = src.cwiseMax(0.0);
            } else {
              dst = src;
            }
          }
        }
      }
    }
  }
}

void col2im(const Eigen::MatrixXd& cols, Eigen::Index channels, int nr, int nt,
            Eigen::MatrixXd& x) {
  const Eigen::Index hw = nr * nt;
  const Eigen::Index batch = cols.cols() / hw;
  x.setZero(channels, cols.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < nt; ++j) {
        const Eigen::Index col = b * hw + i * nt + j;
        for (int ky = 0; ky < 3; ++ky) {
          const int si = i + ky - 1;
          if (si < 0 || si >= nr) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sj = j + kx - 1;
            if (sj < 0 || sj >= nt) continue;
            const int tap = ky * 3 + kx;
            x.col(b * hw + si * nt + sj) += cols.col(col).segment(tap * channels, channels);
          }
        }
      }
    }
  }
}

}  // namespace

void DenoiserConfig::validate() const {
  if (nr < 1 || nt < 1) throw std::invalid_argument("denoiser: nr and nt must be >= 1");
  if (time_dim < 2 || time_dim % 2 != 0) {
    throw std::invalid_argument("denoiser: time embedding dimension must be even and >= 2");
  }
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("denoiser: layer widths must be >= 1");
  }
}

DenoiserNetwork::DenoiserNetwork(DenoiserConfig config) : config_(config) {
  config_.validate();
  const int w1 = config_.widths[0];
  const int smax = config_.widths[1];
  const int w2 = config_.widths[2];
  const int w3 = config_.widths[3];
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    layout_.push_back({std::move(name), std::move(shape), offset, size});
    offset += size;
  };
  add("conv1.weight", {w1, 3, 3, 2});
  add("conv1.bias", {w1});
  add("conv2.weight", {smax, 3, 3, w1});
  add("conv2.bias", {smax});
  add("time_dense.weight", {2 * smax, config_.time_dim});
  add("time_dense.bias", {2 * smax});
  add("conv3.weight", {w2, 3, 3, smax});
  add("conv3.bias", {w2});
  add("conv4.weight", {w3, 3, 3, w2});
  add("conv4.bias", {w3});
  add("conv5.weight", {2, 3, 3, w3});
  add("conv5.bias", {2});
  params_.assign(offset, 0.0);
}

void DenoiserNetwork::initialize(RngStream& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  for (std::size_t b = 0; b < kBlockCount; b += 2) {
    const ParameterBlock& block = layout_[b];
    double fan_in = 0.0;
    double fan_out = 0.0;
    if (block.shape.size() == 4) {
      fan_in = block.shape[1] * block.shape[2] * block.shape[3];
      fan_out = block.shape[0] * block.shape[1] * block.shape[2];
    } else {
      fan_in = block.shape[1];
      fan_out = block.shape[0];
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < block.size; ++i) {
      params_[block.offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
    }
  }
}

Eigen::MatrixXd DenoiserNetwork::forward(const Eigen::MatrixXd& input, std::span<const int> steps,
                                         ForwardTape* tape) const {
  const int nr = config_.nr;
  const int nt = config_.nt;
  const Eigen::Index hw = config_.positions();
  const auto batch = static_cast<Eigen::Index>(steps.size());
  if (input.rows() != 2 || batch == 0 || input.cols() != batch * hw) {
    throw std::invalid_argument("denoiser forward: expected a 2 x (B*" + std::to_string(hw) +
                                ") input with B = number of steps");
  }
  const int smax = config_.max_width();
  auto weights = [&](Block b) {
    const ParameterBlock& p = layout_[b];
    return ConstWeights(params_.data() + p.offset, p.shape[0],
                        static_cast<Eigen::Index>(p.size) / p.shape[0]);
  };
  auto bias = [&](Block b) {
    const ParameterBlock& p = layout_[b];
    return ConstBias(params_.data() + p.offset, static_cast<Eigen::Index>(p.size));
  };
  auto conv = [&](const Eigen::MatrixXd& cols, Block w, Block b, Eigen::MatrixXd& out) {
    out.noalias() = weights(w) * cols;
    out.colwise() += bias(b);
  };

  ForwardTape local;
  ForwardTape& w = tape != nullptr ? *tape : local;
  w.batch_ = 0;

  w.embed_.resize(config_.time_dim, batch);
  for (Eigen::Index b = 0; b < batch; ++b) w.embed_.col(b) = time_embedding(steps[b], config_.time_dim);
  w.modulation_.noalias() = weights(kDenseW) * w.embed_;
  w.modulation_.colwise() += bias(kDenseB);

  im2col(input, false, nr, nt, w.cols1_);
  conv(w.cols1_, kConv1W, kConv1B, w.pre1_);
  im2col(w.pre1_, true, nr, nt, w.cols2_);
  conv(w.cols2_, kConv2W, kConv2B, w.features_);

  w.modulated_.resize(w.features_.rows(), w.features_.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto scale = w.modulation_.col(b).head(smax);
    const auto shift = w.modulation_.col(b).tail(smax);
    w.modulated_.middleCols(b * hw, hw) =
        ((scale.array() + 1.0).matrix().asDiagonal() * w.features_.middleCols(b * hw, hw))
            .colwise() +
        shift;
  }

  im2col(w.modulated_, false, nr, nt, w.cols3_);
  conv(w.cols3_, kConv3W, kConv3B, w.pre3_);
  im2col(w.pre3_, true, nr, nt, w.cols4_);
  conv(w.cols4_, kConv4W, kConv4B, w.pre4_);
  im2col(w.pre4_, true, nr, nt, w.cols5_);
  Eigen::MatrixXd out;
  conv(w.cols5_, kConv5W, kConv5B, out);
  w.batch_ = batch;
  return out;
}

void DenoiserNetwork::backward(const ForwardTape& tape, const Eigen::MatrixXd& grad_output,
                               std::span<double> grad_params,
                               Eigen::MatrixXd* grad_input) const {
  if (!tape.recorded()) {
    throw std::logic_error("denoiser backward: no recorded forward pass");
  }
  if (grad_params.size() != params_.size()) {
    throw std::invalid_argument("denoiser backward: gradient buffer has wrong size");
  }
  const int nr = config_.nr;
  const int nt = config_.nt;
  const Eigen::Index hw = config_.positions();
  const Eigen::Index batch = tape.batch_;
  if (grad_output.rows() != 2 || grad_output.cols() != batch * hw) {
    throw std::invalid_argument("denoiser backward: output gradient shape mismatch");
  }
  const int smax = config_.max_width();
  auto weights = [&](Block b) {
    const ParameterBlock& p = layout_[b];
    return ConstWeights(params_.data() + p.offset, p.shape[0],
                        static_cast<Eigen::Index>(p.size) / p.shape[0]);
  };
  auto gweights = [&](Block b) {
    const ParameterBlock& p = layout_[b];
    return Weights(grad_params.data() + p.offset, p.shape[0],
                   static_cast<Eigen::Index>(p.size) / p.shape[0]);
  };
  auto gbias = [&](Block b) {
    const ParameterBlock& p = layout_[b];
    return Bias(grad_params.data() + p.offset, static_cast<Eigen::Index>(p.size));
  };
  // Accumulates weight/bias gradients of one conv layer; writes dL/d(input)
  // into `out` unless it is null.
  auto conv_back = [&](const Eigen::MatrixXd& g, const Eigen::MatrixXd& cols, Block w, Block b,
                       Eigen::Index in_channels, Eigen::MatrixXd* out) {
    // products land in owned (aligned) scratch first: Eigen's kernels pick
    // their summation order from the destination alignment, and caller
    // buffers have none we can rely on
    tape.dweights_.noalias() = g * cols.transpose();
    gweights(w) += tape.dweights_;
    tape.dbias_ = g.rowwise().sum();
    gbias(b) += tape.dbias_;
    if (out == nullptr) return;
    tape.dcols_.noalias() = weights(w).transpose() * g;
    col2im(tape.dcols_, in_channels, nr, nt, *out);
  };
  auto relu_mask = [](Eigen::MatrixXd& d, const Eigen::MatrixXd& pre) {
    d = (pre.array() > 0.0).select(d, 0.0);
  };
  Eigen::MatrixXd& a = tape.grad_a_;
  Eigen::MatrixXd& b = tape.grad_b_;

  conv_back(grad_output, tape.cols5_, kConv5W, kConv5B, config_.widths[3], &a);
  relu_mask(a, tape.pre4_);
  conv_back(a, tape.cols4_, kConv4W, kConv4B, config_.widths[2], &b);
  relu_mask(b, tape.pre3_);
  conv_back(b, tape.cols3_, kConv3W, kConv3B, smax, &a);  // a = dL/d(modulated)

  Eigen::MatrixXd dmodulation(2 * smax, batch);
  b.resize(a.rows(), a.cols());
  for (Eigen::Index s = 0; s < batch; ++s) {
    const auto scale = tape.modulation_.col(s).head(smax);
    const auto dm = a.middleCols(s * hw, hw);
    b.middleCols(s * hw, hw) = (scale.array() + 1.0).matrix().asDiagonal() * dm;
    dmodulation.col(s).head(smax) =
        dm.cwiseProduct(tape.features_.middleCols(s * hw, hw)).rowwise().sum();
    dmodulation.col(s).tail(smax) = dm.rowwise().sum();
  }
  tape.dweights_.noalias() = dmodulation * tape.embed_.transpose();
  gweights(kDenseW) += tape.dweights_;
  tape.dbias_ = dmodulation.rowwise().sum();
  gbias(kDenseB) += tape.dbias_;

  conv_back(b, tape.cols2_, kConv2W, kConv2B, config_.widths[0], &a);
  relu_mask(a, tape.pre1_);
  conv_back(a, tape.cols1_, kConv1W, kConv1B, 2, grad_input);
}

ComplexMatrix DenoiserNetwork::predict(const ComplexMatrix& noisy, int t) const {
  if (noisy.rows() != config_.nr || noisy.cols() != config_.nt) {
    throw std::invalid_argument("denoiser predict: input shape does not match the network");
  }
  const int step[1] = {t};
  return from_channels(forward(to_channels(noisy), step), config_.nr, config_.nt);
}

Eigen::MatrixXd film_modulate(const Eigen::MatrixXd& features, const RealVector& scale,
                              const RealVector& shift) {
  if (scale.size() != features.rows() || shift.size() != features.rows()) {
    throw std::invalid_argument("film_modulate: scale/shift length must equal channel count");
  }
  Eigen::MatrixXd out = (scale.array() + 1.0).matrix().asDiagonal() * features;
  out.colwise() += shift;
  return out;
}

Eigen::MatrixXd to_channels(const ComplexMatrix& h) {
  Eigen::MatrixXd x(2, h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    x(0, i) = h.data()[i].real();
    x(1, i) = h.data()[i].imag();
  }
  return x;
}

ComplexMatrix from_channels(const Eigen::MatrixXd& x, int nr, int nt, Eigen::Index sample) {
  const Eigen::Index hw = static_cast<Eigen::Index>(nr) * nt;
  if (x.rows() != 2 || x.cols() < (sample + 1) * hw) {
    throw std::invalid_argument("from_channels: block too small");
  }
  ComplexMatrix h(nr, nt);
  for (Eigen::Index i = 0; i < hw; ++i) {
    h.data()[i] = Complex(x(0, sample * hw + i), x(1, sample * hw + i));
  }
  return h;
}

DenoiserPrior::DenoiserPrior(std::shared_ptr<const DenoiserNetwork> net, NoiseSchedule schedule,
                             std::string id)
    : net_(std::move(net)), schedule_(std::move(schedule)), id_(std::move(id)) {
  if (!net_) throw std::invalid_argument("DenoiserPrior: null network");
}

ComplexMatrix DenoiserPrior::predict_epsilon(const ComplexMatrix& noisy, int t) const {
  if (t < 1 || t > schedule_.steps()) throw std::out_of_range("DenoiserPrior: bad step");
  return net_->predict(noisy, t);
}

}  // namespace chest
