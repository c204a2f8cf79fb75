#include "chest/channelgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace chest {

std::string_view to_string(ChannelKind kind) noexcept {
  switch (kind) {
    case ChannelKind::CorrelatedGaussian: return "correlated-gaussian";
    case ChannelKind::ClusteredMultipath: return "clustered-multipath";
    case ChannelKind::SparseAngular: return "sparse-angular";
    case ChannelKind::AnalyticGaussian: return "analytic-gaussian";
  }
  return "unknown";
}

ChannelKind parse_channel_kind(std::string_view name) {
  for (auto kind : {ChannelKind::CorrelatedGaussian, ChannelKind::ClusteredMultipath,
                    ChannelKind::SparseAngular, ChannelKind::AnalyticGaussian}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown channel kind '" + std::string(name) + "'");
}

void ChannelModelSpec::validate() const {
  if (nr < 1 || nt < 1) throw std::invalid_argument("channel spec: nr and nt must be >= 1");
  switch (kind) {
    case ChannelKind::CorrelatedGaussian:
      if (!(correlation >= 0.0 && correlation < 1.0)) {
        throw std::invalid_argument("channel spec: correlation must lie in [0, 1)");
      }
      break;
    case ChannelKind::ClusteredMultipath:
      if (clusters < 1 || rays_per_cluster < 1) {
        throw std::invalid_argument("channel spec: clusters and rays_per_cluster must be >= 1");
      }
      if (!(angle_spread >= 0.0) || !std::isfinite(angle_spread)) {
        throw std::invalid_argument("channel spec: angle_spread must be >= 0");
      }
      if (!(los_factor >= 0.0) || !std::isfinite(los_factor)) {
        throw std::invalid_argument("channel spec: los_factor must be >= 0");
      }
      break;
    case ChannelKind::SparseAngular:
      if (active_taps < 1 || active_taps > nt) {
        throw std::invalid_argument("channel spec: active_taps must lie in [1, nt]");
      }
      break;
    case ChannelKind::AnalyticGaussian:
      if (covariance.rows() != nt || covariance.cols() != nt) {
        throw std::invalid_argument("channel spec: covariance must be nt x nt");
      }
      psd_factor(covariance);  // throws on non-Hermitian / indefinite input
      break;
  }
}

ComplexVector ula_response(int n, double theta) {
  ComplexVector a(n);
  const double phase = std::numbers::pi * std::sin(theta);
  for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, phase * i);
  return a;
}

ComplexMatrix angular_transform(const ComplexMatrix& h) {
  return dft_matrix(h.rows()).adjoint() * h * dft_matrix(h.cols());
}

namespace {

// Rows of H are i.i.d. CN(0, C) as column vectors: H = W L^T, L L^H = C.
ComplexMatrix draw_row_gaussian(const ComplexMatrix& factor, int nr, RngStream& rng) {
  const ComplexMatrix w = sample_standard_complex_gaussian(nr, factor.rows(), rng);
  return w * factor.transpose();
}

ComplexMatrix draw_clustered(const ChannelModelSpec& spec, RngStream& rng) {
  const double half_pi = std::numbers::pi / 2.0;
  ComplexMatrix h = ComplexMatrix::Zero(spec.nr, spec.nt);
  const int paths = spec.clusters * spec.rays_per_cluster;
  const double ray_scale = std::sqrt(1.0 / paths);
  for (int c = 0; c < spec.clusters; ++c) {
    const double aoa = (2.0 * rng.uniform() - 1.0) * half_pi;
    const double aod = (2.0 * rng.uniform() - 1.0) * half_pi;
    for (int r = 0; r < spec.rays_per_cluster; ++r) {
      const double ray_aoa = aoa + spec.angle_spread * rng.normal();
      const double ray_aod = aod + spec.angle_spread * rng.normal();
      const Complex gain =
          ray_scale * Complex(rng.normal(), rng.normal()) * std::sqrt(0.5);
      h += gain * ula_response(spec.nr, ray_aoa) * ula_response(spec.nt, ray_aod).adjoint();
    }
  }
  if (spec.los_factor > 0.0) {
    const double k = spec.los_factor;
    const double aoa = (2.0 * rng.uniform() - 1.0) * half_pi;
    const double aod = (2.0 * rng.uniform() - 1.0) * half_pi;
    const Complex los_phase = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    const ComplexMatrix los =
        los_phase * ula_response(spec.nr, aoa) * ula_response(spec.nt, aod).adjoint();
    h = std::sqrt(k / (k + 1.0)) * los + std::sqrt(1.0 / (k + 1.0)) * h;
  }
  return h;
}

ComplexMatrix draw_sparse_angular(const ChannelModelSpec& spec, const ComplexMatrix& fr,
                                  const ComplexMatrix& ft, RngStream& rng) {
  std::vector<int> bins(spec.nt);
  std::iota(bins.begin(), bins.end(), 0);
  // partial Fisher-Yates; std::shuffle's draw pattern is implementation-defined
  for (int i = 0; i < spec.active_taps; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.nt - i)));
    std::swap(bins[i], bins[j]);
  }
  ComplexMatrix x = ComplexMatrix::Zero(spec.nr, spec.nt);
  const double scale = std::sqrt(static_cast<double>(spec.nt) / spec.active_taps);
  for (int i = 0; i < spec.active_taps; ++i) {
    x.col(bins[i]) = scale * sample_standard_complex_gaussian(spec.nr, 1, rng);
  }
  return fr * x * ft.adjoint();
}

}  // namespace

double mean_entry_power(std::span<const ComplexMatrix> samples) {
  double total = 0.0;
  double count = 0.0;
  for (const auto& s : samples) {
    total += s.squaredNorm();
    count += static_cast<double>(s.size());
  }
  if (count == 0.0) throw std::invalid_argument("mean_entry_power: no entries");
  return total / count;
}

Dataset generate_dataset(const ChannelModelSpec& spec, std::size_t n, const RngStream& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");

  ComplexMatrix factor;
  if (spec.kind == ChannelKind::CorrelatedGaussian) {
    factor = psd_factor(exponential_correlation(spec.nt, spec.correlation));
  } else if (spec.kind == ChannelKind::AnalyticGaussian) {
    factor = psd_factor(spec.covariance);
  }
  ComplexMatrix fr;
  ComplexMatrix ft;
  if (spec.kind == ChannelKind::SparseAngular) {
    fr = dft_matrix(spec.nr);
    ft = dft_matrix(spec.nt);
  }

  Dataset out{spec, {}, rng.seed()};
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream local = rng.substream(i);
    switch (spec.kind) {
      case ChannelKind::CorrelatedGaussian:
      case ChannelKind::AnalyticGaussian:
        out.samples.push_back(draw_row_gaussian(factor, spec.nr, local));
        break;
      case ChannelKind::ClusteredMultipath:
        out.samples.push_back(draw_clustered(spec, local));
        break;
      case ChannelKind::SparseAngular:
        out.samples.push_back(draw_sparse_angular(spec, fr, ft, local));
        break;
    }
  }

  const double power = mean_entry_power(out.samples);
  if (!(power > 0.0) || !std::isfinite(power)) {
    throw std::runtime_error("generate_dataset: degenerate sample power");
  }
  const double scale = 1.0 / std::sqrt(power);
  for (auto& s : out.samples) s *= scale;
  return out;
}

MeasurementSetup make_setup(ComplexMatrix pilots, double noise_variance) {
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("make_setup: noise variance must be positive");
  }
  MeasurementSetup setup;
  setup.factors = svd(pilots);
  setup.pilots = std::move(pilots);
  setup.noise_variance = noise_variance;
  return setup;
}

double noise_variance_for_snr(int nt, double snr_db) {
  return static_cast<double>(nt) / std::pow(10.0, snr_db / 10.0);
}

ComplexMatrix make_pilots(int nt, int np, RngStream& rng) {
  if (nt < 1 || np < 1) throw std::invalid_argument("make_pilots: nt and np must be >= 1");
  const double a = 1.0 / std::sqrt(2.0);
  ComplexMatrix p(nt, np);
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      const auto symbol = rng.below(4);
      p(i, j) = Complex((symbol & 1U) ? -a : a, (symbol & 2U) ? -a : a);
    }
  }
  return p;
}

ComplexMatrix simulate_measurement(const ComplexMatrix& h, const MeasurementSetup& setup,
                                   RngStream& rng) {
  if (h.cols() != setup.nt()) {
    throw std::invalid_argument("simulate_measurement: H has " + std::to_string(h.cols()) +
                                " columns but P has " + std::to_string(setup.nt()) + " rows");
  }
  const ComplexMatrix noise = sample_standard_complex_gaussian(h.rows(), setup.np(), rng);
  return h * setup.pilots + std::sqrt(setup.noise_variance) * noise;
}

double nmse(const ComplexMatrix& truth, const ComplexMatrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw std::invalid_argument("nmse: shape mismatch");
  }
  const double ref = truth.squaredNorm();
  if (ref == 0.0) throw std::invalid_argument("nmse: reference channel has zero norm");
  return (truth - estimate).squaredNorm() / ref;
}

double nmse(std::span<const ComplexMatrix> truth, std::span<const ComplexMatrix> estimate) {
  if (truth.size() != estimate.size() || truth.empty()) {
    throw std::invalid_argument("nmse: lists must be nonempty and of equal length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += nmse(truth[i], estimate[i]);
  return acc / static_cast<double>(truth.size());
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace chest
