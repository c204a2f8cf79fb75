#include "chest/numerics.hpp"

#include <cmath>
#include <numbers>

namespace chest {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(stream ^ 0x5851f42d4c957f2dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

RngStream RngStream::substream(std::uint64_t id) const {
  return RngStream(seed_, mix64(stream_ * 0x100000001b3ULL + id + 1));
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::below: n must be positive");
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

ComplexMatrix sample_standard_complex_gaussian(Eigen::Index rows, Eigen::Index cols,
                                               RngStream& rng) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("sample_standard_complex_gaussian: empty shape");
  }
  const double scale = std::sqrt(0.5);
  ComplexMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      out(i, j) = Complex(scale * re, scale * im);
    }
  }
  return out;
}

Svd svd(const ComplexMatrix& p) {
  if (p.size() == 0 || p.norm() == 0.0) {
    throw std::invalid_argument("svd: matrix must be nonzero");
  }
  if (!all_finite(p)) throw std::invalid_argument("svd: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(p),
                                             Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("svd: Jacobi iteration did not converge");
  }
  Svd out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  if (!all_finite(out.u) || !all_finite(out.v) || !out.singular.allFinite()) {
    throw std::runtime_error("svd: produced non-finite factors");
  }
  return out;
}

ComplexMatrix psd_factor(const ComplexMatrix& c) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw std::invalid_argument("psd_factor: matrix must be square and nonempty");
  }
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("psd_factor: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig{Eigen::MatrixXcd(c)};
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("psd_factor: eigendecomposition failed");
  }
  RealVector lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10) {
    throw std::invalid_argument("psd_factor: matrix is not positive semidefinite");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lambda.asDiagonal();
}

ComplexVector cholesky_sample(const ComplexMatrix& c, RngStream& rng) {
  const ComplexMatrix l = psd_factor(c);
  const ComplexMatrix w = sample_standard_complex_gaussian(c.rows(), 1, rng);
  return l * w;
}

bool all_finite(const ComplexMatrix& m) noexcept {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

ComplexMatrix dft_matrix(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("dft_matrix: n must be positive");
  ComplexMatrix f(n, n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // reduce k*j mod n first to keep the phase argument small
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) /
                           static_cast<double>(n);
      f(k, j) = std::polar(norm, phase);
    }
  }
  return f;
}

ComplexMatrix exponential_correlation(Eigen::Index n, double r) {
  ComplexMatrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = std::pow(r, static_cast<double>(std::abs(i - j)));
    }
  }
  return c;
}

}  // namespace chest
