#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace chest {

using Complex = std::complex<double>;

/// Dense complex matrix, row-major so that the in-memory order matches the
/// on-disk (re, im) interleaving of dataset files.
using ComplexMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;

/// Raised when an iterative method produces non-finite values or its
/// monitored objective moves the wrong way.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  [[nodiscard]] int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Seeded random stream. Two streams constructed from the same
/// (seed, stream id) pair produce bit-identical sequences; distinct stream ids
/// give statistically independent substreams, which is how parallel work is
/// kept independent of the thread count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

  /// Child stream keyed by `id`; does not advance this stream.
  [[nodiscard]] RngStream substream(std::uint64_t id) const;

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// SplitMix64 finalizer; used to derive substream keys and hashes.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Entries i.i.d. CN(0, 1): real and imaginary parts each N(0, 1/2).
ComplexMatrix sample_standard_complex_gaussian(Eigen::Index rows, Eigen::Index cols,
                                               RngStream& rng);

struct Svd {
  ComplexMatrix u;          // rows(P) x r, orthonormal columns
  RealVector singular;      // r values, nonincreasing, nonnegative
  ComplexMatrix v;          // cols(P) x r, orthonormal columns
};

/// Thin SVD, P = U diag(s) V^H with r = min(rows, cols).
Svd svd(const ComplexMatrix& p);

/// Draws h ~ CN(0, C) for Hermitian PSD C. Works for singular C through an
/// eigendecomposition; throws if the smallest eigenvalue is below -1e-10.
ComplexVector cholesky_sample(const ComplexMatrix& c, RngStream& rng);

/// Hermitian square-root factor L with L L^H = C (eigendecomposition based,
/// valid for PSD C). Throws on non-Hermitian or indefinite input.
ComplexMatrix psd_factor(const ComplexMatrix& c);

bool all_finite(const ComplexMatrix& m) noexcept;

/// Squared Frobenius norm.
inline double energy(const ComplexMatrix& m) { return m.squaredNorm(); }

/// Unitary DFT matrix, F(k, n) = exp(-2 pi i k n / N) / sqrt(N).
ComplexMatrix dft_matrix(Eigen::Index n);

/// Exponential correlation matrix R(i, j) = r^|i-j|.
ComplexMatrix exponential_correlation(Eigen::Index n, double r);

}  // namespace chest
