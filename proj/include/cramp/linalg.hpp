#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "cramp/error.hpp"

namespace cramp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x p block of observations, one row per sample.
///
/// Construction rejects non-finite entries and fewer than two rows, so every
/// statistic downstream can assume a centrable sample.
class Dataset {
 public:
  explicit Dataset(Matrix values);

  Eigen::Index n() const noexcept { return values_.rows(); }
  Eigen::Index p() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }

  /// Rows with the column means subtracted.
  Matrix centered() const;
  Vector mean() const;

 private:
  Matrix values_;
};

/// Symmetric p x p matrix. Inputs are symmetrized as (S + S^T) / 2 after
/// checking the asymmetry is within 1e-10 relative.
class CovMatrix {
 public:
  explicit CovMatrix(Matrix values);
  static CovMatrix identity(Eigen::Index p);

  Eigen::Index p() const noexcept { return values_.rows(); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

struct RefDistribution {
  enum class Kind { chi_square, standard_normal, empirical, none };

  Kind kind = Kind::none;
  int df = 0;
  std::vector<double> sample;

  static RefDistribution chi_square(int df);
  static RefDistribution standard_normal();
  static RefDistribution empirical(std::vector<double> sample);
  static RefDistribution none();
};

const char* to_string(RefDistribution::Kind kind) noexcept;

/// S = n^-1 sum (x_i - xbar)(x_i - xbar)^T. Divisor n, exactly symmetric.
CovMatrix sample_covariance(const Dataset& data);

/// tr(S^k) for k in {1, 2, 3, 4}.
double trace_power(const CovMatrix& s, int k);

/// Eigenvalues in descending order.
std::vector<double> eigenvalues_sym(const CovMatrix& s);

/// log|S| via Cholesky; throws rank_deficient when S is not positive definite.
double log_det_pd(const Matrix& s);

/// (S)^(-1/2) for symmetric positive definite S. Also returns the condition
/// number (max/min eigenvalue) through `condition` when non-null.
Matrix inverse_sqrt_pd(const Matrix& s, double* condition = nullptr);

}  // namespace cramp
