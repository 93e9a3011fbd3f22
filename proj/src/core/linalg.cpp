#include "cramp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cramp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::argument: return "argument";
    case ErrorKind::invalid_matrix: return "invalid-matrix";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::rank_deficient: return "rank-deficient";
    case ErrorKind::sample_size: return "sample-size";
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::non_pd: return "non-pd";
    case ErrorKind::invalid_scenario: return "invalid-scenario";
  }
  return "unknown";
}

Dataset::Dataset(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2) {
    fail(ErrorKind::degenerate_input, "dataset needs at least 2 observations");
  }
  if (values_.cols() < 1) {
    fail(ErrorKind::degenerate_input, "dataset has no variables");
  }
  if (!values_.allFinite()) {
    fail(ErrorKind::degenerate_input, "dataset contains non-finite entries");
  }
}

Vector Dataset::mean() const { return values_.colwise().mean(); }

Matrix Dataset::centered() const {
  return values_.rowwise() - values_.colwise().mean();
}

CovMatrix::CovMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) {
    fail(ErrorKind::invalid_matrix, "covariance matrix must be square");
  }
  const double scale = std::max(values_.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric (max asymmetry " << asym << ")";
    fail(ErrorKind::invalid_matrix, os.str());
  }
  values_ = (0.5 * (values_ + values_.transpose())).eval();
}

CovMatrix CovMatrix::identity(Eigen::Index p) {
  return CovMatrix(Matrix::Identity(p, p));
}

RefDistribution RefDistribution::chi_square(int df) {
  if (df < 1) fail(ErrorKind::argument, "chi-square df must be >= 1");
  RefDistribution r;
  r.kind = Kind::chi_square;
  r.df = df;
  return r;
}

RefDistribution RefDistribution::standard_normal() {
  RefDistribution r;
  r.kind = Kind::standard_normal;
  return r;
}

RefDistribution RefDistribution::empirical(std::vector<double> sample) {
  if (sample.empty()) fail(ErrorKind::argument, "empirical sample is empty");
  RefDistribution r;
  r.kind = Kind::empirical;
  r.sample = std::move(sample);
  return r;
}

RefDistribution RefDistribution::none() { return {}; }

const char* to_string(RefDistribution::Kind kind) noexcept {
  switch (kind) {
    case RefDistribution::Kind::chi_square: return "chi-square";
    case RefDistribution::Kind::standard_normal: return "standard-normal";
    case RefDistribution::Kind::empirical: return "empirical";
    case RefDistribution::Kind::none: return "none";
  }
  return "none";
}

CovMatrix sample_covariance(const Dataset& data) {
  const Matrix c = data.centered();
  Matrix s(c.cols(), c.cols());
  s.setZero();
  s.selfadjointView<Eigen::Lower>().rankUpdate(c.transpose(),
                                               1.0 / double(data.n()));
  // rankUpdate fills only the lower triangle; mirror it so S is exactly
  // symmetric.
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return CovMatrix(std::move(s));
}

double trace_power(const CovMatrix& s, int k) {
  const Matrix& a = s.values();
  switch (k) {
    case 1: return a.trace();
    case 2: return a.squaredNorm();
    case 3: return (a * a).cwiseProduct(a).sum();
    case 4: {
      const Matrix a2 = a * a;
      return a2.squaredNorm();
    }
    default:
      fail(ErrorKind::argument, "trace_power supports k in {1,2,3,4}");
  }
}

std::vector<double> eigenvalues_sym(const CovMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.values(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::invalid_matrix, "eigen decomposition failed");
  }
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  std::reverse(out.begin(), out.end());
  return out;
}

double log_det_pd(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::rank_deficient, "matrix is not positive definite");
  }
  const auto diag = llt.matrixLLT().diagonal();
  double out = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) {
      fail(ErrorKind::rank_deficient, "matrix is singular");
    }
    out += 2.0 * std::log(diag[i]);
  }
  return out;
}

Matrix inverse_sqrt_pd(const Matrix& s, double* condition) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::invalid_matrix, "eigen decomposition failed");
  }
  const Vector& lambda = es.eigenvalues();
  const double lo = lambda.minCoeff();
  const double hi = lambda.maxCoeff();
  if (condition) *condition = lo > 0.0 ? hi / lo : INFINITY;
  if (!(lo > 0.0)) {
    fail(ErrorKind::rank_deficient, "matrix is not positive definite");
  }
  const Matrix& v = es.eigenvectors();
  return v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
}

}  // namespace cramp
