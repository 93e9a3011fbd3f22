#include "cramp/projection.hpp"

#include <cmath>
#include <sstream>

namespace cramp {
namespace {

constexpr double kOrthogonalityTol = 1e-8;
constexpr double kMaxGramCondition = 1e12;
constexpr int kMaxAttempts = 5;

}  // namespace

ProjectionMatrix::ProjectionMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.rows() > values_.cols()) {
    fail(ErrorKind::dimension, "projection must satisfy 1 <= k <= p");
  }
  if (orthogonality_error() >= kOrthogonalityTol) {
    fail(ErrorKind::invalid_matrix, "projection rows are not orthonormal");
  }
}

double ProjectionMatrix::orthogonality_error() const {
  const Matrix rrt = values_ * values_.transpose();
  return (rrt - Matrix::Identity(k(), k())).cwiseAbs().maxCoeff();
}

ProjectionMatrix generate_projection(Eigen::Index k, Eigen::Index p,
                                     RngStream& rng) {
  if (k < 1 || k > p) {
    std::ostringstream os;
    os << "projection dimension k=" << k << " must satisfy 1 <= k <= p=" << p;
    fail(ErrorKind::dimension, os.str());
  }
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Matrix g = rng.normal_matrix(k, p);
    Matrix gram(k, k);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(g);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    double condition = INFINITY;
    Matrix m;
    try {
      m = inverse_sqrt_pd(gram, &condition);
    } catch (const Error&) {
      continue;
    }
    if (condition > kMaxGramCondition) continue;
    return ProjectionMatrix(m * g, ProjectionMatrix::Unchecked{});
  }
  fail(ErrorKind::rank_deficient,
       "random Gaussian draw stayed ill-conditioned after 5 attempts");
}

Dataset project_dataset(const ProjectionMatrix& r, const Dataset& data) {
  if (r.p() != data.p()) {
    std::ostringstream os;
    os << "projection expects p=" << r.p() << " but data has p=" << data.p();
    fail(ErrorKind::dimension, os.str());
  }
  return Dataset(data.values() * r.values().transpose());
}

ProjectedSampler::ProjectedSampler(const Matrix& data) : p_(data.cols()) {
  Matrix gram(data.rows(), data.rows());
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(data);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Vector& lambda = es.eigenvalues();
  const double top = lambda.size() ? lambda.maxCoeff() : 0.0;
  const double tol = top * 1e-12 * double(data.rows());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > tol && lambda[i] > 0.0) ++rank;
  }
  // Eigenvalues are ascending, so the retained ones are the trailing block.
  factor_ = es.eigenvectors().rightCols(rank) *
            lambda.tail(rank).cwiseSqrt().asDiagonal();
}

Matrix ProjectedSampler::draw(Eigen::Index k, RngStream& rng) const {
  if (k < 1 || k > p_) {
    fail(ErrorKind::dimension, "projection dimension must satisfy 1 <= k <= p");
  }
  const Eigen::Index r = rank();
  const Eigen::Index rest = p_ - r;

  const Matrix a = rng.normal_matrix(k, r);
  Matrix w = Matrix::Zero(k, k);
  if (rest >= k) {
    // Bartlett decomposition of a Wishart_k(rest, I) draw.
    Matrix t = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = std::sqrt(rng.chi_square(double(rest - i)));
      for (Eigen::Index j = 0; j < i; ++j) t(i, j) = rng.normal();
    }
    w = t * t.transpose();
  } else if (rest > 0) {
    const Matrix b = rng.normal_matrix(k, rest);
    w = b * b.transpose();
  }
  const Matrix gram = a * a.transpose() + w;
  Eigen::LLT<Matrix> chol(gram);
  if (chol.info() != Eigen::Success) {
    fail(ErrorKind::rank_deficient, "projected Gram matrix is singular");
  }
  if (r == 0) return Matrix::Zero(rows(), k);
  // (A^T C^-T) = (C^-1 A)^T
  const Matrix ca = chol.matrixL().solve(a);
  return factor_ * ca.transpose();
}

}  // namespace cramp
