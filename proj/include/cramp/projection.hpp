#pragma once

#include "cramp/linalg.hpp"
#include "cramp/rng.hpp"

namespace cramp {

/// k x p matrix with orthonormal rows (R R^T = I_k).
class ProjectionMatrix {
 public:
  /// Wraps an existing matrix after checking max|R R^T - I| < 1e-8.
  explicit ProjectionMatrix(Matrix values);

  Eigen::Index k() const noexcept { return values_.rows(); }
  Eigen::Index p() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }

  double orthogonality_error() const;

 private:
  struct Unchecked {};
  ProjectionMatrix(Matrix values, Unchecked) : values_(std::move(values)) {}
  friend ProjectionMatrix generate_projection(Eigen::Index, Eigen::Index,
                                              RngStream&);

  Matrix values_;
};

/// R = (G G^T)^(-1/2) G with G a k x p standard Gaussian draw. Only the k x k
/// Gram matrix is decomposed. Redraws when cond(G G^T) > 1e12, up to five
/// attempts.
ProjectionMatrix generate_projection(Eigen::Index k, Eigen::Index p,
                                     RngStream& rng);

/// Row i of the result is R x_i.
Dataset project_dataset(const ProjectionMatrix& r, const Dataset& data);

/// Draws X R^T for a fixed data block X and a fresh random R, without forming
/// R.
///
/// Write X = L Q with Q having r orthonormal rows spanning the row space of X.
/// For G Gaussian, G Q^T =: A is an r-column Gaussian block and the part of G
/// orthogonal to that row space only enters through W = B B^T, a
/// Wishart_k(p - r) matrix independent of A. Hence
///
///   X R^T = L A^T (A A^T + W)^(-1/2).
///
/// The symmetric root is swapped for the Cholesky factor C C^T = A A^T + W.
/// C^-1 G is again Haar on the Stiefel manifold (its law is right O(p)
/// invariant), so L A^T C^-T has exactly the law of projecting X through
/// generate_projection(k, p), at a cost independent of p.
class ProjectedSampler {
 public:
  explicit ProjectedSampler(const Matrix& data);

  Eigen::Index rows() const noexcept { return factor_.rows(); }
  Eigen::Index rank() const noexcept { return factor_.cols(); }
  Eigen::Index ambient_dim() const noexcept { return p_; }

  Matrix draw(Eigen::Index k, RngStream& rng) const;

 private:
  Matrix factor_;  // L: rows x rank
  Eigen::Index p_;
};

}  // namespace cramp
