#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace spgadmm {

using Index = Eigen::Index;
using Dims = std::vector<Index>;

Index total_dim(const Dims& dims);

// Concatenation of dimension lists, e.g. dims of U = Y x Z x X.
Dims concat_dims(const Dims& a, const Dims& b);

// Element of a Cartesian product of real coordinate spaces. Blocks are stored
// contiguously; dims() records where each one starts and ends.
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(Dims dims);
  BlockVector(Dims dims, Eigen::VectorXd values);

  static BlockVector zeros(Dims dims) { return BlockVector(std::move(dims)); }

  const Dims& dims() const { return dims_; }
  Index size() const { return values_.size(); }
  std::size_t num_blocks() const { return dims_.size(); }
  Index offset(std::size_t block) const;

  Eigen::VectorXd::ConstSegmentReturnType block(std::size_t i) const;
  Eigen::VectorXd::SegmentReturnType block(std::size_t i);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double norm() const { return values_.norm(); }
  double squared_norm() const { return values_.squaredNorm(); }

  BlockVector& operator+=(const BlockVector& other);
  BlockVector& operator-=(const BlockVector& other);
  BlockVector& operator*=(double a);

  friend BlockVector operator+(BlockVector a, const BlockVector& b) { return a += b; }
  friend BlockVector operator-(BlockVector a, const BlockVector& b) { return a -= b; }
  friend BlockVector operator*(double s, BlockVector a) { return a *= s; }
  friend BlockVector operator*(BlockVector a, double s) { return a *= s; }

  friend bool operator==(const BlockVector& a, const BlockVector& b) {
    return a.dims_ == b.dims_ && a.values_ == b.values_;
  }

 private:
  Dims dims_;
  Eigen::VectorXd values_;
};

double dot(const BlockVector& a, const BlockVector& b);

// Throws DimensionError unless a and b carry identical block structure.
void require_same_dims(const Dims& a, const Dims& b, const char* what);

// Linear operator between block spaces, dense representation of size
// total(codomain) x total(domain). The adjoint is the transpose.
class LinearMap {
 public:
  LinearMap() = default;
  LinearMap(Dims domain, Dims codomain, Eigen::MatrixXd matrix);

  static LinearMap identity(const Dims& dims);
  static LinearMap zero(const Dims& domain, const Dims& codomain);

  const Dims& domain_dims() const { return domain_; }
  const Dims& codomain_dims() const { return codomain_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  BlockVector apply(const BlockVector& v) const;
  BlockVector adjoint_apply(const BlockVector& w) const;
  LinearMap adjoint() const;

  // Induced 2-norm.
  double norm() const;

  friend bool operator==(const LinearMap& a, const LinearMap& b) {
    return a.domain_ == b.domain_ && a.codomain_ == b.codomain_ && a.matrix_ == b.matrix_;
  }

 private:
  Dims domain_;
  Dims codomain_;
  Eigen::MatrixXd matrix_;
};

// Self-adjoint positive semidefinite operator on a single block space.
// The representation is symmetrized and checked at construction: the minimum
// eigenvalue must be >= -1e-10 * spectral norm, otherwise PsdViolation.
class PsdOperator {
 public:
  PsdOperator() = default;
  PsdOperator(Dims dims, Eigen::MatrixXd matrix);

  static PsdOperator zero(const Dims& dims);
  static PsdOperator identity(const Dims& dims);
  static PsdOperator scaled_identity(const Dims& dims, double scale);

  const Dims& dims() const { return map_.domain_dims(); }
  Index size() const { return map_.matrix().rows(); }
  const LinearMap& map() const { return map_; }
  const Eigen::MatrixXd& matrix() const { return map_.matrix(); }

  double lambda_max() const { return lambda_max_; }
  double lambda_min() const { return lambda_min_; }
  // Spectral norm; equals lambda_max for a PSD operator.
  double norm() const { return lambda_max_ > 0.0 ? lambda_max_ : 0.0; }

  BlockVector apply(const BlockVector& v) const { return map_.apply(v); }

  // a * G for a >= 0, reusing the cached spectrum.
  PsdOperator scaled(double a) const;

  friend bool operator==(const PsdOperator& a, const PsdOperator& b) { return a.map_ == b.map_; }

 private:
  LinearMap map_;
  double lambda_max_ = 0.0;
  double lambda_min_ = 0.0;
};

// ||v||_G = sqrt(<v, G v>). Tiny negative inner products (>= -1e-12 ||v||^2 ||G||)
// are clamped to zero; anything below throws PsdViolation.
double gram_norm(const PsdOperator& g, const BlockVector& v);
double gram_norm_sq(const PsdOperator& g, const BlockVector& v);
double gram_norm_sq(const PsdOperator& g, const Eigen::VectorXd& v);

// Extreme eigenvalues of a symmetric map. spectral_max uses a direct solver up
// to dimension 512 and power iteration from the normalized all-ones vector above.
double spectral_max(const LinearMap& symmetric);
double spectral_min(const LinearMap& symmetric);
double spectral_max(const Eigen::MatrixXd& symmetric);
double spectral_min(const Eigen::MatrixXd& symmetric);

}  // namespace spgadmm
