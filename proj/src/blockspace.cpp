#include "spgadmm/blockspace.hpp"

#include "spgadmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace spgadmm {

namespace {

std::string dims_str(const Dims& d) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
  os << ']';
  return os.str();
}

void check_dims(const Dims& d) {
  for (Index n : d)
    if (n <= 0) throw DimensionError("block dimensions must be positive, got " + dims_str(d));
}

constexpr Index kDirectLimit = 512;

double power_iteration_max(const Eigen::MatrixXd& g) {
  const Index n = g.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = v.dot(g * v);
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd w = g * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double next = v.dot(g * v);
    if (std::abs(next - lambda) <= 1e-14 * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  return es.eigenvalues();
}

void require_square(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("spectral estimate needs a square map");
}

}  // namespace

Index total_dim(const Dims& dims) { return std::accumulate(dims.begin(), dims.end(), Index{0}); }

Dims concat_dims(const Dims& a, const Dims& b) {
  Dims out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": dims " + dims_str(a) + " vs " + dims_str(b));
}

BlockVector::BlockVector(Dims dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  values_ = Eigen::VectorXd::Zero(total_dim(dims_));
}

BlockVector::BlockVector(Dims dims, Eigen::VectorXd values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  check_dims(dims_);
  if (values_.size() != total_dim(dims_))
    throw DimensionError("vector of length " + std::to_string(values_.size()) +
                         " does not match dims " + dims_str(dims_));
}

Index BlockVector::offset(std::size_t block) const {
  if (block > dims_.size()) throw DimensionError("block index out of range");
  return std::accumulate(dims_.begin(), dims_.begin() + static_cast<std::ptrdiff_t>(block), Index{0});
}

Eigen::VectorXd::ConstSegmentReturnType BlockVector::block(std::size_t i) const {
  if (i >= dims_.size()) throw DimensionError("block index out of range");
  return values_.segment(offset(i), dims_[i]);
}

Eigen::VectorXd::SegmentReturnType BlockVector::block(std::size_t i) {
  if (i >= dims_.size()) throw DimensionError("block index out of range");
  return values_.segment(offset(i), dims_[i]);
}

BlockVector& BlockVector::operator+=(const BlockVector& other) {
  require_same_dims(dims_, other.dims_, "addition");
  values_ += other.values_;
  return *this;
}

BlockVector& BlockVector::operator-=(const BlockVector& other) {
  require_same_dims(dims_, other.dims_, "subtraction");
  values_ -= other.values_;
  return *this;
}

BlockVector& BlockVector::operator*=(double a) {
  values_ *= a;
  return *this;
}

double dot(const BlockVector& a, const BlockVector& b) {
  require_same_dims(a.dims(), b.dims(), "inner product");
  return a.values().dot(b.values());
}

LinearMap::LinearMap(Dims domain, Dims codomain, Eigen::MatrixXd matrix)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), matrix_(std::move(matrix)) {
  check_dims(domain_);
  check_dims(codomain_);
  if (matrix_.rows() != total_dim(codomain_) || matrix_.cols() != total_dim(domain_))
    throw DimensionError("matrix " + std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()) + " does not match " + dims_str(domain_) +
                         " -> " + dims_str(codomain_));
}

LinearMap LinearMap::identity(const Dims& dims) {
  const Index n = total_dim(dims);
  return LinearMap(dims, dims, Eigen::MatrixXd::Identity(n, n));
}

LinearMap LinearMap::zero(const Dims& domain, const Dims& codomain) {
  return LinearMap(domain, codomain, Eigen::MatrixXd::Zero(total_dim(codomain), total_dim(domain)));
}

BlockVector LinearMap::apply(const BlockVector& v) const {
  require_same_dims(v.dims(), domain_, "apply");
  return BlockVector(codomain_, matrix_ * v.values());
}

BlockVector LinearMap::adjoint_apply(const BlockVector& w) const {
  require_same_dims(w.dims(), codomain_, "adjoint_apply");
  return BlockVector(domain_, matrix_.transpose() * w.values());
}

LinearMap LinearMap::adjoint() const { return LinearMap(codomain_, domain_, matrix_.transpose()); }

double LinearMap::norm() const {
  if (matrix_.size() == 0) return 0.0;
  const Eigen::MatrixXd g = matrix_.rows() <= matrix_.cols()
                                ? Eigen::MatrixXd(matrix_ * matrix_.transpose())
                                : Eigen::MatrixXd(matrix_.transpose() * matrix_);
  return std::sqrt(std::max(0.0, spectral_max(g)));
}

PsdOperator::PsdOperator(Dims dims, Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols()) throw DimensionError("PSD operator must be square");
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  map_ = LinearMap(dims, dims, sym);
  const Eigen::VectorXd ev = eigenvalues(map_.matrix());
  lambda_min_ = ev(0);
  lambda_max_ = ev(ev.size() - 1);
  const double scale = std::max(std::abs(lambda_min_), std::abs(lambda_max_));
  if (lambda_min_ < -1e-10 * scale)
    throw PsdViolation("operator has eigenvalue " + std::to_string(lambda_min_) +
                       " below -1e-10 * norm");
}

PsdOperator PsdOperator::zero(const Dims& dims) {
  const Index n = total_dim(dims);
  return PsdOperator(dims, Eigen::MatrixXd::Zero(n, n));
}

PsdOperator PsdOperator::identity(const Dims& dims) { return scaled_identity(dims, 1.0); }

PsdOperator PsdOperator::scaled_identity(const Dims& dims, double scale) {
  if (scale < 0.0) throw PsdViolation("negative multiple of the identity");
  PsdOperator out;
  const Index n = total_dim(dims);
  out.map_ = LinearMap(dims, dims, scale * Eigen::MatrixXd::Identity(n, n));
  out.lambda_min_ = out.lambda_max_ = scale;
  return out;
}

PsdOperator PsdOperator::scaled(double a) const {
  if (a < 0.0) throw PsdViolation("negative scaling of a PSD operator");
  PsdOperator out;
  out.map_ = LinearMap(dims(), dims(), a * matrix());
  out.lambda_min_ = a * lambda_min_;
  out.lambda_max_ = a * lambda_max_;
  return out;
}

double gram_norm_sq(const PsdOperator& g, const Eigen::VectorXd& v) {
  if (v.size() != g.size()) throw DimensionError("gram_norm: dimension mismatch");
  const double ip = v.dot(g.matrix() * v);
  if (ip >= 0.0) return ip;
  if (ip >= -1e-12 * v.squaredNorm() * g.norm()) return 0.0;
  throw PsdViolation("negative quadratic form " + std::to_string(ip));
}

double gram_norm_sq(const PsdOperator& g, const BlockVector& v) {
  require_same_dims(v.dims(), g.dims(), "gram_norm");
  return gram_norm_sq(g, v.values());
}

double gram_norm(const PsdOperator& g, const BlockVector& v) { return std::sqrt(gram_norm_sq(g, v)); }

double spectral_max(const Eigen::MatrixXd& symmetric) {
  require_square(symmetric);
  if (symmetric.rows() == 0) return 0.0;
  if (symmetric.rows() > kDirectLimit) {
    const double est = power_iteration_max(symmetric);
    // Power iteration finds the dominant |lambda|; accept it only when it is
    // the top of a PSD spectrum.
    if (std::isfinite(est) && est >= 0.0) return est;
  }
  const Eigen::VectorXd ev = eigenvalues(symmetric);
  return ev(ev.size() - 1);
}

double spectral_min(const Eigen::MatrixXd& symmetric) {
  require_square(symmetric);
  if (symmetric.rows() == 0) return 0.0;
  return eigenvalues(symmetric)(0);
}

double spectral_max(const LinearMap& symmetric) { return spectral_max(symmetric.matrix()); }
double spectral_min(const LinearMap& symmetric) { return spectral_min(symmetric.matrix()); }

}  // namespace spgadmm
