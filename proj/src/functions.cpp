#include "spgadmm/functions.hpp"

#include "spgadmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spgadmm {

NonsmoothPart NonsmoothPart::l1(double weight) {
  if (!(weight > 0.0)) throw DomainError("l1 weight must be positive");
  NonsmoothPart h;
  h.kind = Kind::l1;
  h.weight = weight;
  return h;
}

NonsmoothPart NonsmoothPart::box(double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("box needs lo <= hi");
  NonsmoothPart h;
  h.kind = Kind::box;
  h.lo = lo;
  h.hi = hi;
  return h;
}

const char* to_string(NonsmoothPart::Kind kind) {
  switch (kind) {
    case NonsmoothPart::Kind::zero: return "zero";
    case NonsmoothPart::Kind::l1: return "l1";
    case NonsmoothPart::Kind::box: return "box";
  }
  return "?";
}

double NonsmoothPart::value(double w) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::l1: return weight * std::abs(w);
    case Kind::box: return (w < lo || w > hi) ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return 0.0;
}

double NonsmoothPart::prox(double v, double t) const {
  switch (kind) {
    case Kind::zero: return v;
    case Kind::l1: {
      const double thr = t * weight;
      if (v > thr) return v - thr;
      if (v < -thr) return v + thr;
      return 0.0;
    }
    case Kind::box: return std::clamp(v, lo, hi);
  }
  return v;
}

double NonsmoothPart::subgradient_distance(double w, double s) const {
  switch (kind) {
    case Kind::zero: return std::abs(s);
    case Kind::l1:
      if (w > 0.0) return std::abs(s - weight);
      if (w < 0.0) return std::abs(s + weight);
      return std::max(0.0, std::abs(s) - weight);
    case Kind::box:
      if (w < lo || w > hi) throw DomainError("point outside box [" + std::to_string(lo) + ", " +
                                              std::to_string(hi) + "]");
      if (lo == hi) return 0.0;
      if (w == lo) return std::max(0.0, s);
      if (w == hi) return std::max(0.0, -s);
      return std::abs(s);
  }
  return 0.0;
}

bool leading_rows_diagonal(const Eigen::MatrixXd& m, Index n1, double tol) {
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (j != i && std::abs(m(i, j)) > tol) return false;
  return true;
}

ConvexFunction::ConvexFunction(NonsmoothPart h, PsdOperator q_op, BlockVector q, double r)
    : h_(h), Q_(std::move(q_op)), q_(std::move(q)), r_(r) {
  require_same_dims(q_.dims(), Q_.dims(), "linear term vs quadratic part");
  const Index n1 = nonsmooth_dim();
  if (n1 > 0 && !leading_rows_diagonal(Q_.matrix(), n1))
    throw ConfigError(
        "nonsmooth part on block 1 needs a quadratic part that is diagonal and decoupled there");
  const Index nr = Q_.size() - n1;
  if (nr > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_.matrix().bottomRightCorner(nr, nr));
    if (es.info() != Eigen::Success) throw DecompositionError("quadratic part eigensolve failed");
    rest_vectors_ = es.eigenvectors();
    rest_values_ = es.eigenvalues().cwiseMax(0.0);
  }
}

ConvexFunction ConvexFunction::zero(const Dims& dims) {
  return ConvexFunction(NonsmoothPart::none(), PsdOperator::zero(dims), BlockVector(dims), 0.0);
}

double ConvexFunction::value(const BlockVector& w) const {
  require_same_dims(w.dims(), dims(), "value");
  double out = 0.5 * w.values().dot(Q_.matrix() * w.values()) - q_.values().dot(w.values()) + r_;
  for (Index i = 0; i < nonsmooth_dim(); ++i) out += h_.value(w.values()(i));
  return out;
}

BlockVector ConvexFunction::prox(const BlockVector& v, double t) const {
  require_same_dims(v.dims(), dims(), "prox");
  if (!(t > 0.0)) throw DomainError("prox step must be positive");
  // Optimality: 0 in dh(w) + Qw - q + (w - v)/t.
  const Eigen::VectorXd b = v.values() + t * q_.values();
  Eigen::VectorXd w(b.size());
  const Index n1 = nonsmooth_dim();
  for (Index i = 0; i < n1; ++i) {
    const double d = 1.0 + t * Q_.matrix()(i, i);
    w(i) = h_.prox(b(i) / d, t / d);
  }
  const Index nr = b.size() - n1;
  if (nr > 0) {
    const Eigen::VectorXd coeff = rest_vectors_.transpose() * b.tail(nr);
    const Eigen::VectorXd scaled = coeff.cwiseQuotient((1.0 + t * rest_values_.array()).matrix());
    w.tail(nr) = rest_vectors_ * scaled;
  }
  return BlockVector(v.dims(), std::move(w));
}

Membership ConvexFunction::subgradient_witness(const BlockVector& w,
                                               const BlockVector& candidate) const {
  require_same_dims(w.dims(), dims(), "subgradient_witness point");
  require_same_dims(candidate.dims(), dims(), "subgradient_witness candidate");
  const Eigen::VectorXd s = candidate.values() - (Q_.matrix() * w.values() - q_.values());
  double sq = 0.0;
  const Index n1 = nonsmooth_dim();
  for (Index i = 0; i < s.size(); ++i) {
    const double d = i < n1 ? h_.subgradient_distance(w.values()(i), s(i)) : std::abs(s(i));
    sq += d * d;
  }
  const double dist = std::sqrt(sq);
  return {dist <= kMembershipTol, dist};
}

}  // namespace spgadmm
