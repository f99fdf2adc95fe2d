#pragma once

#include "spgadmm/blockspace.hpp"

#include <vector>

namespace spgadmm {

// Nonsmooth part acting coordinatewise on block 1.
struct NonsmoothPart {
  enum class Kind { zero, l1, box };
  Kind kind = Kind::zero;
  double weight = 0.0;  // l1
  double lo = 0.0;      // box
  double hi = 0.0;

  static NonsmoothPart none() { return {}; }
  static NonsmoothPart l1(double weight);
  static NonsmoothPart box(double lo, double hi);

  bool is_zero() const { return kind == Kind::zero; }
  double value(double w) const;                  // +inf outside the box
  double prox(double v, double t) const;         // argmin_w h(w) + (w - v)^2 / (2t)
  // dist(s, subdifferential at w); throws DomainError outside the box.
  double subgradient_distance(double w, double s) const;

  friend bool operator==(const NonsmoothPart&, const NonsmoothPart&) = default;
};

const char* to_string(NonsmoothPart::Kind kind);

// Verdict of a subgradient membership test.
struct Membership {
  bool member = false;
  double distance = 0.0;
};

inline constexpr double kMembershipTol = 1e-9;

// h(w_1) + 1/2 <w, Q w> - <q, w> + r.
//
// A nonzero h requires the rows of Q belonging to block 1 to be diagonal with
// no coupling to other coordinates, so the prox stays exact.
class ConvexFunction {
 public:
  ConvexFunction() = default;
  ConvexFunction(NonsmoothPart h, PsdOperator q_op, BlockVector q, double r = 0.0);

  static ConvexFunction zero(const Dims& dims);

  const Dims& dims() const { return Q_.dims(); }
  const NonsmoothPart& nonsmooth() const { return h_; }
  const PsdOperator& Q() const { return Q_; }
  const BlockVector& q() const { return q_; }
  double r() const { return r_; }

  // Number of leading coordinates the nonsmooth part touches (0 if h is zero).
  Index nonsmooth_dim() const { return h_.is_zero() ? 0 : dims().front(); }

  double value(const BlockVector& w) const;
  BlockVector prox(const BlockVector& v, double t) const;
  Membership subgradient_witness(const BlockVector& w, const BlockVector& candidate) const;
  PsdOperator monotonicity_operator() const { return Q_; }

  friend bool operator==(const ConvexFunction& a, const ConvexFunction& b) {
    return a.h_ == b.h_ && a.Q_ == b.Q_ && a.q_ == b.q_ && a.r_ == b.r_;
  }

 private:
  NonsmoothPart h_;
  PsdOperator Q_;
  BlockVector q_;
  double r_ = 0.0;
  // Eigendecomposition of Q restricted to the coordinates h does not touch.
  Eigen::MatrixXd rest_vectors_;
  Eigen::VectorXd rest_values_;
};

// True when every row i < n1 of m has m(i, j) == 0 for all j != i.
bool leading_rows_diagonal(const Eigen::MatrixXd& m, Index n1, double tol = 0.0);

}  // namespace spgadmm
