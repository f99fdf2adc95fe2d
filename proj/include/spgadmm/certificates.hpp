#pragma once

#include "spgadmm/blockspace.hpp"
#include "spgadmm/problem.hpp"
#include "spgadmm/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace spgadmm {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Relative tolerance for inequality slacks: slack >= -kCertTol * (1 + max(|lhs|, |rhs|)).
inline constexpr double kCertTol = 1e-8;
// Relative tolerance for the multiplier identity.
inline constexpr double kIdentityTol = 1e-10;

struct RateConstants {
  double rho = 0.0;
  double l = 0.0, h = 0.0, m = 0.0, n = 0.0, o = 0.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
  // Only available once an error-bound modulus estimate is supplied.
  std::optional<double> k5, k6, vartheta;
};

// Piecewise constants of the relaxation factor alone (l, h, m, n, o).
RateConstants rho_constants(double rho);

RateConstants rate_constants(double rho, double sigma, double norm_S, double norm_T,
                             double lambda_max_AAt);
RateConstants rate_constants(double rho, double sigma, const PsdOperator& S, const PsdOperator& T,
                             const LinearMap& A);

// Fills k5, k6 and vartheta from a modulus estimate kappa and lambda_max(M_bar).
void attach_modulus(RateConstants& rc, double kappa, double lambda_max_mbar);

struct CertificateOperators {
  Dims u_dims;
  PsdOperator M_rho;  // on Z x X
  PsdOperator M;
  PsdOperator H;
  PsdOperator H0;
  PsdOperator M_bar;
  PsdOperator H_bar;
  LinearMap epsilon_adjoint;  // U -> X, (y, z, x) -> A* y + B* z
};

CertificateOperators build_certificate_operators(const ProblemInstance& inst, const SolverConfig& config,
                                                 const ProximalTermPair& terms, const PsdOperator& sigma_f,
                                                 const PsdOperator& sigma_g, const RateConstants& rc);
CertificateOperators build_certificate_operators(const ProblemInstance& inst, const SolverConfig& config,
                                                 const ProximalTermPair& terms, const PsdOperator& sigma_f,
                                                 const PsdOperator& sigma_g);

// One side-by-side comparison. For inequalities slack >= 0 means satisfied; for
// the identity slack = |lhs - rhs|.
struct Relation {
  double lhs = kNaN;
  double rhs = kNaN;
  double slack = kNaN;
  bool identity = false;

  static Relation geq(double lhs, double rhs) { return {lhs, rhs, lhs - rhs, false}; }
  static Relation leq(double lhs, double rhs) { return {lhs, rhs, rhs - lhs, false}; }
  static Relation equal(double lhs, double rhs) { return {lhs, rhs, std::abs(lhs - rhs), true}; }

  bool defined() const { return !std::isnan(slack); }
  double scale() const { return std::max(std::abs(lhs), std::abs(rhs)); }
  double tolerance() const { return (identity ? kIdentityTol : kCertTol) * (1.0 + scale()); }
  // Undefined relations count as holding.
  bool holds() const;
};

struct CertificateRecord {
  int k = 0;
  double phi = kNaN;
  double t = kNaN;
  std::array<Relation, 3> lemma1;  // monotonicity of z-steps, multiplier identity, cross-term bound
  Relation lemma2;                 // phi decrease
  Relation lemma3;                 // residual bound by H0
  Relation contraction;            // M-norm contraction
  double dist_m_singleton = kNaN;  // ||u^k - u_bar||_{M_bar}, an upper bound on dist_{M_bar}
  double ratio = kNaN;             // d2_{k+1} / d2_k

  bool all_hold() const;
};

struct GlobalConvergenceReport {
  // ||A* y_e + B* z_e||, ||dz||_{sigma B B*}, ||dz||_T, ||z_e||_{Sigma_g}, ||dy||_S, ||y_e||_{Sigma_f}
  std::array<double, 6> quantities{};
  std::array<bool, 6> below{};
  double threshold = 1e-5;
  bool all_below() const;
  static const std::array<const char*, 6>& names();
};

struct RateReport {
  bool degenerate = false;
  std::vector<double> d2;
  double max_tail_ratio = kNaN;
  double slope = kNaN;
  double intercept = kNaN;
  double r_squared = kNaN;
  double kappa_emp = kNaN;
  double implied_vartheta = kNaN;
};

// Tail ratio and log-linear fit over the last half of a d2 sequence.
RateReport fit_rate(const std::vector<double>& d2);

class CertificateEngine {
 public:
  CertificateEngine(const ProblemInstance& inst, const SolverConfig& config, const ProximalTermPair& terms,
                    KnownSolution u_bar);

  const CertificateOperators& operators() const { return ops_; }
  const RateConstants& constants() const { return rc_; }
  const KnownSolution& u_bar() const { return ubar_; }
  double lambda_max_mbar() const { return ops_.M_bar.lambda_max(); }

  // z_prev is z^{k-1}; pass z^k itself at k = 0.
  double phi(const IterateTriple& u, const BlockVector& z_prev) const;
  double t_term(const IterateTriple& u_next, const IterateTriple& u) const;

  std::array<Relation, 3> lemma1(const BlockVector& z_prev, const IterateTriple& u,
                                 const IterateTriple& u_next) const;
  Relation lemma2(const BlockVector& z_prev, const IterateTriple& u, const IterateTriple& u_next) const;
  Relation lemma3(const IterateTriple& u, const IterateTriple& u_next, double kkt_next) const;
  Relation contraction(const BlockVector& z_prev, const IterateTriple& u, const IterateTriple& u_next) const;

  // ||u - u_bar||^2_{M_bar} + ||z - z_prev||^2_T
  double d2(const IterateTriple& u, const BlockVector& z_prev) const;

  // Records for k = 0 .. min(last, max_k). Relations needing k >= 1 or u^{k+1}
  // are left undefined where unavailable.
  std::vector<CertificateRecord> evaluate(const SolveTrace& trace, int max_k = -1) const;

  // Throws InsufficientData for fewer than 20 iterations unless the start is degenerate.
  RateReport check_rate(const SolveTrace& trace) const;

  GlobalConvergenceReport check_global_convergence(const SolveTrace& trace) const;

 private:
  ProblemInstance inst_;
  SolverConfig config_;
  ProximalTermPair terms_;
  KnownSolution ubar_;
  PsdOperator sigma_f_, sigma_g_;
  RateConstants rc_;
  CertificateOperators ops_;
};

struct PdEquivalence {
  bool hypothesis = false;
  bool M_pd = false;
  bool H_pd = false;
  bool agree() const { return hypothesis == M_pd && M_pd == H_pd; }
};

PdEquivalence pd_equivalence(const ProblemInstance& inst, const ProximalTermPair& terms,
                             const PsdOperator& sigma_f, const PsdOperator& sigma_g, const SolverConfig& config);

// lambda_min > 1e-10 * max(1, lambda_max)
bool is_positive_definite(const PsdOperator& g);

}  // namespace spgadmm
