#pragma once

#include "spgadmm/blockspace.hpp"
#include "spgadmm/problem.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spgadmm {

enum class ProxStrategy { zero, majorized, sgs, explicit_terms };

ProxStrategy parse_strategy(const std::string& name);
const char* to_string(ProxStrategy s);

// Semi-proximal terms: S on Y, T on Z.
struct ProximalTermPair {
  PsdOperator S;
  PsdOperator T;
};

struct SolverConfig {
  double sigma = 1.0;
  double rho = 1.6;
  double tol_kkt = 1e-8;
  int max_iters = 10000;
  ProxStrategy strategy = ProxStrategy::majorized;
  std::optional<ProximalTermPair> explicit_terms;  // used by ProxStrategy::explicit_terms

  // Throws DomainError for rho outside (0, 2), ConfigError for the rest.
  void validate() const;
};

// Throws ConfigError naming S or T when Q_f + S + sigma A A* or Q_g + T + sigma B B*
// is not positive definite.
void validate_terms(const ProblemInstance& inst, const SolverConfig& config,
                    const ProximalTermPair& terms);

// U D^-1 U* for Q = U + D + U*, U strictly block upper triangular and D block
// diagonal with respect to `partition`. DecompositionError if a diagonal block
// is not positive definite.
PsdOperator sgs_operator(const PsdOperator& Q, const Dims& partition);

// Minimizer of h(w_1) + 1/2 <w, H w> - <b, w> + 1/2 ||w - w_prev||_S^2 for fixed H, S.
class SubproblemSolver {
 public:
  virtual ~SubproblemSolver() = default;
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd& w_prev) const = 0;
};

struct SideSetup {
  PsdOperator S;
  std::unique_ptr<SubproblemSolver> solver;
};

// Builds S and a matching exact solver for one side. `H` is Q + sigma * (coupling Gram).
SideSetup build_side(const NonsmoothPart& h, const PsdOperator& H, const Dims& partition,
                     ProxStrategy strategy, const std::optional<PsdOperator>& explicit_term,
                     const char* name);

ProximalTermPair build_proximal_terms(const ProblemInstance& inst, const SolverConfig& config);

enum class SolveStatus { converged, max_iters, failed };
const char* to_string(SolveStatus s);

struct IterationRecord {
  int k = 0;
  IterateTriple u;
  double kkt_residual = 0.0;
  double primal_residual = 0.0;
  double elapsed_seconds = 0.0;
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::max_iters;
  std::string error;

  int iterations() const { return records.empty() ? 0 : records.back().k; }
  const IterateTriple& final_iterate() const { return records.back().u; }
};

class Spgadmm {
 public:
  Spgadmm(ProblemInstance inst, SolverConfig config);

  const ProblemInstance& instance() const { return inst_; }
  const SolverConfig& config() const { return config_; }
  const ProximalTermPair& terms() const { return terms_; }

  BlockVector y_update(const BlockVector& y, const BlockVector& z, const BlockVector& x) const;
  BlockVector z_update(const BlockVector& y_next, const BlockVector& z, const BlockVector& x) const;
  IterateTriple step(const IterateTriple& u) const;

  SolveTrace solve(const std::optional<IterateTriple>& start = std::nullopt) const;

 private:
  ProblemInstance inst_;
  SolverConfig config_;
  ProximalTermPair terms_;
  std::unique_ptr<SubproblemSolver> y_solver_;
  std::unique_ptr<SubproblemSolver> z_solver_;
};

// x+ = x - sigma (rho (A* y_next + B* z - c) + B* (z_next - z))
BlockVector x_update(const SolverConfig& config, const ProblemInstance& inst, const BlockVector& y_next,
                     const BlockVector& z, const BlockVector& z_next, const BlockVector& x);

// One-off subproblem updates; each call sets up the strategy from scratch.
BlockVector y_update(const ProblemInstance& inst, const SolverConfig& config, const BlockVector& y,
                     const BlockVector& z, const BlockVector& x);
BlockVector z_update(const ProblemInstance& inst, const SolverConfig& config, const BlockVector& y_next,
                     const BlockVector& z, const BlockVector& x);

SolveTrace solve(const ProblemInstance& inst, const SolverConfig& config,
                 const std::optional<IterateTriple>& start = std::nullopt);

}  // namespace spgadmm
