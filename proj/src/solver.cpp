#include "spgadmm/solver.hpp"

#include "spgadmm/error.hpp"

#include <chrono>
#include <cmath>

namespace spgadmm {

ProxStrategy parse_strategy(const std::string& name) {
  if (name == "zero") return ProxStrategy::zero;
  if (name == "majorized") return ProxStrategy::majorized;
  if (name == "sgs") return ProxStrategy::sgs;
  if (name == "explicit") return ProxStrategy::explicit_terms;
  throw ConfigError("unknown strategy '" + name + "' (expected zero, majorized, sgs or explicit)");
}

const char* to_string(ProxStrategy s) {
  switch (s) {
    case ProxStrategy::zero: return "zero";
    case ProxStrategy::majorized: return "majorized";
    case ProxStrategy::sgs: return "sgs";
    case ProxStrategy::explicit_terms: return "explicit";
  }
  return "?";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::failed: return "failed";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(rho > 0.0 && rho < 2.0))
    throw DomainError("rho must lie in the open interval (0,2), got " + std::to_string(rho));
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(tol_kkt > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (strategy == ProxStrategy::explicit_terms && !explicit_terms)
    throw ConfigError("explicit strategy needs S and T");
}

namespace {

bool positive_definite(const Eigen::MatrixXd& m) {
  const double lmin = spectral_min(m);
  const double lmax = spectral_max(m);
  return lmin > 1e-10 * std::max(1.0, std::abs(lmax));
}

Eigen::MatrixXd gram(const LinearMap& map) { return map.matrix() * map.matrix().transpose(); }

std::vector<Index> offsets(const Dims& d) {
  std::vector<Index> off(d.size() + 1, 0);
  for (std::size_t i = 0; i < d.size(); ++i) off[i + 1] = off[i] + d[i];
  return off;
}

// P = eta I.
class ScaledIdentitySolver final : public SubproblemSolver {
 public:
  ScaledIdentitySolver(NonsmoothPart h, Index n1, double eta, Eigen::MatrixXd S)
      : h_(h), n1_(n1), eta_(eta), S_(std::move(S)) {}

  Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd& w_prev) const override {
    Eigen::VectorXd w = (b + S_ * w_prev) / eta_;
    for (Index i = 0; i < n1_; ++i) w(i) = h_.prox(w(i), 1.0 / eta_);
    return w;
  }

 private:
  NonsmoothPart h_;
  Index n1_;
  double eta_;
  Eigen::MatrixXd S_;
};

// P = H + S with the leading n1 rows diagonal and decoupled.
class DirectSolver final : public SubproblemSolver {
 public:
  DirectSolver(NonsmoothPart h, Index n1, const Eigen::MatrixXd& P, Eigen::MatrixXd S, bool has_S,
               const char* name)
      : h_(h), n1_(n1), diag_(P.diagonal().head(n1)), S_(std::move(S)), has_S_(has_S) {
    const Index nr = P.rows() - n1;
    if (nr > 0) {
      llt_.compute(P.bottomRightCorner(nr, nr));
      if (llt_.info() != Eigen::Success)
        throw ConfigError(std::string(name) + "-subproblem matrix is not positive definite");
    }
    for (Index i = 0; i < n1; ++i)
      if (!(diag_(i) > 0.0))
        throw ConfigError(std::string(name) + "-subproblem has a nonpositive diagonal entry");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd& w_prev) const override {
    const Eigen::VectorXd rhs = has_S_ ? Eigen::VectorXd(b + S_ * w_prev) : b;
    Eigen::VectorXd w(rhs.size());
    for (Index i = 0; i < n1_; ++i) w(i) = h_.prox(rhs(i) / diag_(i), 1.0 / diag_(i));
    const Index nr = rhs.size() - n1_;
    if (nr > 0) w.tail(nr) = llt_.solve(rhs.tail(nr));
    return w;
  }

 private:
  NonsmoothPart h_;
  Index n1_;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd S_;
  bool has_S_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Symmetric Gauss-Seidel sweep over the blocks of Hp = H + E, E supported on
// block 1. Backward pass over blocks m..2, then forward pass over 1..m.
class SgsSolver final : public SubproblemSolver {
 public:
  SgsSolver(NonsmoothPart h, Index n1, Eigen::MatrixXd Hp, Eigen::MatrixXd E1, const Dims& partition)
      : h_(h), n1_(n1), Hp_(std::move(Hp)), E1_(std::move(E1)), off_(offsets(partition)) {
    const std::size_t m = partition.size();
    llt_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (i == 0 && n1_ > 0) {
        diag1_ = Hp_.diagonal().head(n1_);
        continue;
      }
      llt_[i].compute(Hp_.block(off_[i], off_[i], partition[i], partition[i]));
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd& w_prev) const override {
    Eigen::VectorXd bt = b;
    if (E1_.size() > 0) bt.head(n1_) += E1_ * w_prev.head(n1_);
    Eigen::VectorXd w = w_prev;
    const std::size_t m = llt_.size();
    for (std::size_t i = m; i-- > 1;) update_block(i, bt, w);
    for (std::size_t i = 0; i < m; ++i) update_block(i, bt, w);
    return w;
  }

 private:
  void update_block(std::size_t i, const Eigen::VectorXd& bt, Eigen::VectorXd& w) const {
    const Index o = off_[i], n = off_[i + 1] - off_[i];
    const Eigen::VectorXd r = bt.segment(o, n) - Hp_.middleRows(o, n) * w +
                              Hp_.block(o, o, n, n) * w.segment(o, n);
    if (i == 0 && n1_ > 0) {
      for (Index j = 0; j < n; ++j) w(j) = h_.prox(r(j) / diag1_(j), 1.0 / diag1_(j));
    } else {
      w.segment(o, n) = llt_[i].solve(r);
    }
  }

  NonsmoothPart h_;
  Index n1_;
  Eigen::MatrixXd Hp_;
  Eigen::MatrixXd E1_;
  std::vector<Index> off_;
  Eigen::VectorXd diag1_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt_;
};

}  // namespace

PsdOperator sgs_operator(const PsdOperator& Q, const Dims& partition) {
  if (total_dim(partition) != Q.size()) throw DimensionError("partition does not cover the operator");
  const auto off = offsets(partition);
  const Index n = Q.size();
  const Eigen::MatrixXd& q = Q.matrix();
  // X = D^-1 U*, blockwise.
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const Index o = off[i], ni = partition[i];
    Eigen::LLT<Eigen::MatrixXd> llt(q.block(o, o, ni, ni));
    if (llt.info() != Eigen::Success || !positive_definite(q.block(o, o, ni, ni)))
      throw DecompositionError("diagonal block " + std::to_string(i + 1) + " is not positive definite");
    if (o > 0) X.block(o, 0, ni, o) = llt.solve(q.block(o, 0, ni, o));
  }
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const Index o = off[i], ni = partition[i];
    U.block(o, o + ni, ni, n - o - ni) = q.block(o, o + ni, ni, n - o - ni);
  }
  return PsdOperator(partition, U * X);
}

SideSetup build_side(const NonsmoothPart& h, const PsdOperator& H, const Dims& partition,
                     ProxStrategy strategy, const std::optional<PsdOperator>& explicit_term,
                     const char* name) {
  const Index n = H.size();
  const Index n1 = h.is_zero() ? 0 : partition.front();
  const std::string side(name);
  switch (strategy) {
    case ProxStrategy::zero: {
      if (n1 > 0 && !leading_rows_diagonal(H.matrix(), n1))
        throw ConfigError("zero strategy cannot solve the " + side +
                          "-subproblem exactly: block 1 is coupled in the subproblem matrix");
      if (!positive_definite(H.matrix()))
        throw ConfigError("zero strategy: " + side + "-subproblem matrix is not positive definite");
      PsdOperator S = PsdOperator::zero(partition);
      return {S, std::make_unique<DirectSolver>(h, n1, H.matrix(), Eigen::MatrixXd(), false, name)};
    }
    case ProxStrategy::majorized: {
      const double eta = 1.01 * H.lambda_max();
      if (!(eta > 0.0)) throw ConfigError(side + "-subproblem matrix is zero");
      PsdOperator S(partition, eta * Eigen::MatrixXd::Identity(n, n) - H.matrix());
      Eigen::MatrixXd Sm = S.matrix();
      return {std::move(S), std::make_unique<ScaledIdentitySolver>(h, n1, eta, std::move(Sm))};
    }
    case ProxStrategy::sgs: {
      Eigen::MatrixXd Hp = H.matrix();
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
      Eigen::MatrixXd E1;
      if (n1 > 0 && !leading_rows_diagonal(Hp.topLeftCorner(n1, n1), n1)) {
        const Eigen::MatrixXd D1 = Hp.topLeftCorner(n1, n1);
        const double eta1 = 1.01 * spectral_max(D1);
        E1 = eta1 * Eigen::MatrixXd::Identity(n1, n1) - D1;
        E.topLeftCorner(n1, n1) = E1;
        Hp.topLeftCorner(n1, n1) = eta1 * Eigen::MatrixXd::Identity(n1, n1);
      }
      PsdOperator sgs = [&] {
        try {
          return sgs_operator(PsdOperator(partition, Hp), partition);
        } catch (const DecompositionError& e) {
          throw ConfigError("sgs strategy on the " + side + "-subproblem: " + e.what());
        }
      }();
      PsdOperator S(partition, sgs.matrix() + E);
      return {std::move(S), std::make_unique<SgsSolver>(h, n1, std::move(Hp), std::move(E1), partition)};
    }
    case ProxStrategy::explicit_terms: {
      if (!explicit_term) throw ConfigError("explicit strategy needs " + side + "-side term");
      require_same_dims(explicit_term->dims(), partition, "explicit proximal term");
      const Eigen::MatrixXd P = H.matrix() + explicit_term->matrix();
      const double tol = 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff());
      if (n1 > 0 && !leading_rows_diagonal(P, n1, tol))
        throw ConfigError("explicit terms leave block 1 of the " + side +
                          "-subproblem coupled; no exact solver available");
      if (!positive_definite(P))
        throw ConfigError("explicit terms: " + side + "-subproblem matrix is not positive definite");
      return {*explicit_term, std::make_unique<DirectSolver>(h, n1, P, explicit_term->matrix(), true, name)};
    }
  }
  throw ConfigError("unknown strategy");
}

void validate_terms(const ProblemInstance& inst, const SolverConfig& config,
                    const ProximalTermPair& terms) {
  require_same_dims(terms.S.dims(), inst.y_dims(), "S");
  require_same_dims(terms.T.dims(), inst.z_dims(), "T");
  if (!positive_definite(inst.f().Q().matrix() + terms.S.matrix() + config.sigma * gram(inst.A())))
    throw ConfigError("S: Sigma_f + S + sigma A A* is not positive definite");
  if (!positive_definite(inst.g().Q().matrix() + terms.T.matrix() + config.sigma * gram(inst.B())))
    throw ConfigError("T: Sigma_g + T + sigma B B* is not positive definite");
}

namespace {

PsdOperator side_matrix(const ConvexFunction& fn, const LinearMap& coupling, double sigma) {
  return PsdOperator(fn.dims(), fn.Q().matrix() + sigma * gram(coupling));
}

std::optional<PsdOperator> explicit_part(const SolverConfig& config, bool y_side) {
  if (!config.explicit_terms) return std::nullopt;
  return y_side ? config.explicit_terms->S : config.explicit_terms->T;
}

}  // namespace

ProximalTermPair build_proximal_terms(const ProblemInstance& inst, const SolverConfig& config) {
  config.validate();
  SideSetup ys = build_side(inst.f().nonsmooth(), side_matrix(inst.f(), inst.A(), config.sigma),
                            inst.y_dims(), config.strategy, explicit_part(config, true), "y");
  SideSetup zs = build_side(inst.g().nonsmooth(), side_matrix(inst.g(), inst.B(), config.sigma),
                            inst.z_dims(), config.strategy, explicit_part(config, false), "z");
  ProximalTermPair terms{std::move(ys.S), std::move(zs.S)};
  validate_terms(inst, config, terms);
  return terms;
}

Spgadmm::Spgadmm(ProblemInstance inst, SolverConfig config)
    : inst_(std::move(inst)), config_(std::move(config)) {
  config_.validate();
  SideSetup ys = build_side(inst_.f().nonsmooth(), side_matrix(inst_.f(), inst_.A(), config_.sigma),
                            inst_.y_dims(), config_.strategy, explicit_part(config_, true), "y");
  SideSetup zs = build_side(inst_.g().nonsmooth(), side_matrix(inst_.g(), inst_.B(), config_.sigma),
                            inst_.z_dims(), config_.strategy, explicit_part(config_, false), "z");
  terms_ = {std::move(ys.S), std::move(zs.S)};
  y_solver_ = std::move(ys.solver);
  z_solver_ = std::move(zs.solver);
  validate_terms(inst_, config_, terms_);
}

BlockVector Spgadmm::y_update(const BlockVector& y, const BlockVector& z, const BlockVector& x) const {
  require_same_dims(y.dims(), inst_.y_dims(), "y");
  const double s = config_.sigma;
  // b = q_f + A x - sigma A (B* z - c)
  const Eigen::VectorXd bz_c = inst_.B().adjoint_apply(z).values() - inst_.c().values();
  const Eigen::VectorXd b =
      inst_.f().q().values() + inst_.A().matrix() * (x.values() - s * bz_c);
  return BlockVector(inst_.y_dims(), y_solver_->solve(b, y.values()));
}

BlockVector Spgadmm::z_update(const BlockVector& y_next, const BlockVector& z, const BlockVector& x) const {
  require_same_dims(z.dims(), inst_.z_dims(), "z");
  const double s = config_.sigma, rho = config_.rho;
  // b = q_g + B x - sigma B (rho (A* y+ + B* z - c) - B* z)
  const Eigen::VectorXd bz = inst_.B().adjoint_apply(z).values();
  const Eigen::VectorXd r = inst_.constraint_residual(y_next, z).values();
  const Eigen::VectorXd b =
      inst_.g().q().values() + inst_.B().matrix() * (x.values() - s * (rho * r - bz));
  return BlockVector(inst_.z_dims(), z_solver_->solve(b, z.values()));
}

BlockVector x_update(const SolverConfig& config, const ProblemInstance& inst, const BlockVector& y_next,
                     const BlockVector& z, const BlockVector& z_next, const BlockVector& x) {
  BlockVector step = config.rho * inst.constraint_residual(y_next, z);
  step += inst.B().adjoint_apply(z_next - z);
  return x - config.sigma * step;
}

IterateTriple Spgadmm::step(const IterateTriple& u) const {
  BlockVector y = y_update(u.y, u.z, u.x);
  BlockVector z = z_update(y, u.z, u.x);
  BlockVector x = x_update(config_, inst_, y, u.z, z, u.x);
  return {std::move(y), std::move(z), std::move(x)};
}

SolveTrace Spgadmm::solve(const std::optional<IterateTriple>& start) const {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  SolveTrace trace;
  IterateTriple u = start ? *start : IterateTriple::zeros(inst_);
  require_same_dims(u.dims(), IterateTriple::zeros(inst_).dims(), "start point");
  auto record = [&](int k, const IterateTriple& v) {
    IterationRecord rec;
    rec.k = k;
    rec.u = v;
    rec.kkt_residual = kkt_residual(inst_, v).norm();
    rec.primal_residual = inst_.constraint_residual(v.y, v.z).norm();
    rec.elapsed_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    trace.records.push_back(std::move(rec));
    return trace.records.back().kkt_residual <= config_.tol_kkt;
  };
  try {
    if (record(0, u)) {
      trace.status = SolveStatus::converged;
      return trace;
    }
    for (int k = 1; k <= config_.max_iters; ++k) {
      u = step(u);
      if (!u.y.values().allFinite() || !u.z.values().allFinite() || !u.x.values().allFinite())
        throw Error("iterate became non-finite at k = " + std::to_string(k));
      if (record(k, u)) {
        trace.status = SolveStatus::converged;
        return trace;
      }
    }
    trace.status = SolveStatus::max_iters;
  } catch (const Error& e) {
    trace.status = SolveStatus::failed;
    trace.error = e.what();
  }
  return trace;
}

BlockVector y_update(const ProblemInstance& inst, const SolverConfig& config, const BlockVector& y,
                     const BlockVector& z, const BlockVector& x) {
  return Spgadmm(inst, config).y_update(y, z, x);
}

BlockVector z_update(const ProblemInstance& inst, const SolverConfig& config, const BlockVector& y_next,
                     const BlockVector& z, const BlockVector& x) {
  return Spgadmm(inst, config).z_update(y_next, z, x);
}

SolveTrace solve(const ProblemInstance& inst, const SolverConfig& config,
                 const std::optional<IterateTriple>& start) {
  return Spgadmm(inst, config).solve(start);
}

}  // namespace spgadmm
