#include "spgadmm/certificates.hpp"

#include "spgadmm/error.hpp"

#include <cmath>

namespace spgadmm {

RateConstants rho_constants(double rho) {
  if (!(rho > 0.0 && rho < 2.0))
    throw DomainError("rho must lie in the open interval (0,2), got " + std::to_string(rho));
  const double golden = 0.5 * (1.0 + std::sqrt(5.0));
  RateConstants rc;
  rc.rho = rho;
  const double mn = std::min(rho, 1.0 / rho);
  if (rho <= golden) {
    rc.l = 1.0 / rho;
    rc.h = 1.0 - mn;
  } else {
    rc.l = (2.0 - rho) / (rho - 1.0);
    rc.h = 2.0 - rho;
  }
  rc.m = (2.0 * mn - std::min(1.0, rho * rho)) * rc.l / rho;
  rc.n = (2.0 - rho) * (2.0 * (2.0 - rho) - rc.h) / rho;
  rc.o = (2.0 - rho) * (2.0 - rho * rc.l);
  return rc;
}

RateConstants rate_constants(double rho, double sigma, double norm_S, double norm_T,
                             double lambda_max_AAt) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  RateConstants rc = rho_constants(rho);
  const double r2 = rho * rho, om = (1.0 - rho) * (1.0 - rho);
  rc.k1 = 3.0 * norm_S;
  rc.k2 = std::max(norm_T, (3.0 * lambda_max_AAt * sigma + 2.0 * om / sigma) / r2);
  rc.k3 = 1.5 * om / r2 * sigma * lambda_max_AAt + 1.0 / (sigma * r2);
  rc.k4 = std::max({rc.k1, rc.k2, rc.k3});
  return rc;
}

RateConstants rate_constants(double rho, double sigma, const PsdOperator& S, const PsdOperator& T,
                             const LinearMap& A) {
  const Eigen::MatrixXd aat = A.matrix() * A.matrix().transpose();
  return rate_constants(rho, sigma, S.norm(), T.norm(), std::max(0.0, spectral_max(aat)));
}

void attach_modulus(RateConstants& rc, double kappa, double lambda_max_mbar) {
  if (!(kappa > 0.0) || !(lambda_max_mbar > 0.0))
    throw DomainError("modulus and lambda_max(M_bar) must be positive");
  const double rho = rc.rho;
  const double k5 = std::min({1.0, rc.m, 0.5 * rc.n}) / rc.k4 * rho / (2.0 - rho) / (kappa * kappa) /
                    lambda_max_mbar;
  const double k6 = rho / (rho + (2.0 - rho) * k5);
  rc.k5 = k5;
  rc.k6 = k6;
  rc.vartheta = 1.0 / (1.0 + k5 * k6);
}

CertificateOperators build_certificate_operators(const ProblemInstance& inst, const SolverConfig& config,
                                                 const ProximalTermPair& terms, const PsdOperator& sigma_f,
                                                 const PsdOperator& sigma_g, const RateConstants& rc) {
  require_same_dims(terms.S.dims(), inst.y_dims(), "S");
  require_same_dims(terms.T.dims(), inst.z_dims(), "T");
  require_same_dims(sigma_f.dims(), inst.y_dims(), "Sigma_f");
  require_same_dims(sigma_g.dims(), inst.z_dims(), "Sigma_g");
  const double s = config.sigma, rho = config.rho;
  const Index ny = total_dim(inst.y_dims()), nz = total_dim(inst.z_dims()), nx = total_dim(inst.x_dims());
  const Index nu = ny + nz + nx;
  const Eigen::MatrixXd& Am = inst.A().matrix();
  const Eigen::MatrixXd& Bm = inst.B().matrix();
  const Eigen::MatrixXd bbt = Bm * Bm.transpose();

  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(nu, nx);
  E.topRows(ny) = Am;
  E.middleRows(ny, nz) = Bm;
  const Eigen::MatrixXd eet = E * E.transpose();

  CertificateOperators ops;
  ops.u_dims = concat_dims(concat_dims(inst.y_dims(), inst.z_dims()), inst.x_dims());
  const Dims zx_dims = concat_dims(inst.z_dims(), inst.x_dims());

  Eigen::MatrixXd mr(nz + nx, nz + nx);
  mr.topLeftCorner(nz, nz) = terms.T.matrix() + sigma_g.matrix() + (s / rho) * bbt;
  mr.topRightCorner(nz, nx) = ((1.0 - rho) / rho) * Bm;
  mr.bottomLeftCorner(nx, nz) = ((1.0 - rho) / rho) * Bm.transpose();
  mr.bottomRightCorner(nx, nx) = Eigen::MatrixXd::Identity(nx, nx) / (s * rho);
  ops.M_rho = PsdOperator(zx_dims, mr);

  const Eigen::MatrixXd sy = terms.S.matrix() + sigma_f.matrix();
  Eigen::MatrixXd m = 0.25 * rc.o * s * eet;
  m.topLeftCorner(ny, ny) += sy;
  m.bottomRightCorner(nz + nx, nz + nx) += ops.M_rho.matrix();
  ops.M = PsdOperator(ops.u_dims, m);

  Eigen::MatrixXd h = 0.125 * rc.o * s * eet;
  h.topLeftCorner(ny, ny) += sy;
  h.block(ny, ny, nz, nz) += terms.T.matrix() + sigma_g.matrix() + 0.5 * rc.n * s * bbt;
  h.bottomRightCorner(nx, nx) += (rc.m / (2.0 * s)) * Eigen::MatrixXd::Identity(nx, nx);
  ops.H = PsdOperator(ops.u_dims, h);

  Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(nu, nu);
  h0.topLeftCorner(ny, ny) = terms.S.matrix();
  h0.block(ny, ny, nz, nz) = terms.T.matrix() + s * bbt;
  h0.bottomRightCorner(nx, nx) = Eigen::MatrixXd::Identity(nx, nx) / (2.0 * s);
  ops.H0 = PsdOperator(ops.u_dims, rc.k4 * h0);

  const double scale = rho / (2.0 - rho);
  ops.M_bar = ops.M.scaled(scale);
  ops.H_bar = ops.H.scaled(scale);
  ops.epsilon_adjoint = LinearMap(ops.u_dims, inst.x_dims(), E.transpose());
  return ops;
}

CertificateOperators build_certificate_operators(const ProblemInstance& inst, const SolverConfig& config,
                                                 const ProximalTermPair& terms, const PsdOperator& sigma_f,
                                                 const PsdOperator& sigma_g) {
  return build_certificate_operators(inst, config, terms, sigma_f, sigma_g,
                                     rate_constants(config.rho, config.sigma, terms.S, terms.T, inst.A()));
}

bool Relation::holds() const {
  if (!defined()) return true;
  return identity ? slack <= tolerance() : slack >= -tolerance();
}

bool CertificateRecord::all_hold() const {
  return lemma1[0].holds() && lemma1[1].holds() && lemma1[2].holds() && lemma2.holds() &&
         lemma3.holds() && contraction.holds();
}

const std::array<const char*, 6>& GlobalConvergenceReport::names() {
  static const std::array<const char*, 6> n{"constraint_violation", "dz_sigma_BBt", "dz_T",
                                            "z_err_Sigma_g",        "dy_S",         "y_err_Sigma_f"};
  return n;
}

bool GlobalConvergenceReport::all_below() const {
  for (bool b : below)
    if (!b) return false;
  return true;
}

RateReport fit_rate(const std::vector<double>& d2) {
  RateReport rep;
  rep.d2 = d2;
  if (d2.empty() || !(d2.front() > 0.0)) {
    rep.degenerate = true;
    return rep;
  }
  const std::size_t n = d2.size(), start = n / 2;
  double worst = kNaN;
  for (std::size_t k = start; k + 1 < n; ++k) {
    if (!(d2[k] > 0.0)) continue;
    const double r = d2[k + 1] / d2[k];
    if (std::isnan(worst) || r > worst) worst = r;
  }
  rep.max_tail_ratio = worst;

  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t k = start; k < n; ++k) {
    if (!(d2[k] > 0.0)) continue;
    const double x = static_cast<double>(k), y = std::log(d2[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt += 1;
  }
  if (cnt >= 2) {
    const double mx = sx / cnt, my = sy / cnt;
    const double vxx = sxx / cnt - mx * mx;
    if (vxx > 0) {
      rep.slope = (sxy / cnt - mx * my) / vxx;
      rep.intercept = my - rep.slope * mx;
      double ss_res = 0, ss_tot = 0;
      for (std::size_t k = start; k < n; ++k) {
        if (!(d2[k] > 0.0)) continue;
        const double y = std::log(d2[k]);
        const double fit = rep.intercept + rep.slope * static_cast<double>(k);
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - my) * (y - my);
      }
      rep.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : kNaN;
    }
  }
  return rep;
}

CertificateEngine::CertificateEngine(const ProblemInstance& inst, const SolverConfig& config,
                                     const ProximalTermPair& terms, KnownSolution u_bar)
    : inst_(inst),
      config_(config),
      terms_(terms),
      ubar_(std::move(u_bar)),
      sigma_f_(inst.f().monotonicity_operator()),
      sigma_g_(inst.g().monotonicity_operator()) {
  config_.validate();
  require_same_dims(ubar_.dims(), IterateTriple::zeros(inst_).dims(), "reference solution");
  rc_ = rate_constants(config_.rho, config_.sigma, terms_.S, terms_.T, inst_.A());
  ops_ = build_certificate_operators(inst_, config_, terms_, sigma_f_, sigma_g_, rc_);
}

namespace {

// x_e + sigma (1 - rho) B* z_e
Eigen::VectorXd shifted_multiplier(const ProblemInstance& inst, const SolverConfig& cfg,
                                   const IterateTriple& e) {
  return e.x.values() + cfg.sigma * (1.0 - cfg.rho) * (inst.B().matrix().transpose() * e.z.values());
}

}  // namespace

double CertificateEngine::phi(const IterateTriple& u, const BlockVector& z_prev) const {
  const double s = config_.sigma, rho = config_.rho;
  const IterateTriple e = u - ubar_;
  const Eigen::VectorXd w = shifted_multiplier(inst_, config_, e);
  const double btz = (inst_.B().matrix().transpose() * e.z.values()).squaredNorm();
  return w.squaredNorm() / (s * rho) + gram_norm_sq(terms_.S, e.y) + gram_norm_sq(terms_.T, e.z) +
         s * (2.0 - rho) * btz + (2.0 - rho) / rho * gram_norm_sq(terms_.T, u.z - z_prev);
}

double CertificateEngine::t_term(const IterateTriple& u_next, const IterateTriple& u) const {
  const double s = config_.sigma, rho = config_.rho;
  const IterateTriple e = u_next - ubar_;
  const IterateTriple d = u_next - u;
  const double btdz = (inst_.B().matrix().transpose() * d.z.values()).squaredNorm();
  return 2.0 * gram_norm_sq(sigma_f_, e.y) + 2.0 * gram_norm_sq(sigma_g_, e.z) + gram_norm_sq(terms_.S, d.y) +
         gram_norm_sq(terms_.T, d.z) + s * (2.0 - rho) * (2.0 - rho) / rho * btdz;
}

std::array<Relation, 3> CertificateEngine::lemma1(const BlockVector& z_prev, const IterateTriple& u,
                                                  const IterateTriple& u_next) const {
  const double s = config_.sigma, rho = config_.rho;
  const Eigen::MatrixXd& Bm = inst_.B().matrix();
  const IterateTriple d = u_next - u;
  const IterateTriple e = u - ubar_;
  const IterateTriple en = u_next - ubar_;
  const Eigen::VectorXd btdz = Bm.transpose() * d.z.values();
  const double dz_next_T = gram_norm_sq(terms_.T, d.z);
  const double dz_T = gram_norm_sq(terms_.T, u.z - z_prev);

  std::array<Relation, 3> out;
  out[0] = Relation::geq(btdz.dot(d.x.values()), 0.5 * (dz_next_T - dz_T));

  const Eigen::VectorXd w = shifted_multiplier(inst_, config_, e);
  const Eigen::VectorXd wn = shifted_multiplier(inst_, config_, en);
  const Eigen::VectorXd aty = inst_.A().matrix().transpose() * en.y.values();
  const Eigen::VectorXd r = aty + Bm.transpose() * en.z.values();
  out[1] = Relation::equal(wn.dot(r) + 0.5 * s * rho * r.squaredNorm(),
                           (w.squaredNorm() - wn.squaredNorm()) / (2.0 * s * rho));

  const double btz = (Bm.transpose() * e.z.values()).squaredNorm();
  const double btzn = (Bm.transpose() * en.z.values()).squaredNorm();
  out[2] = Relation::leq(btdz.dot(aty) - (2.0 - rho) / (2.0 * rho) * btdz.squaredNorm(),
                         0.5 * (btz - btzn) + 0.5 / (s * rho) * (dz_T - dz_next_T));
  return out;
}

Relation CertificateEngine::lemma2(const BlockVector& z_prev, const IterateTriple& u,
                                   const IterateTriple& u_next) const {
  const double r2 = inst_.constraint_residual(u_next.y, u_next.z).squared_norm();
  return Relation::geq(phi(u, z_prev), phi(u_next, u.z) + t_term(u_next, u) +
                                           (2.0 - config_.rho) * config_.sigma * r2);
}

Relation CertificateEngine::lemma3(const IterateTriple& u, const IterateTriple& u_next,
                                   double kkt_next) const {
  return Relation::geq(gram_norm_sq(ops_.H0, (u_next - u).stacked()), kkt_next * kkt_next);
}

Relation CertificateEngine::contraction(const BlockVector& z_prev, const IterateTriple& u,
                                        const IterateTriple& u_next) const {
  const double c = (2.0 - config_.rho) / config_.rho;
  const double lhs = gram_norm_sq(ops_.M, (u - ubar_).stacked()) + c * gram_norm_sq(terms_.T, u.z - z_prev);
  const double rhs = gram_norm_sq(ops_.M, (u_next - ubar_).stacked()) +
                     c * gram_norm_sq(terms_.T, u_next.z - u.z) +
                     gram_norm_sq(ops_.H, (u_next - u).stacked());
  return Relation::geq(lhs, rhs);
}

double CertificateEngine::d2(const IterateTriple& u, const BlockVector& z_prev) const {
  return gram_norm_sq(ops_.M_bar, (u - ubar_).stacked()) + gram_norm_sq(terms_.T, u.z - z_prev);
}

std::vector<CertificateRecord> CertificateEngine::evaluate(const SolveTrace& trace, int max_k) const {
  const auto& recs = trace.records;
  std::vector<CertificateRecord> out;
  if (recs.empty()) return out;
  const int last = static_cast<int>(recs.size()) - 1;
  const int kmax = max_k < 0 ? last : std::min(last, max_k);
  const int nvals = std::min(last, kmax + 1) + 1;

  const double c = (2.0 - config_.rho) / config_.rho;
  const double bar = config_.rho / (2.0 - config_.rho);
  std::vector<double> phis(nvals), mnorm(nvals), dzT(nvals);
  for (int k = 0; k < nvals; ++k) {
    const IterateTriple& u = recs[k].u;
    const BlockVector& zp = k > 0 ? recs[k - 1].u.z : u.z;
    phis[k] = phi(u, zp);
    mnorm[k] = gram_norm_sq(ops_.M, (u - ubar_).stacked());
    dzT[k] = gram_norm_sq(terms_.T, u.z - zp);
  }
  auto d2_at = [&](int k) { return bar * mnorm[k] + dzT[k]; };

  out.reserve(kmax + 1);
  for (int k = 0; k <= kmax; ++k) {
    const IterateTriple& u = recs[k].u;
    const BlockVector& zp = k > 0 ? recs[k - 1].u.z : u.z;
    CertificateRecord rec;
    rec.k = recs[k].k;
    rec.phi = phis[k];
    if (k > 0) rec.t = t_term(u, recs[k - 1].u);
    rec.dist_m_singleton = std::sqrt(bar * mnorm[k]);
    if (k < last) {
      const IterateTriple& un = recs[k + 1].u;
      rec.lemma1 = lemma1(zp, u, un);
      rec.lemma3 = lemma3(u, un, recs[k + 1].kkt_residual);
      if (k == 0) {
        rec.lemma1[0] = Relation{};
        rec.lemma1[2] = Relation{};
      } else {
        const double r2 = inst_.constraint_residual(un.y, un.z).squared_norm();
        rec.lemma2 = Relation::geq(phis[k], phis[k + 1] + t_term(un, u) +
                                                (2.0 - config_.rho) * config_.sigma * r2);
        rec.contraction = Relation::geq(mnorm[k] + c * dzT[k],
                                        mnorm[k + 1] + c * dzT[k + 1] +
                                            gram_norm_sq(ops_.H, (un - u).stacked()));
      }
      if (d2_at(k) > 0.0) rec.ratio = d2_at(k + 1) / d2_at(k);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

RateReport CertificateEngine::check_rate(const SolveTrace& trace) const {
  const auto& recs = trace.records;
  if (recs.empty()) throw InsufficientData("empty trace");
  std::vector<double> d2s;
  d2s.reserve(recs.size());
  double kappa = 0.0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const IterateTriple& u = recs[k].u;
    d2s.push_back(d2(u, k > 0 ? recs[k - 1].u.z : u.z));
    if (recs[k].kkt_residual > 0.0)
      kappa = std::max(kappa, (u - ubar_).stacked().norm() / recs[k].kkt_residual);
    if (k == 0 && !(d2s[0] > 0.0)) break;
  }
  if (!(d2s.front() > 0.0)) {
    RateReport rep;
    rep.degenerate = true;
    rep.d2 = d2s;
    return rep;
  }
  if (trace.iterations() < 20)
    throw InsufficientData("rate fit needs at least 20 iterations, trace has " +
                           std::to_string(trace.iterations()));
  RateReport rep = fit_rate(d2s);
  if (kappa > 0.0) {
    rep.kappa_emp = kappa;
    RateConstants rc = rc_;
    attach_modulus(rc, kappa, lambda_max_mbar());
    rep.implied_vartheta = *rc.vartheta;
  }
  return rep;
}

GlobalConvergenceReport CertificateEngine::check_global_convergence(const SolveTrace& trace) const {
  GlobalConvergenceReport rep;
  if (trace.records.empty()) throw InsufficientData("empty trace");
  const IterateTriple& u = trace.records.back().u;
  const IterateTriple& up = trace.records.size() > 1 ? trace.records[trace.records.size() - 2].u : u;
  const IterateTriple e = u - ubar_;
  const BlockVector dz = u.z - up.z;
  rep.quantities[0] = inst_.constraint_residual(u.y, u.z).norm();
  rep.quantities[1] = std::sqrt(config_.sigma) * inst_.B().adjoint_apply(dz).norm();
  rep.quantities[2] = gram_norm(terms_.T, dz);
  rep.quantities[3] = gram_norm(sigma_g_, e.z);
  rep.quantities[4] = gram_norm(terms_.S, u.y - up.y);
  rep.quantities[5] = gram_norm(sigma_f_, e.y);
  for (std::size_t i = 0; i < 6; ++i) rep.below[i] = rep.quantities[i] <= rep.threshold;
  return rep;
}

bool is_positive_definite(const PsdOperator& g) {
  return g.lambda_min() > 1e-10 * std::max(1.0, g.lambda_max());
}

PdEquivalence pd_equivalence(const ProblemInstance& inst, const ProximalTermPair& terms,
                             const PsdOperator& sigma_f, const PsdOperator& sigma_g, const SolverConfig& config) {
  config.validate();
  const Eigen::MatrixXd& Am = inst.A().matrix();
  const Eigen::MatrixXd& Bm = inst.B().matrix();
  PdEquivalence out;
  const PsdOperator py(inst.y_dims(), sigma_f.matrix() + terms.S.matrix() + config.sigma * Am * Am.transpose());
  const PsdOperator pz(inst.z_dims(), sigma_g.matrix() + terms.T.matrix() + config.sigma * Bm * Bm.transpose());
  out.hypothesis = is_positive_definite(py) && is_positive_definite(pz);
  const CertificateOperators ops = build_certificate_operators(inst, config, terms, sigma_f, sigma_g);
  out.M_pd = is_positive_definite(ops.M);
  out.H_pd = is_positive_definite(ops.H);
  return out;
}

}  // namespace spgadmm
