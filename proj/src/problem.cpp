#include "spgadmm/problem.hpp"

#include "spgadmm/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace spgadmm {

ProblemInstance::ProblemInstance(ConvexFunction f, ConvexFunction g, LinearMap A, LinearMap B,
                                 BlockVector c)
    : f_(std::move(f)), g_(std::move(g)), A_(std::move(A)), B_(std::move(B)), c_(std::move(c)) {
  require_same_dims(A_.domain_dims(), B_.domain_dims(), "domains of A and B");
  require_same_dims(c_.dims(), A_.domain_dims(), "c vs X");
  require_same_dims(f_.dims(), A_.codomain_dims(), "f vs Y");
  require_same_dims(g_.dims(), B_.codomain_dims(), "g vs Z");
}

BlockVector ProblemInstance::constraint_residual(const BlockVector& y, const BlockVector& z) const {
  BlockVector r = A_.adjoint_apply(y);
  r += B_.adjoint_apply(z);
  r -= c_;
  return r;
}

IterateTriple IterateTriple::zeros(const ProblemInstance& inst) {
  return {BlockVector(inst.y_dims()), BlockVector(inst.z_dims()), BlockVector(inst.x_dims())};
}

Dims IterateTriple::dims() const { return concat_dims(concat_dims(y.dims(), z.dims()), x.dims()); }

BlockVector IterateTriple::stacked() const {
  Eigen::VectorXd v(y.size() + z.size() + x.size());
  v << y.values(), z.values(), x.values();
  return BlockVector(dims(), std::move(v));
}

BlockVector kkt_residual(const ProblemInstance& inst, const IterateTriple& u) {
  const BlockVector ry = u.y - inst.f().prox(u.y + inst.A().apply(u.x), 1.0);
  const BlockVector rz = u.z - inst.g().prox(u.z + inst.B().apply(u.x), 1.0);
  const BlockVector rx = inst.constraint_residual(u.y, u.z);
  return IterateTriple{ry, rz, rx}.stacked();
}

KktReport check_kkt(const ProblemInstance& inst, const IterateTriple& u) {
  KktReport rep;
  rep.f_membership = inst.f().subgradient_witness(u.y, inst.A().apply(u.x));
  rep.g_membership = inst.g().subgradient_witness(u.z, inst.B().apply(u.x));
  rep.feasibility = inst.constraint_residual(u.y, u.z).norm();
  return rep;
}

Family parse_family(const std::string& name) {
  if (name == "lasso") return Family::lasso;
  if (name == "box-qp") return Family::box_qp;
  if (name == "random-plq") return Family::random_plq;
  throw ConfigError("unknown family '" + name + "' (expected lasso, box-qp or random-plq)");
}

const char* to_string(Family family) {
  switch (family) {
    case Family::lasso: return "lasso";
    case Family::box_qp: return "box-qp";
    case Family::random_plq: return "random-plq";
  }
  return "?";
}

namespace {

// Explicit transforms so the stream is identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }

  int pick(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Side {
  NonsmoothPart h;
  bool separable = false;
};

// Coupling map X -> W. With separable set, each row of block 1 has a single
// nonzero on its own column inside `lead`, and the remaining rows live on the
// columns outside `lead`, so block 1 of the Gram matrix is diagonal and decoupled.
Eigen::MatrixXd draw_coupling(Rng& rng, Index rows, Index n1, Index nx, bool separable,
                              Index lead_begin) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, nx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(nx));
  if (!separable) {
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < nx; ++j) m(i, j) = rng.normal() * scale;
    return m;
  }
  for (Index i = 0; i < n1; ++i) {
    const double mag = rng.uniform(0.5, 1.5);
    m(i, lead_begin + i) = rng.uniform() < 0.5 ? -mag : mag;
  }
  const double rest_scale = 1.0 / std::sqrt(static_cast<double>(nx - n1));
  for (Index i = n1; i < rows; ++i)
    for (Index j = 0; j < nx; ++j)
      if (j < lead_begin || j >= lead_begin + n1) m(i, j) = rng.normal() * rest_scale;
  return m;
}

Eigen::MatrixXd draw_quadratic(Rng& rng, Index n, Index n1) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n1; ++i) Q(i, i) = rng.uniform(0.5, 1.5);
  const Index nr = n - n1;
  if (nr > 0) {
    const Index k = std::max<Index>(1, nr / 2);
    Eigen::MatrixXd W(nr, k);
    for (Index i = 0; i < nr; ++i)
      for (Index j = 0; j < k; ++j) W(i, j) = rng.normal();
    Q.bottomRightCorner(nr, nr) = W * W.transpose() / static_cast<double>(k) +
                                  0.5 * Eigen::MatrixXd::Identity(nr, nr);
  }
  return Q;
}

// Point and subgradient s of h at that point, coordinatewise on block 1.
void draw_point(Rng& rng, const NonsmoothPart& h, Index n1, Eigen::VectorXd& point,
                Eigen::VectorXd& s) {
  for (Index i = 0; i < point.size(); ++i) point(i) = rng.normal();
  s = Eigen::VectorXd::Zero(point.size());
  for (Index i = 0; i < n1; ++i) {
    switch (h.kind) {
      case NonsmoothPart::Kind::zero: break;
      case NonsmoothPart::Kind::l1:
        if (rng.uniform() < 0.5) {
          point(i) = 0.0;
          s(i) = rng.uniform(-0.9 * h.weight, 0.9 * h.weight);
        } else {
          const double mag = rng.uniform(0.5, 1.5);
          point(i) = rng.uniform() < 0.5 ? -mag : mag;
          s(i) = point(i) > 0 ? h.weight : -h.weight;
        }
        break;
      case NonsmoothPart::Kind::box: {
        const int which = rng.pick(3);
        if (which == 0) {
          point(i) = h.lo;
          s(i) = -rng.uniform(0.1, 1.0);
        } else if (which == 1) {
          point(i) = h.hi;
          s(i) = rng.uniform(0.1, 1.0);
        } else {
          const double w = h.hi - h.lo;
          point(i) = rng.uniform(h.lo + 0.1 * w, h.hi - 0.1 * w);
        }
        break;
      }
    }
  }
}

NonsmoothPart random_part(Rng& rng) {
  switch (rng.pick(3)) {
    case 0: return NonsmoothPart::none();
    case 1: return NonsmoothPart::l1(rng.uniform(0.5, 1.5));
    default: return NonsmoothPart::box(-1.0, 1.0);
  }
}

void require_positive(const Dims& d, const char* what) {
  if (d.empty()) throw DimensionError(std::string(what) + " has no blocks");
  for (Index n : d)
    if (n <= 0) throw DimensionError(std::string(what) + " has a non-positive block");
}

}  // namespace

GeneratedProblem generate_with_known_kkt(std::uint64_t seed, const Dims& y_dims, const Dims& z_dims,
                                         Index x_dim, Family family) {
  require_positive(y_dims, "y dims");
  require_positive(z_dims, "z dims");
  if (x_dim <= 0) throw DimensionError("x dim must be positive");
  Rng rng(seed);

  const Index ny = total_dim(y_dims), nz = total_dim(z_dims), nx = x_dim;
  Side fs, gs;
  switch (family) {
    case Family::lasso:
      fs = {NonsmoothPart::l1(rng.uniform(0.5, 1.5)), true};
      break;
    case Family::box_qp:
      fs = {NonsmoothPart::box(-1.0, 1.0), true};
      break;
    case Family::random_plq:
      fs = {random_part(rng), rng.uniform() < 0.5};
      gs = {random_part(rng), rng.uniform() < 0.5};
      if (fs.h.is_zero() && gs.h.is_zero()) fs.h = NonsmoothPart::l1(rng.uniform(0.5, 1.5));
      break;
  }
  const Index p1 = fs.h.is_zero() ? 0 : y_dims.front();
  const Index n1 = gs.h.is_zero() ? 0 : z_dims.front();
  fs.separable = fs.separable && p1 > 0 && p1 < nx && p1 < ny;
  gs.separable = gs.separable && n1 > 0 && n1 < nx && n1 < nz;

  const Eigen::MatrixXd Amat = draw_coupling(rng, ny, p1, nx, fs.separable, 0);
  const Eigen::MatrixXd Bmat = draw_coupling(rng, nz, n1, nx, gs.separable, nx - n1);
  const Eigen::MatrixXd Qf = draw_quadratic(rng, ny, p1);
  const Eigen::MatrixXd Qg = draw_quadratic(rng, nz, n1);

  Eigen::VectorXd ybar(ny), zbar(nz), sf, sg;
  draw_point(rng, fs.h, p1, ybar, sf);
  draw_point(rng, gs.h, n1, zbar, sg);
  Eigen::VectorXd xbar(nx);
  for (Index i = 0; i < nx; ++i) xbar(i) = rng.normal();

  const Dims x_dims{nx};
  LinearMap A(x_dims, y_dims, Amat);
  LinearMap B(x_dims, z_dims, Bmat);
  PsdOperator Qf_op(y_dims, Qf), Qg_op(z_dims, Qg);
  const Eigen::VectorXd qf = Qf_op.matrix() * ybar + sf - Amat * xbar;
  const Eigen::VectorXd qg = Qg_op.matrix() * zbar + sg - Bmat * xbar;
  ConvexFunction f(fs.h, std::move(Qf_op), BlockVector(y_dims, qf), 0.0);
  ConvexFunction g(gs.h, std::move(Qg_op), BlockVector(z_dims, qg), 0.0);

  KnownSolution sol{BlockVector(y_dims, ybar), BlockVector(z_dims, zbar), BlockVector(x_dims, xbar)};
  BlockVector c = A.adjoint_apply(sol.y);
  c += B.adjoint_apply(sol.z);
  return {ProblemInstance(std::move(f), std::move(g), std::move(A), std::move(B), std::move(c)),
          std::move(sol)};
}

}  // namespace spgadmm
