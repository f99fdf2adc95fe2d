#include "spgadmm/error.hpp"
#include "spgadmm/solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace spgadmm;
using spgadmm::testing::Sampler;

namespace {

BlockVector one(double v) { return BlockVector({1}, Eigen::VectorXd::Constant(1, v)); }

// f = g = 0, A = B = identity on one-dimensional spaces.
ProblemInstance scalar_instance(double c) {
  return ProblemInstance(ConvexFunction::zero({1}), ConvexFunction::zero({1}), LinearMap::identity({1}),
                         LinearMap::identity({1}), one(c));
}

// Smooth f and g with dense coupling.
ProblemInstance smooth_instance(Sampler& rng, const Dims& yd, const Dims& zd, Index nx) {
  const Index ny = total_dim(yd), nz = total_dim(zd);
  ConvexFunction f(NonsmoothPart::none(), PsdOperator(yd, rng.psd(ny, ny / 2)), BlockVector(yd, rng.vector(ny)));
  ConvexFunction g(NonsmoothPart::none(), PsdOperator(zd, rng.psd(nz, nz / 2)), BlockVector(zd, rng.vector(nz)));
  return ProblemInstance(std::move(f), std::move(g), LinearMap({nx}, yd, rng.matrix(ny, nx)),
                         LinearMap({nx}, zd, rng.matrix(nz, nx)), BlockVector({nx}, rng.vector(nx)));
}

SolverConfig config(ProxStrategy s, double rho = 1.6, double sigma = 1.0) {
  SolverConfig c;
  c.strategy = s;
  c.rho = rho;
  c.sigma = sigma;
  return c;
}

IterateTriple random_state(const ProblemInstance& in, Sampler& rng) {
  return {BlockVector(in.y_dims(), rng.vector(total_dim(in.y_dims()))),
          BlockVector(in.z_dims(), rng.vector(total_dim(in.z_dims()))),
          BlockVector(in.x_dims(), rng.vector(total_dim(in.x_dims())))};
}

// Largest violation of the optimality condition of
// min h(w_1) + 1/2 <w, P w> - <b, w> + 1/2 ||w - w_prev||_S^2 at w.
double inclusion_gap(const NonsmoothPart& h, Index n1, const Eigen::MatrixXd& p, const Eigen::VectorXd& b,
                     const Eigen::MatrixXd& s, const Eigen::VectorXd& w_prev, const Eigen::VectorXd& w) {
  const Eigen::VectorXd grad = p * w - b + s * (w - w_prev);
  double gap = 0.0;
  for (Index i = 0; i < w.size(); ++i)
    gap = std::max(gap, i < n1 ? h.subgradient_distance(w(i), -grad(i)) : std::abs(grad(i)));
  return gap;
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig c;
  c.rho = 2.5;
  try {
    c.validate();
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,2)"), std::string::npos);
  }
  c.rho = 1.0;
  c.sigma = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_strategy("sgs"), ProxStrategy::sgs);
  EXPECT_THROW(parse_strategy("jacobi"), ConfigError);
}

TEST(ProximalTerms, ZeroStrategy) {
  const auto gp = generate_with_known_kkt(1, {20, 20}, {10, 10}, 30, Family::lasso);
  const auto t = build_proximal_terms(gp.instance, config(ProxStrategy::zero));
  EXPECT_EQ(t.S.matrix(), Eigen::MatrixXd::Zero(40, 40));
  EXPECT_EQ(t.T.matrix(), Eigen::MatrixXd::Zero(20, 20));
}

TEST(ProximalTerms, MajorizedIdentityCoupling) {
  const auto t = build_proximal_terms(scalar_instance(0.0), config(ProxStrategy::majorized, 1.0));
  EXPECT_NEAR(t.S.matrix()(0, 0), 0.01, 1e-15);
}

TEST(ProximalTerms, SgsSingleBlockIsZero) {
  Sampler rng(1);
  const auto in = smooth_instance(rng, {6}, {3, 3}, 5);
  const auto t = build_proximal_terms(in, config(ProxStrategy::sgs));
  EXPECT_EQ(t.S.matrix(), Eigen::MatrixXd::Zero(6, 6));
}

TEST(ProximalTerms, ZeroStrategyNeedsExactSubproblem) {
  // coupled l1 block: the y-subproblem has no closed form without a proximal term
  const Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 1);
  ProblemInstance in(ConvexFunction(NonsmoothPart::l1(1.0), PsdOperator::zero({2}), BlockVector({2})),
                     ConvexFunction::zero({1}), LinearMap({1}, {2}, a), LinearMap::identity({1}), one(0.0));
  EXPECT_THROW(build_proximal_terms(in, config(ProxStrategy::zero)), ConfigError);
  EXPECT_NO_THROW(build_proximal_terms(in, config(ProxStrategy::majorized)));
}

TEST(ProximalTerms, ExplicitTermsMustGivePositiveDefiniteSubproblems) {
  ProblemInstance in(ConvexFunction::zero({2}), ConvexFunction::zero({1}), LinearMap({1}, {2}, Eigen::MatrixXd::Ones(2, 1)),
                     LinearMap::identity({1}), one(0.0));
  SolverConfig c = config(ProxStrategy::explicit_terms);
  c.explicit_terms = ProximalTermPair{PsdOperator::zero({2}), PsdOperator::zero({1})};
  try {
    build_proximal_terms(in, c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("y-subproblem"), std::string::npos);
  }
  try {
    validate_terms(in, c, *c.explicit_terms);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("S:", 0), 0u);
  }
  c.explicit_terms = ProximalTermPair{PsdOperator::identity({2}), PsdOperator::zero({1})};
  EXPECT_NO_THROW(build_proximal_terms(in, c));
}

TEST(SgsOperator, Examples) {
  Sampler rng(2);
  EXPECT_EQ(sgs_operator(PsdOperator({4}, rng.psd(4, 4)), {4}).matrix(), Eigen::MatrixXd::Zero(4, 4));
  Eigen::MatrixXd q(2, 2);
  q << 2, 1, 1, 2;
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, 0, 0, 0;
  EXPECT_LE((sgs_operator(PsdOperator({1, 1}, q), {1, 1}).matrix() - expect).norm(), 1e-15);
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
  singular(1, 1) = 1.0;
  EXPECT_THROW(sgs_operator(PsdOperator({1, 1}, singular), {1, 1}), DecompositionError);
}

TEST(SgsOperator, OneShotEqualsSweep) {
  Sampler rng(3);
  for (const Dims& dims : {Dims{3, 4, 5}, Dims{2, 3, 3, 4}}) {
    const Index n = total_dim(dims);
    const Eigen::MatrixXd q = rng.psd(n, n) + 0.1 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd s = sgs_operator(PsdOperator(dims, q), dims).matrix();
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd b = rng.vector(n), w0 = rng.vector(n);
      const Eigen::VectorXd one_shot = (q + s).fullPivLu().solve(b + s * w0);
      const Eigen::VectorXd sweep = spgadmm::testing::sgs_sweep(NonsmoothPart::none(), dims, q, b, w0);
      EXPECT_LE((one_shot - sweep).lpNorm<Eigen::Infinity>(), 1e-10);
    }
  }
}

TEST(YUpdate, UnconstrainedQuadratic) {
  // y = x + c - B* z
  const auto y = y_update(scalar_instance(2.0), config(ProxStrategy::zero), one(0.0), one(0.0), one(1.0));
  EXPECT_NEAR(y.values()(0), 3.0, 1e-15);
}

TEST(YUpdate, MajorizedLassoSatisfiesOptimality) {
  Sampler rng(4);
  const auto gp = generate_with_known_kkt(2, {30, 40}, {20, 20}, 30, Family::lasso);
  const ProblemInstance& in = gp.instance;
  const SolverConfig c = config(ProxStrategy::majorized);
  Spgadmm solver(in, c);
  const Eigen::MatrixXd& A = in.A().matrix();
  const Eigen::MatrixXd p = in.f().Q().matrix() + c.sigma * A * A.transpose();
  for (int trial = 0; trial < 100; ++trial) {
    const IterateTriple u = random_state(in, rng);
    const BlockVector y = solver.y_update(u.y, u.z, u.x);
    const Eigen::VectorXd b =
        in.f().q().values() + A * (u.x.values() - c.sigma * (in.B().adjoint_apply(u.z) - in.c()).values());
    EXPECT_LE(inclusion_gap(in.f().nonsmooth(), in.f().nonsmooth_dim(), p, b, solver.terms().S.matrix(),
                            u.y.values(), y.values()),
              1e-8);
  }
}

TEST(YUpdate, MajorizedBoxIsClampedAffineStep) {
  Sampler rng(5);
  const Index ny = 6, nx = 4;
  const Eigen::MatrixXd a = rng.matrix(ny, nx);
  ProblemInstance in(ConvexFunction(NonsmoothPart::box(0, 1), PsdOperator::zero({ny}), BlockVector({ny})),
                     ConvexFunction::zero({2}), LinearMap({nx}, {ny}, a), LinearMap({nx}, {2}, rng.matrix(2, nx)),
                     BlockVector({nx}, rng.vector(nx)));
  const SolverConfig c = config(ProxStrategy::majorized, 1.6, 1.3);
  Spgadmm solver(in, c);
  const Eigen::MatrixXd h = c.sigma * a * a.transpose();
  const double eta = 1.01 * spgadmm::testing::jacobi_eigenvalues(h)(ny - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const IterateTriple u = random_state(in, rng);
    const Eigen::VectorXd b =
        a * (u.x.values() - c.sigma * (in.B().adjoint_apply(u.z) - in.c()).values()) +
        (eta * Eigen::MatrixXd::Identity(ny, ny) - h) * u.y.values();
    const Eigen::VectorXd expect = (b / eta).cwiseMax(0.0).cwiseMin(1.0);
    EXPECT_LE((solver.y_update(u.y, u.z, u.x).values() - expect).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(YUpdate, SgsStrategyEqualsSweep) {
  Sampler rng(6);
  for (const Dims& yd : {Dims{4, 5, 6}, Dims{3, 4, 4, 5}}) {
    const auto in = smooth_instance(rng, yd, {5, 5}, 8);
    const SolverConfig c = config(ProxStrategy::sgs);
    Spgadmm solver(in, c);
    const Eigen::MatrixXd& A = in.A().matrix();
    const Eigen::MatrixXd p = in.f().Q().matrix() + c.sigma * A * A.transpose();
    for (int trial = 0; trial < 20; ++trial) {
      const IterateTriple u = random_state(in, rng);
      const Eigen::VectorXd b =
          in.f().q().values() + A * (u.x.values() - c.sigma * (in.B().adjoint_apply(u.z) - in.c()).values());
      const Eigen::VectorXd sweep = spgadmm::testing::sgs_sweep(NonsmoothPart::none(), yd, p, b, u.y.values());
      EXPECT_LE((solver.y_update(u.y, u.z, u.x).values() - sweep).lpNorm<Eigen::Infinity>(), 1e-10);
    }
  }
}

TEST(ZUpdate, ScalarQuadratic) {
  // minimize -2z + (z - 1)^2 / 2
  const auto z = z_update(scalar_instance(1.0), config(ProxStrategy::zero, 1.0), one(0.0), one(0.0), one(2.0));
  EXPECT_NEAR(z.values()(0), 3.0, 1e-15);
}

TEST(ZUpdate, UnitRelaxationIsClassicStepWithProximalTerm) {
  Sampler rng(7);
  const auto in = smooth_instance(rng, {6}, {4, 4}, 5);
  const SolverConfig c = config(ProxStrategy::majorized, 1.0, 0.7);
  Spgadmm solver(in, c);
  const Eigen::MatrixXd& A = in.A().matrix();
  const Eigen::MatrixXd& B = in.B().matrix();
  const Eigen::MatrixXd& T = solver.terms().T.matrix();
  for (int trial = 0; trial < 20; ++trial) {
    const IterateTriple u = random_state(in, rng);
    const Eigen::VectorXd rhs = in.g().q().values() + B * u.x.values() -
                                c.sigma * B * (A.transpose() * u.y.values() - in.c().values()) + T * u.z.values();
    const Eigen::VectorXd expect =
        (in.g().Q().matrix() + c.sigma * B * B.transpose() + T).fullPivLu().solve(rhs);
    EXPECT_LE((solver.z_update(u.y, u.z, u.x).values() - expect).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(ZUpdate, SatisfiesOptimality) {
  Sampler rng(8);
  for (Family fam : {Family::box_qp, Family::random_plq}) {
    const auto gp = generate_with_known_kkt(4, {30, 30}, {20, 20}, 30, fam);
    const ProblemInstance& in = gp.instance;
    const SolverConfig c = config(ProxStrategy::majorized, 1.3);
    Spgadmm solver(in, c);
    const Eigen::MatrixXd& B = in.B().matrix();
    const Eigen::MatrixXd p = in.g().Q().matrix() + c.sigma * B * B.transpose();
    for (int trial = 0; trial < 100; ++trial) {
      const IterateTriple u = random_state(in, rng);
      const BlockVector& z = u.z;
      const BlockVector zn = solver.z_update(u.y, z, u.x);
      const Eigen::VectorXd r = in.constraint_residual(u.y, z).values();
      const Eigen::VectorXd b =
          in.g().q().values() + B * (u.x.values() - c.sigma * (c.rho * r - B.transpose() * z.values()));
      EXPECT_LE(inclusion_gap(in.g().nonsmooth(), in.g().nonsmooth_dim(), p, b, solver.terms().T.matrix(),
                              z.values(), zn.values()),
                1e-8);
    }
  }
}

TEST(XUpdate, Examples) {
  ProblemInstance in = scalar_instance(1.0);
  SolverConfig c = config(ProxStrategy::zero, 1.0);
  EXPECT_NEAR(x_update(c, in, one(1.0), one(0.0), one(0.5), one(2.0)).values()(0), 1.5, 1e-15);
  c.rho = 0.3;
  // feasible and stationary z: x is unchanged
  EXPECT_EQ(x_update(c, in, one(0.25), one(0.75), one(0.75), one(2.0)).values()(0), 2.0);
}

TEST(XUpdate, MatchesExpandedFormula) {
  Sampler rng(9);
  const auto in = smooth_instance(rng, {3}, {4}, 5);
  SolverConfig c = config(ProxStrategy::zero, 0.5, 2.0);
  const auto u = random_state(in, rng);
  const BlockVector zn(in.z_dims(), rng.vector(4));
  const Eigen::MatrixXd& A = in.A().matrix();
  const Eigen::MatrixXd& B = in.B().matrix();
  const Eigen::VectorXd expect =
      u.x.values() - 2.0 * (0.5 * (A.transpose() * u.y.values() + B.transpose() * u.z.values() - in.c().values()) +
                            B.transpose() * (zn.values() - u.z.values()));
  EXPECT_LE((x_update(c, in, u.y, u.z, zn, u.x).values() - expect).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(Solve, StartingAtSolutionConvergesImmediately) {
  const auto gp = generate_with_known_kkt(3, {20, 30}, {15, 15}, 20, Family::box_qp);
  const SolveTrace tr = solve(gp.instance, config(ProxStrategy::majorized), gp.solution);
  EXPECT_EQ(tr.status, SolveStatus::converged);
  EXPECT_EQ(tr.iterations(), 0);
}

TEST(Solve, SolutionIsAFixedPoint) {
  for (Family fam : {Family::lasso, Family::box_qp, Family::random_plq}) {
    const auto gp = generate_with_known_kkt(6, {20, 30}, {15, 15}, 20, fam);
    Spgadmm solver(gp.instance, config(ProxStrategy::sgs, 1.3));
    const IterateTriple next = solver.step(gp.solution);
    EXPECT_LE((next - gp.solution).stacked().values().lpNorm<Eigen::Infinity>(), 1e-9) << to_string(fam);
  }
}

TEST(Solve, UnitRelaxationWithoutProximalTermsIsClassicAdmm) {
  const auto gp = generate_with_known_kkt(10, {30, 40}, {20, 20}, 40, Family::lasso);
  SolverConfig c = config(ProxStrategy::zero, 1.0);
  c.max_iters = 50;
  c.tol_kkt = 1e-300;
  const SolveTrace tr = solve(gp.instance, c);
  const auto ref = spgadmm::testing::classic_admm(gp.instance, c.sigma, 50);
  ASSERT_EQ(tr.records.size(), ref.size());
  double gap = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k)
    gap = std::max(gap, (tr.records[k].u - ref[k]).stacked().values().lpNorm<Eigen::Infinity>());
  EXPECT_LE(gap, 1e-10);
}

TEST(Solve, SeededLassoConverges) {
  const auto gp = generate_with_known_kkt(1, {50, 150}, {50, 50, 50}, 100, Family::lasso);
  SolverConfig c = config(ProxStrategy::majorized);
  c.max_iters = 5000;
  c.tol_kkt = 1e-6;
  const SolveTrace tr = solve(gp.instance, c);
  EXPECT_EQ(tr.status, SolveStatus::converged);
  EXPECT_LE(tr.records.back().kkt_residual, 1e-6);
}

TEST(Solve, IterationCapReportsMaxIters) {
  const auto gp = generate_with_known_kkt(1, {20, 20}, {20}, 20, Family::random_plq);
  SolverConfig c = config(ProxStrategy::majorized);
  c.max_iters = 3;
  const SolveTrace tr = solve(gp.instance, c);
  EXPECT_EQ(tr.status, SolveStatus::max_iters);
  EXPECT_EQ(tr.iterations(), 3);
  EXPECT_EQ(tr.records.size(), 4u);
}
