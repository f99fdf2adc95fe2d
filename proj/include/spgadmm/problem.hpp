#pragma once

#include "spgadmm/blockspace.hpp"
#include "spgadmm/functions.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace spgadmm {

// min f(y) + g(z)  s.t.  A* y + B* z = c,  with A: X -> Y and B: X -> Z.
class ProblemInstance {
 public:
  ProblemInstance() = default;
  ProblemInstance(ConvexFunction f, ConvexFunction g, LinearMap A, LinearMap B, BlockVector c);

  const ConvexFunction& f() const { return f_; }
  const ConvexFunction& g() const { return g_; }
  const LinearMap& A() const { return A_; }
  const LinearMap& B() const { return B_; }
  const BlockVector& c() const { return c_; }

  const Dims& y_dims() const { return A_.codomain_dims(); }
  const Dims& z_dims() const { return B_.codomain_dims(); }
  const Dims& x_dims() const { return A_.domain_dims(); }

  // A* y + B* z - c
  BlockVector constraint_residual(const BlockVector& y, const BlockVector& z) const;

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;

 private:
  ConvexFunction f_;
  ConvexFunction g_;
  LinearMap A_;
  LinearMap B_;
  BlockVector c_;
};

// u = (y, z, x)
struct IterateTriple {
  BlockVector y;
  BlockVector z;
  BlockVector x;

  static IterateTriple zeros(const ProblemInstance& inst);

  Dims dims() const;
  BlockVector stacked() const;

  friend IterateTriple operator-(const IterateTriple& a, const IterateTriple& b) {
    return {a.y - b.y, a.z - b.z, a.x - b.x};
  }
  friend bool operator==(const IterateTriple&, const IterateTriple&) = default;
};

using KnownSolution = IterateTriple;

// R(u) = (y - Prox_f(y + A x), z - Prox_g(z + B x), A* y + B* z - c), stacked in U = Y x Z x X.
BlockVector kkt_residual(const ProblemInstance& inst, const IterateTriple& u);

struct KktReport {
  Membership f_membership;  // A x in df(y)
  Membership g_membership;  // B x in dg(z)
  double feasibility = 0.0;
  bool valid() const { return f_membership.member && g_membership.member && feasibility <= 1e-10; }
};

KktReport check_kkt(const ProblemInstance& inst, const IterateTriple& u);

enum class Family { lasso, box_qp, random_plq };

Family parse_family(const std::string& name);
const char* to_string(Family family);

struct GeneratedProblem {
  ProblemInstance instance;
  KnownSolution solution;
};

GeneratedProblem generate_with_known_kkt(std::uint64_t seed, const Dims& y_dims, const Dims& z_dims,
                                         Index x_dim, Family family);

struct LoadedProblem {
  ProblemInstance instance;
  std::optional<KnownSolution> solution;
};

std::string serialize_instance(const ProblemInstance& inst, const std::optional<KnownSolution>& sol);
LoadedProblem parse_instance(const std::string& text);

void save_instance(const std::string& path, const ProblemInstance& inst,
                   const std::optional<KnownSolution>& sol = std::nullopt);
LoadedProblem load_instance(const std::string& path);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace spgadmm
