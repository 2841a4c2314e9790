#pragma once

#include <hetcoop/types.hpp>

#include <functional>
#include <optional>
#include <span>

namespace hetcoop {

enum class UnitCubeRule { tensor_gauss, sobol };
enum class SemiInfiniteRule { gauss_laguerre, adaptive_truncated };

// Shared accuracy/effort knobs for every integral in the library. One spec is
// threaded through an entire evaluation so analytic results are reproducible.
struct QuadratureSpec {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  // Unset: tensor Gauss-Legendre up to dimension 3, Sobol above.
  std::optional<UnitCubeRule> unit_cube_rule{};
  int gl_points_per_dim = 32;
  int sobol_points = 1 << 16;
  SemiInfiniteRule semi_infinite_rule = SemiInfiniteRule::gauss_laguerre;
  int laguerre_points = 64;

  void validate() const {
    if (!(std::isfinite(rel_tol) && rel_tol > 0.0)) throw DomainError("rel_tol must be positive");
    if (!(std::isfinite(abs_tol) && abs_tol > 0.0)) throw DomainError("abs_tol must be positive");
    if (gl_points_per_dim < 2) throw DomainError("gl_points_per_dim must be at least 2");
    if (sobol_points < 2) throw DomainError("sobol_points must be at least 2");
    if (laguerre_points < 2) throw DomainError("laguerre_points must be at least 2");
  }
};

// Integral of f(u) * u^weight_power over u in [0, inf). The weight power is
// the polynomial factor of the integrand (any factorial normalization is the
// caller's). gauss_laguerre applies a generalized rule in an auto-scaled
// variable with one node-doubling refinement check; adaptive_truncated maps
// u = -ln(v) onto (0, 1] and subdivides adaptively. Throws NumericalError
// (carrying the last estimate) if the refinement never settles.
double integrate_semi_infinite(const std::function<double(double)>& f, int weight_power,
                               const QuadratureSpec& spec);

// Nodes and weights of the unit-cube rule chosen by the spec for the given
// dimension. The visitor receives each node (span of dim coordinates, all
// strictly inside (0,1)) and its weight; weights sum to 1 up to rule accuracy.
void for_each_unit_cube_node(int dim, const QuadratureSpec& spec,
                             const std::function<void(std::span<const double>, double)>& visit);

// Integral of f over [0,1]^dim using the spec's cube rule.
double integrate_unit_cube(const std::function<double(std::span<const double>)>& f, int dim,
                           const QuadratureSpec& spec);

namespace detail {

// Nodes/weights on [0,1] for the per-axis Gauss-Legendre rule (cached).
struct NodeTable {
  std::vector<double> x;
  std::vector<double> w;
};
const NodeTable& gauss_legendre_01(int n);

// Generalized Gauss-Laguerre nodes with weight u^a e^-u; w holds weights
// pre-multiplied by e^{x} so the caller sums w_j * f(x_j) directly.
const NodeTable& gauss_laguerre_scaled(int n, int weight_power);

}  // namespace detail

}  // namespace hetcoop
