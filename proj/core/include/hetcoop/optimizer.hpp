#pragma once

#include <hetcoop/analytic.hpp>
#include <hetcoop/quadrature.hpp>
#include <hetcoop/types.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace hetcoop {

// Interference constants of the symmetric-pathloss closed form. The
// single-holder success probability is T / (c1 + c2*T); the fallback tier's
// own constant c3 plays the same role as c1 with the tiers swapped. c1/c3
// approximates the break-even caching fraction; the optimizer uses the exact
// crossing point from find_t_th instead (the two differ measurably).
struct WaterfillConstants {
  double c1 = 0.0;  // serving-tier cross+own interference weight
  double c2 = 0.0;  // serving-tier residual weight, F(theta_s) - g1(theta_s)
  double c3 = 0.0;  // fallback-tier counterpart of c1

  double ratio_threshold() const { return c1 / c3; }
};

// Requires equal pathloss exponents on both tiers.
WaterfillConstants waterfill_constants(const NetworkConfig& cfg);

// Exact break-even caching fraction: the root of psi_s1(K, T) = psi_m in
// (0, 1). Files cached below it are better served by the fallback tier.
// Throws RegionError when even T = 1 does not beat the fallback.
double find_t_th(const NetworkConfig& cfg, int coop_size, const QuadratureSpec& spec = {});

// Euclidean projection onto { lower <= x_i <= upper, sum_i x_i = total }.
std::vector<double> project_capped_simplex(const std::vector<double>& v, double total,
                                           double lower = 0.0, double upper = 1.0);

struct GradProjControls {
  double step0 = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_iters = 500;
  double pg_tol = 1e-6;

  void validate() const {
    if (!(step0 > 0.0) || !(shrink > 0.0 && shrink < 1.0) || !(sufficient_decrease > 0.0) ||
        max_iters < 1 || !(pg_tol > 0.0))
      throw DomainError("invalid gradient projection controls");
  }
};

struct GradProjResult {
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Projected gradient ascent for sum_n weights[n] * value(x[n]) over the
// capped simplex. value and slope are shared across coordinates; steps use
// Armijo backtracking along the projection arc.
GradProjResult gradient_projection(const std::vector<double>& weights,
                                   const std::function<double(double)>& value,
                                   const std::function<double(double)>& slope,
                                   std::vector<double> start, double total, double lower,
                                   double upper, const GradProjControls& ctl = {});

// Water-filling with a floor: T_n = clip((sqrt(weights[n]*c1/nu) - c1)/c2,
// floor, 1), with the level nu bisected until the entries sum to cache_size.
// Solves the single-holder problem restricted to a fixed support.
struct WaterfillResult {
  std::vector<double> probs;
  double nu = 0.0;
};

WaterfillResult waterfill_closed_form(const std::vector<double>& weights,
                                      const WaterfillConstants& consts, double floor,
                                      int cache_size);

enum class Scheme1Path { automatic, closed_form, gradient_projection };

struct Scheme1Solution {
  std::vector<double> probs;  // length N, non-increasing, zero past the support
  int support = 0;            // files with nonzero caching probability
  double objective = 0.0;     // popularity-weighted success probability
  Scheme1Path path = Scheme1Path::automatic;  // solver that actually ran
  double t_th = 0.0;
  bool degenerate = false;  // fallback dominates; most-popular placement returned
};

// Maximizes the scheme-1 objective over feasible caching distributions. The
// per-file curve jumps at T = 0 (an uncached file rides the fallback tier),
// so the solver enumerates prefix supports and solves each restricted
// problem: closed-form water-filling when coop_size is 1 and the pathloss
// exponents match, projected gradient ascent otherwise. Ties between support
// sizes resolve toward the smaller support.
Scheme1Solution optimize_scheme1(const NetworkConfig& cfg, const Popularity& pop,
                                 int cache_size, int coop_size,
                                 Scheme1Path path = Scheme1Path::automatic,
                                 const QuadratureSpec& spec = {},
                                 const GradProjControls& ctl = {});

enum class Scheme2Path { linear_greedy, kkt_bisection, gradient_projection };

struct Scheme2Solution {
  std::vector<double> probs;  // length N, non-increasing
  double objective = 0.0;
  std::optional<double> nu;  // KKT level when a stationarity path ran
  Scheme2Path path = Scheme2Path::kkt_bisection;
  double kkt_residual = 0.0;  // max stationarity violation plus capacity gap
};

// Maximizes the scheme-2 objective. The per-file curve is a Bernstein mixture
// that is continuous at T = 0, so no support enumeration is needed: with one
// serving cell the objective is linear (greedy most-popular placement); when
// the mixture increments are non-increasing the curve is concave and the KKT
// level is bisected directly; otherwise multi-start projected gradient ascent.
Scheme2Solution optimize_scheme2(const NetworkConfig& cfg, const Popularity& pop,
                                 int cache_size, int coop_size,
                                 const QuadratureSpec& spec = {},
                                 const GradProjControls& ctl = {});

// True when psi_s2 increments are non-increasing within tol, i.e. the
// scheme-2 per-file curve is concave and kkt_bisection applies.
bool check_discrete_concavity(const StpTables& tables, double tol = 1e-12);

}  // namespace hetcoop
