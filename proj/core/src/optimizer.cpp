#include <hetcoop/optimizer.hpp>

#include <hetcoop/specfun.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace hetcoop {
namespace {

constexpr double kTieTol = 1e-12;  // support-size ties resolve to the smaller one

double weighted_value(const std::vector<double>& w, const std::vector<double>& x,
                      const std::function<double(double)>& value) {
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += w[i] * value(x[i]);
  return acc;
}

// Stationarity violation of the capped-simplex KKT system plus capacity gap.
double kkt_violation(const std::vector<double>& w, const std::vector<double>& x, double nu,
                     const std::function<double(double)>& slope, double total) {
  double worst = 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double m = w[i] * slope(x[i]);
    if (x[i] <= 1e-12)
      worst = std::max(worst, m - nu);
    else if (x[i] >= 1.0 - 1e-12)
      worst = std::max(worst, nu - m);
    else
      worst = std::max(worst, std::abs(m - nu));
    sum += x[i];
  }
  return std::max(worst, std::abs(sum - total));
}

double break_even(const Scheme1Evaluator& ev) {
  const double base = ev.psi_mbs();
  const double top = ev.psi(1.0);
  if (!(top > base))
    throw RegionError("cooperative service never beats the fallback tier", top, base);
  double hi = 1.0;
  double lo = 0.5;
  int guard = 0;
  while (ev.psi(lo) > base) {
    hi = lo;
    lo *= 0.5;
    if (++guard > 200) throw NumericalError("break-even search failed to bracket", lo);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ev.psi(mid) > base)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

WaterfillConstants waterfill_constants(const NetworkConfig& cfg) {
  cfg.validate();
  if (!cfg.symmetric_pathloss())
    throw DomainError("waterfill constants need equal pathloss exponents");
  // at T = 1 the kernel is (c_pow + g1)/T * u + (c_lin - g1) * u
  const BCoeffs own = b_coeffs(cfg.sbs, cfg.mbs, 1.0, cfg.theta_s());
  const BCoeffs fb = b_coeffs(cfg.mbs, cfg.sbs, 1.0, cfg.theta_m());
  WaterfillConstants wc;
  wc.c1 = own.g1 + own.c_pow;
  wc.c2 = own.c_lin - own.g1;
  wc.c3 = fb.g1 + fb.c_pow;
  return wc;
}

double find_t_th(const NetworkConfig& cfg, int coop_size, const QuadratureSpec& spec) {
  const Scheme1Evaluator ev(cfg, coop_size, spec);
  return break_even(ev);
}

std::vector<double> project_capped_simplex(const std::vector<double>& v, double total,
                                           double lower, double upper) {
  const size_t n = v.size();
  if (n == 0) throw DomainError("cannot project an empty vector");
  if (!(lower <= upper)) throw DomainError("projection bounds are inverted");
  if (total < n * lower - 1e-9 || total > n * upper + 1e-9)
    throw DomainError("projection target is infeasible for the bounds");
  const auto sum_at = [&](double shift) {
    double s = 0.0;
    for (double vi : v) s += std::clamp(vi - shift, lower, upper);
    return s;
  };
  double lo = *std::min_element(v.begin(), v.end()) - upper;  // everything at upper
  double hi = *std::max_element(v.begin(), v.end()) - lower;  // everything at lower
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sum_at(mid) >= total)
      lo = mid;
    else
      hi = mid;
  }
  const double shift = 0.5 * (lo + hi);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::clamp(v[i] - shift, lower, upper);
  return out;
}

GradProjResult gradient_projection(const std::vector<double>& weights,
                                   const std::function<double(double)>& value,
                                   const std::function<double(double)>& slope,
                                   std::vector<double> start, double total, double lower,
                                   double upper, const GradProjControls& ctl) {
  ctl.validate();
  if (weights.empty() || weights.size() != start.size())
    throw DomainError("weights and start must have the same nonzero size");
  const size_t n = weights.size();

  GradProjResult res;
  res.x = project_capped_simplex(start, total, lower, upper);
  res.objective = weighted_value(weights, res.x, value);
  std::vector<double> grad(n), trial(n);
  double step_cap = ctl.step0;
  for (int it = 0; it < ctl.max_iters; ++it) {
    res.iterations = it + 1;
    for (size_t i = 0; i < n; ++i) grad[i] = weights[i] * slope(res.x[i]);

    for (size_t i = 0; i < n; ++i) trial[i] = res.x[i] + ctl.step0 * grad[i];
    const std::vector<double> ref = project_capped_simplex(trial, total, lower, upper);
    double move = 0.0;
    for (size_t i = 0; i < n; ++i) move = std::max(move, std::abs(ref[i] - res.x[i]));
    if (move <= ctl.pg_tol) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    for (double s = step_cap; s > 1e-14; s *= ctl.shrink) {
      for (size_t i = 0; i < n; ++i) trial[i] = res.x[i] + s * grad[i];
      std::vector<double> cand = project_capped_simplex(trial, total, lower, upper);
      double along = 0.0;
      for (size_t i = 0; i < n; ++i) along += grad[i] * (cand[i] - res.x[i]);
      const double f_cand = weighted_value(weights, cand, value);
      if (f_cand > res.objective &&
          f_cand >= res.objective + ctl.sufficient_decrease * std::max(along, 0.0)) {
        res.x = std::move(cand);
        res.objective = f_cand;
        step_cap = std::min(ctl.step0, s / ctl.shrink);  // let the step recover
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no ascent direction left at this precision
  }
  return res;
}

WaterfillResult waterfill_closed_form(const std::vector<double>& weights,
                                      const WaterfillConstants& consts, double floor,
                                      int cache_size) {
  const size_t n = weights.size();
  if (n == 0) throw DomainError("waterfill needs at least one weight");
  if (!(floor >= 0.0 && floor < 1.0)) throw DomainError("waterfill floor must lie in [0, 1)");
  if (cache_size < 1 || static_cast<size_t>(cache_size) > n)
    throw DomainError("cache size must lie in [1, support size]");
  if (n * floor > cache_size + 1e-12)
    throw DomainError("floor is infeasible for the cache size");
  double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
  for (double w : weights) {
    if (!(std::isfinite(w) && w > 0.0)) throw DomainError("waterfill weights must be positive");
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  const double c1 = consts.c1, c2 = consts.c2;
  if (!(c1 > 0.0 && c2 > 0.0)) throw DomainError("waterfill constants must be positive");

  const auto entry = [&](double w, double nu) {
    return std::clamp((std::sqrt(w * c1 / nu) - c1) / c2, floor, 1.0);
  };
  const auto total_at = [&](double nu) {
    double s = 0.0;
    for (double w : weights) s += entry(w, nu);
    return s;
  };
  const double target = static_cast<double>(cache_size);
  double lo = 0.5 * wmin * c1 / ((c1 + c2) * (c1 + c2));  // every entry capped at 1
  double hi = 2.0 * wmax * c1 / ((c1 + c2 * floor) * (c1 + c2 * floor));  // all at the floor
  int guard = 0;
  while (total_at(lo) < target && ++guard < 200) lo *= 0.5;
  while (total_at(hi) > target && ++guard < 200) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (total_at(mid) >= target)
      lo = mid;
    else
      hi = mid;
  }
  WaterfillResult out;
  out.nu = std::sqrt(lo * hi);
  out.probs.resize(n);
  for (size_t i = 0; i < n; ++i) out.probs[i] = entry(weights[i], out.nu);
  return out;
}

Scheme1Solution optimize_scheme1(const NetworkConfig& cfg, const Popularity& pop,
                                 int cache_size, int coop_size, Scheme1Path path,
                                 const QuadratureSpec& spec, const GradProjControls& ctl) {
  cfg.validate();
  pop.validate();
  spec.validate();
  ctl.validate();
  const int files = pop.files();
  if (cache_size < 1 || cache_size > files)
    throw DomainError("cache size must lie in [1, files]");
  const bool symmetric = cfg.symmetric_pathloss();
  if (path == Scheme1Path::closed_form && !(coop_size == 1 && symmetric))
    throw DomainError("closed-form path needs one serving cell and equal pathloss exponents");

  const std::vector<double>& a = pop.probabilities;
  std::vector<double> suffix(files + 1, 0.0);  // popularity mass riding the fallback
  for (int i = files - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + a[i];

  const Scheme1Evaluator ev(cfg, coop_size, spec);
  const double psi_mbs = ev.psi_mbs();

  Scheme1Solution sol;
  sol.probs.assign(files, 0.0);

  const auto degenerate_fill = [&](double t_th) {
    std::fill_n(sol.probs.begin(), cache_size, 1.0);
    sol.support = cache_size;
    sol.degenerate = true;
    sol.t_th = t_th;
    sol.path = Scheme1Path::automatic;  // no continuous solver ran
    sol.objective = (1.0 - suffix[cache_size]) * ev.psi(1.0) + suffix[cache_size] * psi_mbs;
    return sol;
  };

  double t_th = 0.0;
  try {
    t_th = break_even(ev);
  } catch (const RegionError&) {
    return degenerate_fill(1.0);
  }
  sol.t_th = t_th;

  const double support_bound = std::ceil(cache_size / t_th) - 1.0;
  const int n_max = support_bound >= files ? files : static_cast<int>(support_bound);
  if (n_max < cache_size) return degenerate_fill(t_th);

  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  int best_ns = 0;

  const bool closed =
      path != Scheme1Path::gradient_projection && coop_size == 1 && symmetric;
  if (closed) {
    const WaterfillConstants wc = waterfill_constants(cfg);
    const auto closed_psi = [&](double t) { return t / (wc.c1 + wc.c2 * t); };
    for (int ns = cache_size; ns <= n_max; ++ns) {
      const std::vector<double> head(a.begin(), a.begin() + ns);
      const WaterfillResult wf = waterfill_closed_form(head, wc, t_th, cache_size);
      double obj = suffix[ns] * psi_mbs;
      for (int i = 0; i < ns; ++i) obj += a[i] * closed_psi(wf.probs[i]);
      if (obj > best + kTieTol) {
        best = obj;
        best_x = wf.probs;
        best_ns = ns;
      }
    }
    sol.path = Scheme1Path::closed_form;
  } else {
    const auto value = [&ev](double t) { return ev.psi(t); };
    const auto slope = [&ev](double t) { return ev.dpsi(t); };
    std::vector<double> prev;
    for (int ns = cache_size; ns <= n_max; ++ns) {
      const std::vector<double> head(a.begin(), a.begin() + ns);
      double head_mass = 1.0 - suffix[ns];

      std::vector<std::vector<double>> starts;
      starts.emplace_back(ns, static_cast<double>(cache_size) / ns);
      {
        std::vector<double> s(ns, t_th);
        std::fill_n(s.begin(), std::min(cache_size, ns), 1.0);
        starts.push_back(std::move(s));
      }
      {
        std::vector<double> s(ns);
        for (int i = 0; i < ns; ++i) s[i] = a[i] * cache_size / head_mass;
        starts.push_back(std::move(s));
      }
      if (!prev.empty()) {
        std::vector<double> s = prev;
        s.push_back(t_th);
        starts.push_back(std::move(s));
      }

      double local_best = -std::numeric_limits<double>::infinity();
      std::vector<double> local_x;
      for (auto& s0 : starts) {
        GradProjResult r = gradient_projection(head, value, slope, std::move(s0), cache_size,
                                               t_th, 1.0, ctl);
        if (r.objective > local_best) {
          local_best = r.objective;
          local_x = std::move(r.x);
        }
      }
      prev = local_x;
      const double obj = local_best + suffix[ns] * psi_mbs;
      if (obj > best + kTieTol) {
        best = obj;
        best_x = std::move(local_x);
        best_ns = ns;
      }
    }
    sol.path = Scheme1Path::gradient_projection;
  }

  std::sort(best_x.begin(), best_x.end(), std::greater<double>());
  std::copy(best_x.begin(), best_x.end(), sol.probs.begin());
  sol.support = best_ns;
  sol.objective = best;
  return sol;
}

bool check_discrete_concavity(const StpTables& tables, double tol) {
  for (size_t k = 2; k < tables.psi_s2.size(); ++k) {
    const double prev = tables.psi_s2[k - 1] - tables.psi_s2[k - 2];
    const double cur = tables.psi_s2[k] - tables.psi_s2[k - 1];
    if (cur > prev + tol) return false;
  }
  return true;
}

Scheme2Solution optimize_scheme2(const NetworkConfig& cfg, const Popularity& pop,
                                 int cache_size, int coop_size, const QuadratureSpec& spec,
                                 const GradProjControls& ctl) {
  cfg.validate();
  pop.validate();
  spec.validate();
  ctl.validate();
  const int files = pop.files();
  if (cache_size < 1 || cache_size > files)
    throw DomainError("cache size must lie in [1, files]");

  const StpTables tables = build_stp_tables(cfg, coop_size, spec);
  const std::vector<double>& a = pop.probabilities;
  const auto value = [&tables](double t) { return psi_ms(tables, t); };
  const auto slope = [&tables](double t) { return psi_ms_dT(tables, t); };

  Scheme2Solution sol;
  if (coop_size == 1) {
    // the per-file curve is linear in T, so capacity flows to the most
    // popular files; the water level is the marginal file's gain rate
    sol.probs.assign(files, 0.0);
    std::fill_n(sol.probs.begin(), cache_size, 1.0);
    sol.objective = weighted_value(a, sol.probs, value);
    const double gain = tables.psi_s2[1] - tables.psi_s2[0];
    sol.nu = a[cache_size - 1] * gain;
    sol.path = Scheme2Path::linear_greedy;
    sol.kkt_residual = kkt_violation(a, sol.probs, *sol.nu, slope,
                                     static_cast<double>(cache_size));
    return sol;
  }

  if (check_discrete_concavity(tables)) {
    // concave curve: invert the per-file stationarity condition and bisect
    // the shared level until the capacity constraint binds
    const auto t_of = [&](double nu, double w) {
      if (w * slope(0.0) <= nu) return 0.0;
      if (w * slope(1.0) >= nu) return 1.0;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (w * slope(mid) > nu)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    };
    const auto total_at = [&](double nu) {
      double s = 0.0;
      for (double w : a) s += t_of(nu, w);
      return s;
    };
    const double s1v = slope(1.0), s0v = slope(0.0);
    double nu_lo = std::min({0.0, a.front() * s1v, a.back() * s1v}) - 1.0;  // all at 1
    double nu_hi = std::max({0.0, a.front() * s0v, a.back() * s0v}) + 1.0;  // all at 0
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (nu_lo + nu_hi);
      if (total_at(mid) >= cache_size)
        nu_lo = mid;
      else
        nu_hi = mid;
    }
    const double nu = 0.5 * (nu_lo + nu_hi);
    std::vector<double> x(files);
    double sum = 0.0;
    for (int i = 0; i < files; ++i) {
      x[i] = t_of(nu, a[i]);
      sum += x[i];
    }
    // a flat stretch of the curve makes the inverse jump over the capacity;
    // fall through to the projection solver in that case
    if (std::abs(sum - cache_size) <= 1e-9) {
      std::sort(x.begin(), x.end(), std::greater<double>());
      sol.probs = std::move(x);
      sol.objective = weighted_value(a, sol.probs, value);
      sol.nu = nu;
      sol.path = Scheme2Path::kkt_bisection;
      sol.kkt_residual = kkt_violation(a, sol.probs, nu, slope,
                                       static_cast<double>(cache_size));
      return sol;
    }
  }

  std::vector<std::vector<double>> starts;
  starts.emplace_back(files, static_cast<double>(cache_size) / files);
  {
    std::vector<double> s(files, 0.0);
    std::fill_n(s.begin(), cache_size, 1.0);
    starts.push_back(std::move(s));
  }
  {
    std::vector<double> s(files);
    for (int i = 0; i < files; ++i) s[i] = a[i] * cache_size;
    starts.push_back(std::move(s));
  }
  GradProjResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  for (auto& s0 : starts) {
    GradProjResult r = gradient_projection(a, value, slope, std::move(s0),
                                           static_cast<double>(cache_size), 0.0, 1.0, ctl);
    if (r.objective > best.objective) best = std::move(r);
  }
  std::sort(best.x.begin(), best.x.end(), std::greater<double>());
  sol.probs = std::move(best.x);
  sol.objective = weighted_value(a, sol.probs, value);
  sol.nu = std::nullopt;
  sol.path = Scheme2Path::gradient_projection;
  // report the violation against the best-fitting level
  std::vector<double> interior;
  for (int i = 0; i < files; ++i)
    if (sol.probs[i] > 1e-9 && sol.probs[i] < 1.0 - 1e-9)
      interior.push_back(a[i] * slope(sol.probs[i]));
  double nu_fit;
  if (!interior.empty()) {
    std::nth_element(interior.begin(), interior.begin() + interior.size() / 2,
                     interior.end());
    nu_fit = interior[interior.size() / 2];
  } else {
    // every entry sits on a bound: the level must clear each zero entry's
    // gain and stay below each saturated entry's gain
    double need_ge = -std::numeric_limits<double>::infinity();
    double need_le = std::numeric_limits<double>::infinity();
    for (int i = 0; i < files; ++i) {
      const double m = a[i] * slope(sol.probs[i]);
      if (sol.probs[i] <= 1e-9)
        need_ge = std::max(need_ge, m);
      else
        need_le = std::min(need_le, m);
    }
    if (std::isinf(need_ge) && std::isinf(need_le))
      nu_fit = 0.0;
    else if (std::isinf(need_ge))
      nu_fit = need_le;
    else if (std::isinf(need_le))
      nu_fit = need_ge;
    else
      nu_fit = 0.5 * (need_ge + need_le);
  }
  sol.kkt_residual =
      kkt_violation(a, sol.probs, nu_fit, slope, static_cast<double>(cache_size));
  return sol;
}

}  // namespace hetcoop
