#include <hetcoop/analytic.hpp>

#include <bit>
#include <cmath>
#include <numbers>

namespace hetcoop {

namespace {

constexpr double kZeroCache = 1e-12;  // caching fractions below this are "uncached"

void check_coop_size(int K) {
  if (K < 1 || K > kMaxCoopSize) throw DomainError("cooperation size must lie in [1, 8]");
}

void check_serving_fraction(double T) {
  if (!(T > 0.0) || !(T <= 1.0)) throw DomainError("serving fraction T must lie in (0, 1]");
}

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// Kernel coefficients at u = 1 for equal pathloss exponents: B = a/T + b with
// a collecting every 1/T term (own-tier thinning plus cross-tier share) and b
// the T-free remainder. a > 0 and b in (0, 1] for theta > 0.
struct LinearKernel {
  double a, b;
};

LinearKernel linear_kernel(const TierParams& x, const TierParams& y, double theta) {
  const double alpha = x.pathloss_exponent;
  const double two_over_a = 2.0 / alpha;
  const double arg = 2.0 * std::numbers::pi / alpha;
  const double csc = arg / std::sin(arg);
  const double g1 = csc * std::pow(theta, two_over_a);
  const double cross = (y.density / x.density) * std::pow(y.power / x.power, two_over_a);
  return {g1 * (1.0 + cross), hyp2f1_neg(alpha, theta) - g1};
}

double theta_s_of(const NetworkConfig& cfg) { return cfg.theta_s(); }

// Effective threshold after conditioning on ranked distance ratios t (cube
// coordinates): theta / (offset + sum_i t_i^(-alpha/2)).
double effective_theta(double theta, std::span<const double> t, double alpha, double offset) {
  double s = offset;
  for (double ti : t) s += std::pow(ti, -0.5 * alpha);
  return theta / s;
}

// Semi-infinite factor for the general (unequal exponents) route:
// int exp(-B(T, theta, u)) u^(K-1) du / (K-1)!.
double inner_integral(const NetworkConfig& cfg, int K, double T, double theta,
                      const QuadratureSpec& spec) {
  const BCoeffs c = b_coeffs(cfg.sbs, cfg.mbs, T, theta);
  auto f = [&](double u) { return std::exp(-c.eval(u)); };
  return integrate_semi_infinite(f, K - 1, spec) / factorial(K - 1);
}

double inner_integral_dT(const NetworkConfig& cfg, int K, double T, double theta,
                         const QuadratureSpec& spec) {
  const BCoeffs c = b_coeffs(cfg.sbs, cfg.mbs, T, theta);
  auto f = [&](double u) { return -c.deriv_T(u, T) * std::exp(-c.eval(u)); };
  return integrate_semi_infinite(f, K - 1, spec) / factorial(K - 1);
}

bool use_closed_form(const NetworkConfig& cfg, FormulaPath path) {
  return path == FormulaPath::automatic && cfg.symmetric_pathloss();
}

double clamp_unit(double v) { return std::min(std::max(v, 0.0), 1.0); }

}  // namespace

double psi_m(const NetworkConfig& cfg, const QuadratureSpec& spec, FormulaPath path) {
  cfg.validate();
  spec.validate();
  const double theta = cfg.theta_m();
  if (use_closed_form(cfg, path)) {
    const LinearKernel k = linear_kernel(cfg.mbs, cfg.sbs, theta);
    return 1.0 / (k.a + k.b);
  }
  const BCoeffs c = b_coeffs(cfg.mbs, cfg.sbs, 1.0, theta);
  auto f = [&](double u) { return std::exp(-c.eval(u)); };
  return clamp_unit(integrate_semi_infinite(f, 0, spec));
}

Scheme1Evaluator::Scheme1Evaluator(const NetworkConfig& cfg, int coop_size,
                                   const QuadratureSpec& spec, FormulaPath path)
    : cfg_(cfg), coop_size_(coop_size), spec_(spec) {
  cfg.validate();
  spec.validate();
  check_coop_size(coop_size);
  closed_ = use_closed_form(cfg, path);
  psi_mbs_ = psi_m(cfg, spec, path);

  const double theta = theta_s_of(cfg);
  const double alpha = cfg.sbs.pathloss_exponent;
  auto add_node = [&](double theta_eff, double w) {
    if (closed_) {
      const LinearKernel k = linear_kernel(cfg.sbs, cfg.mbs, theta_eff);
      nodes_.push_back({w, k.a, k.b});
    } else {
      raw_nodes_.push_back({w, theta_eff});
    }
  };
  if (coop_size == 1) {
    add_node(theta, 1.0);
  } else {
    for_each_unit_cube_node(coop_size - 1, spec, [&](std::span<const double> t, double w) {
      add_node(effective_theta(theta, t, alpha, 1.0), w);
    });
  }
}

double Scheme1Evaluator::psi_uncached(double T) const {
  if (closed_) {
    double acc = 0.0;
    for (const ClosedNode& n : nodes_) acc += n.w / ipow(n.a / T + n.b, coop_size_);
    return clamp_unit(acc);
  }
  double acc = 0.0;
  for (const RawNode& n : raw_nodes_)
    acc += n.w * inner_integral(cfg_, coop_size_, T, n.theta, spec_);
  return clamp_unit(acc);
}

double Scheme1Evaluator::dpsi_uncached(double T) const {
  if (closed_) {
    double acc = 0.0;
    for (const ClosedNode& n : nodes_) {
      const double y = n.a / T + n.b;
      acc += n.w * coop_size_ * (n.a / (T * T)) / ipow(y, coop_size_ + 1);
    }
    return acc;
  }
  double acc = 0.0;
  for (const RawNode& n : raw_nodes_)
    acc += n.w * inner_integral_dT(cfg_, coop_size_, T, n.theta, spec_);
  return acc;
}

double Scheme1Evaluator::psi(double T) const {
  check_serving_fraction(T);
  const uint64_t key = std::bit_cast<uint64_t>(T);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_psi_.find(key);
    if (it != memo_psi_.end()) return it->second;
  }
  const double v = psi_uncached(T);
  std::lock_guard<std::mutex> lock(mu_);
  memo_psi_.emplace(key, v);
  return v;
}

double Scheme1Evaluator::dpsi(double T) const {
  check_serving_fraction(T);
  const uint64_t key = std::bit_cast<uint64_t>(T);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_dpsi_.find(key);
    if (it != memo_dpsi_.end()) return it->second;
  }
  const double v = dpsi_uncached(T);
  std::lock_guard<std::mutex> lock(mu_);
  memo_dpsi_.emplace(key, v);
  return v;
}

double psi_s1(const NetworkConfig& cfg, int coop_size, double T, const QuadratureSpec& spec,
              FormulaPath path) {
  check_serving_fraction(T);
  return Scheme1Evaluator(cfg, coop_size, spec, path).psi(T);
}

double psi_s1_dT(const NetworkConfig& cfg, int coop_size, double T, const QuadratureSpec& spec,
                 FormulaPath path) {
  check_serving_fraction(T);
  return Scheme1Evaluator(cfg, coop_size, spec, path).dpsi(T);
}

double q_k1(const NetworkConfig& cfg, int coop_size, int k, const QuadratureSpec& spec,
            FormulaPath path) {
  cfg.validate();
  spec.validate();
  check_coop_size(coop_size);
  if (k < 1 || k > coop_size) throw DomainError("holder rank k must lie in [1, K]");
  if (k == coop_size) return 0.0;  // the K-th ranked cell is a non-holder by conditioning

  const double theta = theta_s_of(cfg);
  const double alpha = cfg.sbs.pathloss_exponent;
  const bool closed = use_closed_form(cfg, path);
  double acc = 0.0;
  for_each_unit_cube_node(k, spec, [&](std::span<const double> t, double w) {
    const double th = effective_theta(theta, t, alpha, 0.0);
    if (closed) {
      const LinearKernel lk = linear_kernel(cfg.sbs, cfg.mbs, th);
      acc += w / ipow(lk.a + lk.b, coop_size);
    } else {
      acc += w * inner_integral(cfg, coop_size, 1.0, th, spec);
    }
  });
  return clamp_unit(acc);
}

double q_k2(const NetworkConfig& cfg, int coop_size, int k, const QuadratureSpec& spec,
            FormulaPath path) {
  cfg.validate();
  spec.validate();
  check_coop_size(coop_size);
  if (k < 1 || k > coop_size) throw DomainError("holder rank k must lie in [1, K]");

  const double theta = theta_s_of(cfg);
  const double alpha = cfg.sbs.pathloss_exponent;
  const bool closed = use_closed_form(cfg, path);
  auto node_value = [&](double th) {
    if (closed) {
      const LinearKernel lk = linear_kernel(cfg.sbs, cfg.mbs, th);
      return 1.0 / ipow(lk.a + lk.b, coop_size);
    }
    return inner_integral(cfg, coop_size, 1.0, th, spec);
  };
  if (k == 1) return clamp_unit(node_value(theta));
  double acc = 0.0;
  for_each_unit_cube_node(k - 1, spec, [&](std::span<const double> t, double w) {
    acc += w * node_value(effective_theta(theta, t, alpha, 1.0));
  });
  return clamp_unit(acc);
}

StpTables build_stp_tables(const NetworkConfig& cfg, int coop_size, const QuadratureSpec& spec,
                           FormulaPath path) {
  check_coop_size(coop_size);
  StpTables t;
  t.coop_size = coop_size;
  t.psi_mbs = psi_m(cfg, spec, path);
  t.q1.assign(coop_size + 1, 0.0);
  t.q2.assign(coop_size + 1, 0.0);
  t.psi_s2.assign(coop_size + 1, 0.0);
  t.psi_s2[0] = t.psi_mbs;
  for (int k = 1; k <= coop_size; ++k) {
    t.q1[k] = q_k1(cfg, coop_size, k, spec, path);
    t.q2[k] = q_k2(cfg, coop_size, k, spec, path);
    const double frac = static_cast<double>(k) / coop_size;
    t.psi_s2[k] = clamp_unit((1.0 - frac) * t.q1[k] + frac * t.q2[k]);
  }
  return t;
}

namespace {

void check_tables(const StpTables& t) {
  if (t.coop_size < 1 || t.coop_size > kMaxCoopSize ||
      static_cast<int>(t.psi_s2.size()) != t.coop_size + 1)
    throw DomainError("tables were not built for a valid cooperation size");
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

double psi_ms(const StpTables& tables, double T) {
  check_tables(tables);
  if (!(T >= 0.0) || !(T <= 1.0)) throw DomainError("caching fraction T must lie in [0, 1]");
  const int K = tables.coop_size;
  double acc = 0.0;
  for (int k = 0; k <= K; ++k)
    acc += binom(K, k) * ipow(T, k) * ipow(1.0 - T, K - k) * tables.psi_s2[k];
  return acc;
}

double psi_ms_dT(const StpTables& tables, double T) {
  check_tables(tables);
  if (!(T >= 0.0) || !(T <= 1.0)) throw DomainError("caching fraction T must lie in [0, 1]");
  const int K = tables.coop_size;
  double acc = 0.0;
  for (int k = 0; k < K; ++k)
    acc += binom(K - 1, k) * ipow(T, k) * ipow(1.0 - T, K - 1 - k) *
           (tables.psi_s2[k + 1] - tables.psi_s2[k]);
  return K * acc;
}

namespace {

void check_mix_inputs(const Popularity& pop, const CachingDistribution& dist) {
  pop.validate();
  dist.validate();
  if (pop.files() != dist.files())
    throw DomainError("popularity and caching distribution must cover the same files");
}

}  // namespace

double stp_scheme1(const NetworkConfig& cfg, const Popularity& pop,
                   const CachingDistribution& dist, int coop_size, const QuadratureSpec& spec) {
  check_mix_inputs(pop, dist);
  const Scheme1Evaluator eval(cfg, coop_size, spec);
  double acc = 0.0;
  for (int n = 0; n < pop.files(); ++n) {
    const double t = dist.probs[n];
    if (t < kZeroCache) {
      acc += pop.probabilities[n] * eval.psi_mbs();
    } else {
      acc += pop.probabilities[n] * eval.psi(std::min(t, 1.0));
    }
  }
  return acc;
}

double stp_scheme2(const NetworkConfig& cfg, const Popularity& pop,
                   const CachingDistribution& dist, int coop_size, const QuadratureSpec& spec) {
  check_mix_inputs(pop, dist);
  const StpTables tables = build_stp_tables(cfg, coop_size, spec);
  double acc = 0.0;
  for (int n = 0; n < pop.files(); ++n) {
    double t = dist.probs[n];
    if (t < kZeroCache) t = 0.0;
    acc += pop.probabilities[n] * psi_ms(tables, std::min(t, 1.0));
  }
  return acc;
}

}  // namespace hetcoop
