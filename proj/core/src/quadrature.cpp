#include <hetcoop/quadrature.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

namespace hetcoop {

namespace detail {

namespace {

std::mutex g_node_mutex;
std::map<int, NodeTable> g_legendre;
std::map<std::pair<int, int>, NodeTable> g_laguerre;

// Golub-Welsch: eigenvalues of the Jacobi matrix are the nodes, weights are
// mu0 times the squared first eigenvector components.
NodeTable golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const int n = static_cast<int>(diag.size());
  NodeTable t;
  t.x.resize(n);
  t.w.resize(n);
  for (int j = 0; j < n; ++j) {
    t.x[j] = es.eigenvalues()(j);
    const double q0 = es.eigenvectors()(0, j);
    t.w[j] = mu0 * q0 * q0;
  }
  return t;
}

}  // namespace

const NodeTable& gauss_legendre_01(int n) {
  std::lock_guard<std::mutex> lock(g_node_mutex);
  auto it = g_legendre.find(n);
  if (it != g_legendre.end()) return it->second;

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int i = 1; i < n; ++i) sub(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
  NodeTable t = golub_welsch(diag, sub, 2.0);
  for (int j = 0; j < n; ++j) {  // map [-1,1] -> [0,1]
    t.x[j] = 0.5 * (t.x[j] + 1.0);
    t.w[j] *= 0.5;
  }
  return g_legendre.emplace(n, std::move(t)).first->second;
}

const NodeTable& gauss_laguerre_scaled(int n, int weight_power) {
  const auto key = std::make_pair(n, weight_power);
  std::lock_guard<std::mutex> lock(g_node_mutex);
  auto it = g_laguerre.find(key);
  if (it != g_laguerre.end()) return it->second;

  const double a = static_cast<double>(weight_power);
  Eigen::VectorXd diag(n), sub(n - 1);
  for (int i = 0; i < n; ++i) diag(i) = 2.0 * i + a + 1.0;
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(i * (i + a));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const double log_mu0 = std::lgamma(a + 1.0);
  NodeTable t;
  t.x.resize(n);
  t.w.resize(n);
  for (int j = 0; j < n; ++j) {
    t.x[j] = es.eigenvalues()(j);
    const double q0 = std::abs(es.eigenvectors()(0, j));
    // Weight times e^{x} computed in log space; raw far-tail weights underflow
    // doubles long before the scaled product does. Components this small are
    // below the eigensolver's absolute noise floor, and any integrand the
    // auto-scaler admits has decayed to nothing out there, so drop the node
    // rather than amplify noise by e^{x}.
    const bool trustworthy = q0 > 1e-150 && t.x[j] < 700.0;
    t.w[j] = trustworthy ? std::exp(log_mu0 + 2.0 * std::log(q0) + t.x[j]) : 0.0;
  }
  return g_laguerre.emplace(key, std::move(t)).first->second;
}

}  // namespace detail

namespace {

// Smallest power-of-two scale s with f(s) decayed below e^-2 of f near zero;
// returns s/2 as the substitution scale so the rule sees an O(1) decay length.
double auto_scale(const std::function<double(double)>& f) {
  double f0 = f(0.0);
  if (!(std::isfinite(f0) && f0 > 0.0)) f0 = f(1e-8);
  if (!(std::isfinite(f0) && f0 > 0.0)) return 1.0;
  const double target = f0 * std::exp(-2.0);
  auto decayed = [&](double s) {
    const double v = f(s);
    return !(v > target);  // NaN counts as decayed; refinement will flag real trouble
  };
  double s = 1.0;
  if (!decayed(s)) {
    for (int it = 0; it < 80 && !decayed(s); ++it) s *= 2.0;
  } else {
    for (int it = 0; it < 80 && s > 1e-18 && decayed(0.5 * s); ++it) s *= 0.5;
  }
  return 0.5 * s;
}

double laguerre_pass(const std::function<double(double)>& f, int weight_power, int n,
                     double sigma) {
  const auto& t = detail::gauss_laguerre_scaled(n, weight_power);
  double acc = 0.0;
  for (size_t j = 0; j < t.x.size(); ++j) {
    if (t.w[j] == 0.0) continue;
    acc += t.w[j] * f(sigma * t.x[j]);
  }
  return acc * std::pow(sigma, weight_power + 1);
}

// 7-point Gauss / 15-point Kronrod pair on [-1, 1] (QUADPACK dqk15 constants).
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelResult {
  double value;
  double error;
};

PanelResult g7k15(const std::function<double(double)>& g, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double k15 = kWgk[7] * g(c);
  double g7 = kWg[3] * g(c);
  for (int i = 0; i < 7; ++i) {
    const double f1 = g(c - h * kXgk[i]);
    const double f2 = g(c + h * kXgk[i]);
    k15 += kWgk[i] * (f1 + f2);
    if (i % 2 == 1) g7 += kWg[i / 2] * (f1 + f2);
  }
  return {k15 * h, std::abs((k15 - g7) * h)};
}

double adaptive_on_unit(const std::function<double(double)>& g, const QuadratureSpec& spec) {
  struct Seg {
    double a, b, value, error;
    bool operator<(const Seg& o) const {  // worst error first, ties by position
      if (error != o.error) return error < o.error;
      return a > o.a;
    }
  };
  std::vector<Seg> heap;
  bool finite = true;
  auto push = [&](double a, double b) {
    PanelResult r = g7k15(g, a, b);
    if (!std::isfinite(r.value) || !std::isfinite(r.error)) finite = false;
    heap.push_back({a, b, r.value, r.error});
    std::push_heap(heap.begin(), heap.end());
  };
  push(0.0, 1.0);
  auto total_value = [&] {
    double total = 0.0;
    for (const Seg& s : heap)
      if (std::isfinite(s.value)) total += s.value;
    return total;
  };
  for (int iter = 0; iter < 2000; ++iter) {
    double total = 0.0, err = 0.0;
    for (const Seg& s : heap) {
      total += s.value;
      err += s.error;
    }
    if (!finite)
      throw NumericalError("adaptive semi-infinite rule hit a non-finite panel", total_value());
    if (err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) return total;
    std::pop_heap(heap.begin(), heap.end());
    Seg worst = heap.back();
    // A panel this narrow that still dominates the error budget marks an
    // unresolvable (non-integrable) feature.
    if (worst.b - worst.a < 1e-30)
      throw NumericalError("adaptive semi-infinite rule stalled on a boundary feature", total);
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    push(worst.a, mid);
    push(mid, worst.b);
  }
  throw NumericalError("adaptive semi-infinite rule exceeded its subdivision budget",
                       total_value());
}

// Joe-Kuo direction-number parameters (new-joe-kuo-6) for dimensions 2..10;
// dimension 1 is the van der Corput sequence.
struct SobolParams {
  int s;
  uint32_t a;
  uint32_t m[5];
};
constexpr SobolParams kSobol[9] = {
    {1, 0, {1, 0, 0, 0, 0}},   {2, 1, {1, 3, 0, 0, 0}},   {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},   {4, 1, {1, 1, 3, 3, 0}},   {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},  {5, 4, {1, 1, 5, 5, 5}},   {5, 7, {1, 1, 7, 11, 19}},
};
constexpr int kSobolMaxDim = 10;
constexpr int kSobolBits = 32;

void sobol_directions(int dim_index, uint32_t v[kSobolBits]) {
  if (dim_index == 0) {
    for (int k = 0; k < kSobolBits; ++k) v[k] = 1u << (31 - k);
    return;
  }
  const SobolParams& p = kSobol[dim_index - 1];
  for (int k = 0; k < p.s; ++k) v[k] = p.m[k] << (31 - k);
  for (int k = p.s; k < kSobolBits; ++k) {
    v[k] = v[k - p.s] ^ (v[k - p.s] >> p.s);
    for (int j = 1; j < p.s; ++j)
      if ((p.a >> (p.s - 1 - j)) & 1u) v[k] ^= v[k - j];
  }
}

}  // namespace

double integrate_semi_infinite(const std::function<double(double)>& f, int weight_power,
                               const QuadratureSpec& spec) {
  spec.validate();
  if (weight_power < 0 || weight_power > 60)
    throw DomainError("weight_power must lie in [0, 60]");

  // Both rules work in the auto-scaled variable u = sigma * x so the integrand
  // decays on an O(1) length regardless of the raw decay constant.
  const double sigma = auto_scale(f);

  if (spec.semi_infinite_rule == SemiInfiniteRule::adaptive_truncated) {
    const double wp = static_cast<double>(weight_power);
    auto g = [&](double v) {
      const double x = -std::log(v);
      const double poly = weight_power == 0 ? 1.0 : std::pow(x, wp);
      return f(sigma * x) * poly / v;
    };
    return std::pow(sigma, weight_power + 1) * adaptive_on_unit(g, spec);
  }

  double prev = laguerre_pass(f, weight_power, spec.laguerre_points, sigma);
  for (int n = 2 * spec.laguerre_points; n <= 8 * spec.laguerre_points; n *= 2) {
    const double cur = laguerre_pass(f, weight_power, n, sigma);
    if (std::isfinite(cur) &&
        std::abs(cur - prev) <= std::max(spec.abs_tol, spec.rel_tol * std::abs(cur)))
      return cur;
    prev = cur;
  }
  throw NumericalError("semi-infinite rule did not settle under node doubling",
                       std::isfinite(prev) ? prev : 0.0);
}

void for_each_unit_cube_node(int dim, const QuadratureSpec& spec,
                             const std::function<void(std::span<const double>, double)>& visit) {
  spec.validate();
  if (dim < 1) throw DomainError("cube dimension must be at least 1");
  const UnitCubeRule rule =
      spec.unit_cube_rule.value_or(dim <= 3 ? UnitCubeRule::tensor_gauss : UnitCubeRule::sobol);

  if (rule == UnitCubeRule::tensor_gauss) {
    const int n = spec.gl_points_per_dim;
    double total = 1.0;
    for (int k = 0; k < dim; ++k) {
      total *= n;
      if (total > 1e8) throw DomainError("tensor cube rule too large for this dimension");
    }
    const auto& t = detail::gauss_legendre_01(n);
    std::vector<int> idx(dim, 0);
    std::vector<double> pt(dim);
    for (;;) {
      double w = 1.0;
      for (int k = 0; k < dim; ++k) {
        pt[k] = t.x[idx[k]];
        w *= t.w[idx[k]];
      }
      visit(std::span<const double>(pt.data(), pt.size()), w);
      int k = 0;
      while (k < dim && ++idx[k] == n) idx[k++] = 0;
      if (k == dim) break;
    }
    return;
  }

  if (dim > kSobolMaxDim) throw DomainError("sobol rule supports up to 10 dimensions");
  const int n = spec.sobol_points;
  std::vector<std::array<uint32_t, kSobolBits>> dirs(dim);
  for (int d = 0; d < dim; ++d) sobol_directions(d, dirs[d].data());
  std::vector<uint32_t> state(dim, 0);
  std::vector<double> pt(dim);
  const double w = 1.0 / static_cast<double>(n);
  const double scale = std::ldexp(1.0, -32);
  // Gray-code walk starting at index 1: the index-0 origin point is skipped so
  // every emitted coordinate is strictly positive.
  for (uint64_t i = 1; i <= static_cast<uint64_t>(n); ++i) {
    const int c = std::countr_zero(i);
    for (int d = 0; d < dim; ++d) {
      state[d] ^= dirs[d][c];
      pt[d] = state[d] * scale;
    }
    visit(std::span<const double>(pt.data(), pt.size()), w);
  }
}

double integrate_unit_cube(const std::function<double(std::span<const double>)>& f, int dim,
                           const QuadratureSpec& spec) {
  double acc = 0.0;
  for_each_unit_cube_node(dim, spec,
                          [&](std::span<const double> t, double w) { acc += w * f(t); });
  return acc;
}

}  // namespace hetcoop
