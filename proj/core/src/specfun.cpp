#include <hetcoop/specfun.hpp>

#include <cmath>
#include <numbers>

namespace hetcoop {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha_theta(double alpha, double theta) {
  if (!(std::isfinite(alpha) && alpha > 2.0))
    throw DomainError("pathloss exponent must be finite and > 2");
  if (!(std::isfinite(theta) && theta >= 0.0))
    throw DomainError("SIR threshold must be finite and >= 0");
}

// (2*pi/alpha) * csc(2*pi/alpha); alpha > 2 keeps the sine argument in (0, pi).
double csc_factor(double alpha) {
  const double x = 2.0 * kPi / alpha;
  return x / std::sin(x);
}

}  // namespace

namespace detail {

double hyp2f1_neg_series(double alpha, double theta) {
  check_alpha_theta(alpha, theta);
  if (theta == 0.0) return 1.0;
  // Pfaff: 2F1(-2/a, 1; 1-2/a; -t) = (1+t)^-1 * 2F1(1, 1; 1-2/a; t/(1+t)),
  // and with unit numerator parameters the sum is sum_k k! / (c)_k * w^k.
  const double c = 1.0 - 2.0 / alpha;
  const double w = theta / (1.0 + theta);
  double term = 1.0;
  double sum = 1.0;
  for (long k = 0; k < 2'000'000; ++k) {
    term *= w * (static_cast<double>(k) + 1.0) / (c + static_cast<double>(k));
    sum += term;
    if (std::abs(term) <= 1e-15 * std::abs(sum)) return sum / (1.0 + theta);
  }
  throw NumericalError("hypergeometric series did not reach its cutoff", sum / (1.0 + theta));
}

double hyp2f1_neg_tail(double alpha, double theta) {
  check_alpha_theta(alpha, theta);
  if (!(theta > 1.0)) throw DomainError("tail expansion requires theta > 1");
  double sum = 0.0;
  double p = 1.0;  // theta^-j
  for (int j = 0; j < 2000; ++j) {
    const double term = p / (1.0 + 0.5 * alpha * static_cast<double>(j));
    sum += (j % 2 == 0) ? term : -term;
    p /= theta;
    if (term <= 1e-17) break;
  }
  return 1.0 + csc_factor(alpha) * std::pow(theta, 2.0 / alpha) - sum;
}

}  // namespace detail

double hyp2f1_neg(double alpha, double theta) {
  check_alpha_theta(alpha, theta);
  if (theta == 0.0) return 1.0;
  if (alpha == 4.0) {
    const double s = std::sqrt(theta);
    return s * std::atan(s) + 1.0;
  }
  if (theta > 50.0) return detail::hyp2f1_neg_tail(alpha, theta);
  return detail::hyp2f1_neg_series(alpha, theta);
}

double BCoeffs::eval(double u) const {
  if (!(std::isfinite(u) && u >= 0.0)) throw DomainError("kernel variable u must be >= 0");
  if (u == 0.0) return 0.0;
  return c_pow * std::pow(u, ratio) + c_lin * u;
}

double BCoeffs::deriv_T(double u, double T) const {
  if (!(std::isfinite(u) && u >= 0.0)) throw DomainError("kernel variable u must be >= 0");
  // Both pieces scale as negative powers of T, so the derivative can reuse the
  // already-scaled coefficients: d(c_pow)/dT = -ratio*c_pow/T and the linear
  // coefficient loses g1/T^2.
  return -ratio * c_pow * std::pow(u, ratio) / T - g1 * u / (T * T);
}

namespace {

// The kernel reads density, power and pathloss exponent only; bandwidth may
// be unset on tiers built just for kernel evaluation.
void check_tier_for_kernel(const TierParams& t) {
  if (!(std::isfinite(t.density) && t.density > 0.0))
    throw DomainError("tier density must be finite and positive");
  if (!(std::isfinite(t.power) && t.power > 0.0))
    throw DomainError("tier power must be finite and positive");
  if (!(std::isfinite(t.pathloss_exponent) && t.pathloss_exponent > 2.0))
    throw DomainError("tier pathloss exponent must be finite and > 2");
}

}  // namespace

BCoeffs b_coeffs(const TierParams& x, const TierParams& y, double T, double theta) {
  check_tier_for_kernel(x);
  check_tier_for_kernel(y);
  if (!(std::isfinite(theta) && theta >= 0.0))
    throw DomainError("SIR threshold must be finite and >= 0");
  if (!(std::isfinite(T)) || T <= 0.0 || T > 1.0)
    throw DomainError("serving fraction T must lie in (0, 1]");

  const double ax = x.pathloss_exponent;
  const double ay = y.pathloss_exponent;
  BCoeffs c;
  c.ratio = ax / ay;
  c.g1 = csc_factor(ax) * std::pow(theta, 2.0 / ax);
  c.c_pow = 2.0 * std::pow(kPi, 2.0 - c.ratio) / ay / std::sin(2.0 * kPi / ay) *
            (y.density / std::pow(x.density, c.ratio)) *
            std::pow(theta * y.power / x.power, 2.0 / ay) / std::pow(T, c.ratio);
  c.c_lin = (1.0 / T - 1.0) * c.g1 + hyp2f1_neg(ax, theta);
  return c;
}

double b_kernel(const TierParams& x, const TierParams& y, double T, double theta, double u) {
  return b_coeffs(x, y, T, theta).eval(u);
}

double b_kernel_dT(const TierParams& x, const TierParams& y, double T, double theta, double u) {
  return b_coeffs(x, y, T, theta).deriv_T(u, T);
}

}  // namespace hetcoop
