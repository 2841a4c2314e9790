#pragma once

#include <hetcoop/types.hpp>

namespace hetcoop {

// Gauss hypergeometric factor 2F1(-2/alpha, 1; 1 - 2/alpha; -theta) for
// alpha > 2, theta >= 0. Equals the normalized interference Laplace exponent
// of one tier against its own serving distance. Always >= 1, and for alpha = 4
// collapses to sqrt(theta)*atan(sqrt(theta)) + 1.
double hyp2f1_neg(double alpha, double theta);

// Exponent of the conditional coverage Laplace transform: with the serving
// tier x and the cross tier y,
//
//   B_{x,y}(T, theta, u) = c_pow * u^(ax/ay) + c_lin * u
//
// where ax, ay are the tier pathloss exponents, T in (0,1] is the density
// fraction of tier x eligible to serve, theta the SIR threshold and u the
// (rescaled) serving-distance variable. c_pow carries the cross-tier
// interference, c_lin the own-tier interference plus signal term.
struct BCoeffs {
  double c_pow = 0.0;  // coefficient of u^(ax/ay)
  double ratio = 1.0;  // ax / ay
  double c_lin = 0.0;  // coefficient of u
  double g1 = 0.0;     // (2*pi/ax) * csc(2*pi/ax) * theta^(2/ax), reused by the T-derivative

  double eval(double u) const;
  double deriv_T(double u, double T) const;  // d/dT of eval(u) at fixed u
};

BCoeffs b_coeffs(const TierParams& x, const TierParams& y, double T, double theta);

double b_kernel(const TierParams& x, const TierParams& y, double T, double theta, double u);
double b_kernel_dT(const TierParams& x, const TierParams& y, double T, double theta, double u);

namespace detail {

// Series branch: Pfaff-transformed sum with argument theta/(1+theta),
// relative-term cutoff 1e-15. Converges for all theta >= 0 but needs O(theta)
// terms once theta >> 1; use the tail branch there.
double hyp2f1_neg_series(double alpha, double theta);

// Large-theta branch (theta > 1): exact rearrangement
//   1 + (2pi/alpha)csc(2pi/alpha) theta^(2/alpha)
//     - sum_{j>=0} (-1)^j theta^(-j) / (1 + j*alpha/2),
// geometric in 1/theta.
double hyp2f1_neg_tail(double alpha, double theta);

}  // namespace detail

}  // namespace hetcoop
