#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetcoop {

// Invalid argument or parameter combination (fails a documented precondition).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested operation is undefined in this parameter region (e.g. cooperative
// transmission never beats the fallback tier, so no threshold exists).
class RegionError : public std::runtime_error {
 public:
  RegionError(const std::string& what, double psi_coop, double psi_mbs)
      : std::runtime_error(what), psi_coop(psi_coop), psi_mbs(psi_mbs) {}
  double psi_coop;
  double psi_mbs;
};

// A numeric routine failed to reach its tolerance; carries the best estimate.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimate)
      : std::runtime_error(what), estimate(estimate) {}
  double estimate;
};

// One network tier: a homogeneous planar Poisson process of transmitters.
struct TierParams {
  double density = 0.0;            // points per m^2
  double power = 0.0;              // transmit power, watts
  double pathloss_exponent = 4.0;  // must exceed 2 for finite interference
  double bandwidth = 0.0;          // Hz

  void validate() const {
    if (!(std::isfinite(density) && density > 0.0))
      throw DomainError("tier density must be finite and positive");
    if (!(std::isfinite(power) && power > 0.0))
      throw DomainError("tier power must be finite and positive");
    if (!(std::isfinite(pathloss_exponent) && pathloss_exponent > 2.0))
      throw DomainError("tier pathloss exponent must be finite and > 2");
    if (!(std::isfinite(bandwidth) && bandwidth > 0.0))
      throw DomainError("tier bandwidth must be finite and positive");
  }
};

// Two-tier downlink with a shared rate target. SIR thresholds derive from the
// per-tier bandwidth: theta = 2^(rate/bandwidth) - 1.
struct NetworkConfig {
  TierParams sbs;
  TierParams mbs;
  double target_rate = 0.0;  // bits per second

  double theta_s() const { return std::exp2(target_rate / sbs.bandwidth) - 1.0; }
  double theta_m() const { return std::exp2(target_rate / mbs.bandwidth) - 1.0; }

  bool symmetric_pathloss() const {
    return std::abs(sbs.pathloss_exponent - mbs.pathloss_exponent) < 1e-9;
  }

  void validate() const {
    sbs.validate();
    mbs.validate();
    if (!(std::isfinite(target_rate) && target_rate > 0.0))
      throw DomainError("target rate must be finite and positive");
  }

  // Non-fatal notes about parameter regions where the model is stressed
  // (interference-limited assumptions, threshold magnitudes, densities).
  std::vector<std::string> regime_warnings() const {
    std::vector<std::string> notes;
    if (theta_m() > 1e9)
      notes.push_back("fallback-tier SIR threshold exceeds 1e9; its hit probability is effectively zero");
    if (sbs.density < mbs.density)
      notes.push_back("small-cell tier is sparser than the fallback tier; model intends the opposite");
    if (sbs.power > mbs.power)
      notes.push_back("small-cell transmit power exceeds fallback-tier power");
    return notes;
  }
};

// File request distribution a_1 >= a_2 >= ... >= a_N, sum 1.
struct Popularity {
  std::vector<double> probabilities;

  int files() const { return static_cast<int>(probabilities.size()); }

  void validate() const {
    if (probabilities.empty()) throw DomainError("popularity must be non-empty");
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double a : probabilities) {
      if (!(std::isfinite(a) && a > 0.0 && a <= 1.0))
        throw DomainError("popularity entries must lie in (0, 1]");
      if (a > prev + 1e-15)
        throw DomainError("popularity entries must be non-increasing");
      prev = a;
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw DomainError("popularity entries must sum to 1 within 1e-12");
  }
};

// Per-file caching probabilities T_n for caches of capacity M. Feasibility is
// sum T_n = M with every entry in [0, 1]; the iid baseline keeps its sampling
// weights and relaxes the sum constraint (its marginals need not hit M).
struct CachingDistribution {
  std::vector<double> probs;
  int cache_size = 0;
  bool relaxed_sum = false;
  std::vector<double> iid_weights;  // non-empty only for the iid placement baseline

  int files() const { return static_cast<int>(probs.size()); }

  void validate() const {
    if (probs.empty()) throw DomainError("caching distribution must be non-empty");
    if (cache_size < 1) throw DomainError("cache size must be at least 1");
    if (cache_size > files()) throw DomainError("cache size exceeds the number of files");
    double sum = 0.0;
    for (double t : probs) {
      if (!(std::isfinite(t) && t >= 0.0 && t <= 1.0 + 1e-12))
        throw DomainError("caching probabilities must lie in [0, 1]");
      sum += t;
    }
    if (!relaxed_sum && std::abs(sum - cache_size) > 1e-9)
      throw DomainError("caching probabilities must sum to the cache size within 1e-9");
    if (!iid_weights.empty()) {
      if (static_cast<int>(iid_weights.size()) != files())
        throw DomainError("iid sampling weights must match the number of files");
      double ws = 0.0;
      for (double w : iid_weights) {
        if (!(std::isfinite(w) && w > 0.0)) throw DomainError("iid sampling weights must be positive");
        ws += w;
      }
      if (std::abs(ws - 1.0) > 1e-12) throw DomainError("iid sampling weights must sum to 1");
    }
  }
};

}  // namespace hetcoop
