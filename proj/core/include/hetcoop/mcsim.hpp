#pragma once

#include <hetcoop/types.hpp>

#include <cstdint>
#include <utility>
#include <vector>

namespace hetcoop {

// Simulation controls. One realization is one independent draw of both point
// processes, all fading, and all cache contents inside a square window
// centered on the typical user.
struct SimParams {
  double window_side = 1e4;  // meters
  int realizations = 10000;
  uint64_t master_seed = 1;
  int workers = 0;  // 0: one worker per hardware thread, capped at 8

  void validate() const {
    if (!(std::isfinite(window_side) && window_side > 0.0))
      throw DomainError("window side must be finite and positive");
    if (realizations < 1) throw DomainError("realizations must be at least 1");
    if (workers < 0 || workers > 64) throw DomainError("workers must lie in [0, 64]");
  }
};

// Counter-based generator (Philox4x32-10). Draws are addressed by
// (master seed, realization, stream, block), so any sub-draw of a realization
// can be regenerated in isolation and results never depend on evaluation
// order or thread count. Sequential interface satisfies
// uniform_random_bit_generator for use with standard distributions.
class PhiloxRng {
 public:
  PhiloxRng(uint64_t seed, uint64_t realization, uint32_t stream);

  using result_type = uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }
  result_type operator()();

  uint64_t next_u64();
  double next_unit();  // [0, 1), 53-bit resolution

 private:
  uint64_t seed_;
  uint64_t realization_;
  uint32_t stream_;
  uint32_t block_ = 0;
  uint32_t buf_[4];
  int pos_ = 4;
};

// Uniform PPP sample on the centered square: Poisson count, then i.i.d.
// uniform positions, all drawn sequentially from the given generator.
std::vector<std::pair<double, double>> sample_ppp(double density, double window_side,
                                                  PhiloxRng& rng);

// One fully materialized network draw. Fading is stored per BS so indicator
// evaluations for different files and schemes reuse the same randomness
// (common random numbers). Small-cell fading keeps the complex coefficient;
// interference always uses the stored power fade, never re^2 + im^2.
struct NetworkRealization {
  std::vector<double> mbs_x, mbs_y;
  std::vector<double> mbs_fade;   // |h|^2, unit-mean exponential
  std::vector<double> mbs_power;  // P_m * r^-alpha_m at the origin

  std::vector<double> sbs_x, sbs_y;
  std::vector<double> sbs_re, sbs_im;  // h with re^2 + im^2 == sbs_fade
  std::vector<double> sbs_fade;
  std::vector<double> sbs_power;  // P_s * r^-alpha_s at the origin
  std::vector<double> sbs_amp;    // sqrt(sbs_power)

  std::vector<uint32_t> sbs_order;  // indices by increasing distance to the origin
  std::vector<uint32_t> mbs_order;

  std::vector<uint64_t> cache_words;  // per-SBS file bitsets
  int words_per_set = 0;
  int files = 0;

  double sbs_interference = 0.0;  // sum over all small cells of power * fade
  double mbs_interference = 0.0;

  size_t sbs_count() const { return sbs_x.size(); }
  size_t mbs_count() const { return mbs_x.size(); }
  bool caches_file(size_t sbs, int file) const {
    return (cache_words[sbs * words_per_set + static_cast<size_t>(file / 64)] >>
            (file % 64)) &
           1u;
  }
};

NetworkRealization realize(const NetworkConfig& cfg, const CachingDistribution& dist,
                           const SimParams& sim, uint64_t realization_index);

enum class Scheme { scheme1, scheme2 };

// Success of the target-rate SIR test for one file under one scheme, on a
// materialized realization. Scheme 1 serves from the K nearest holders of the
// file; scheme 2 from the holders among the K nearest small cells (the rest
// of the cluster stays silent); an empty serving set falls back to the
// nearest macro BS under full small-cell interference. If fewer serving
// cells than requested are available, the indicator still evaluates with the
// ones found and *underpopulated is set.
bool sir_indicator(const NetworkRealization& real, const NetworkConfig& cfg, int coop_size,
                   int file, Scheme scheme, bool* underpopulated = nullptr);

struct StpEstimate {
  double estimate = 0.0;
  double std_error = 0.0;   // sample standard deviation / sqrt(realizations)
  long underpopulated = 0;  // (realization, cached file) events with a short serving set
};

// Monte Carlo estimate of the successful transmission probability: mean over
// realizations of the popularity-weighted indicator sum. Deterministic for a
// fixed master seed regardless of worker count.
StpEstimate estimate_stp(const NetworkConfig& cfg, const Popularity& pop,
                         const CachingDistribution& dist, int coop_size, Scheme scheme,
                         const SimParams& sim);

}  // namespace hetcoop
