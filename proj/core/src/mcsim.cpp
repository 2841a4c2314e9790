#include <hetcoop/mcsim.hpp>

#include <hetcoop/analytic.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

namespace hetcoop {
namespace {

constexpr double kZeroCache = 1e-12;  // matches the analytic zero-cache cutoff

// Draw streams within one realization. Counts are consumed sequentially; the
// rest are addressed by point index, so lazy and eager evaluation see the
// same bits.
constexpr uint32_t kStreamCountMbs = 0;
constexpr uint32_t kStreamCountSbs = 1;
constexpr uint32_t kStreamPosMbs = 2;
constexpr uint32_t kStreamPosSbs = 3;
constexpr uint32_t kStreamFadeMbs = 4;
constexpr uint32_t kStreamFadeSbs = 5;
constexpr uint32_t kStreamCache = 6;

struct Block {
  uint32_t v[4];
};

Block philox4x32(uint64_t seed, uint64_t realization, uint32_t stream, uint32_t block) {
  uint32_t c0 = static_cast<uint32_t>(realization);
  uint32_t c1 = static_cast<uint32_t>(realization >> 32);
  uint32_t c2 = stream;
  uint32_t c3 = block;
  uint32_t k0 = static_cast<uint32_t>(seed);
  uint32_t k1 = static_cast<uint32_t>(seed >> 32);
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = uint64_t{0xD2511F53u} * c0;
    const uint64_t p1 = uint64_t{0xCD9E8D57u} * c2;
    const uint32_t n0 = static_cast<uint32_t>(p1 >> 32) ^ c1 ^ k0;
    const uint32_t n1 = static_cast<uint32_t>(p1);
    const uint32_t n2 = static_cast<uint32_t>(p0 >> 32) ^ c3 ^ k1;
    const uint32_t n3 = static_cast<uint32_t>(p0);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return {{c0, c1, c2, c3}};
}

uint64_t lane_a(const Block& b) { return (uint64_t{b.v[0]} << 32) | b.v[1]; }
uint64_t lane_b(const Block& b) { return (uint64_t{b.v[2]} << 32) | b.v[3]; }

double unit53(uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// 1 - unit53 lies in (0, 1], so the log argument never hits zero.
double exp_fade(uint64_t bits) { return -std::log1p(-unit53(bits)); }

struct Pt {
  double x, y;
};

Pt pos_from_block(uint64_t seed, uint64_t realization, uint32_t stream, uint32_t i,
                  double side) {
  const Block b = philox4x32(seed, realization, stream, i);
  return {(unit53(lane_a(b)) - 0.5) * side, (unit53(lane_b(b)) - 0.5) * side};
}

struct FadeDraw {
  double g, re, im;
};

FadeDraw sbs_fade_draw(uint64_t seed, uint64_t realization, uint32_t i, bool complex_too) {
  const Block b = philox4x32(seed, realization, kStreamFadeSbs, i);
  FadeDraw f{exp_fade(lane_a(b)), 0.0, 0.0};
  if (complex_too) {
    const double phi = 2.0 * std::numbers::pi * unit53(lane_b(b));
    const double amp = std::sqrt(f.g);
    f.re = amp * std::cos(phi);
    f.im = amp * std::sin(phi);
  }
  return f;
}

double path_power(double power, double r2, double alpha) {
  const double rr = std::max(r2, 1e-12);
  if (alpha == 4.0) return power / (rr * rr);
  return power * std::pow(rr, -0.5 * alpha);
}

long poisson_count(uint64_t seed, uint64_t realization, uint32_t stream, double mean) {
  PhiloxRng rng(seed, realization, stream);
  std::poisson_distribution<long> pois(mean);
  return pois(rng);
}

void check_window(const NetworkConfig& cfg, const SimParams& sim) {
  const double area = sim.window_side * sim.window_side;
  if (cfg.sbs.density * area > 5e7 || cfg.mbs.density * area > 5e7)
    throw DomainError("window holds too many base stations");
}

// Samples one cache realization per SBS from a single uniform draw.
//
// Feasible distributions use the strip scheme: lay the per-file masses end to
// end on a line of total length M, then take the files hit by the M points
// eta + j for one uniform offset eta. Every file mass is at most 1 and the
// points are spaced exactly 1 apart, so each file is hit at most once, every
// cache holds exactly M distinct files, and the per-file marginal is T_n.
//
// Marginal-only distributions (the iid placement baseline) instead draw M
// files with replacement from the sampling weights; duplicates collapse, which
// reproduces the 1 - (1 - a_n)^M hit marginal.
struct CacheSampler {
  int files = 0;
  int cache_size = 0;
  bool iid = false;
  std::vector<double> cum;
  uint32_t blocks_per_sbs = 1;

  explicit CacheSampler(const CachingDistribution& dist) {
    files = dist.files();
    cache_size = dist.cache_size;
    iid = !dist.iid_weights.empty();
    if (dist.relaxed_sum && !iid)
      throw DomainError("marginal-only caching needs iid sampling weights to simulate");
    const std::vector<double>& mass = iid ? dist.iid_weights : dist.probs;
    cum.resize(mass.size());
    double acc = 0.0;
    for (size_t i = 0; i < mass.size(); ++i) {
      acc += mass[i];
      cum[i] = acc;
    }
    cum.back() = iid ? 1.0 : static_cast<double>(cache_size);
    blocks_per_sbs = iid ? static_cast<uint32_t>((cache_size + 1) / 2) : 1u;
  }

  template <class SetBit>
  void sample(uint64_t seed, uint64_t realization, uint32_t sbs, SetBit&& set) const {
    if (!iid) {
      const Block b = philox4x32(seed, realization, kStreamCache, sbs);
      const double eta = unit53(lane_a(b));
      size_t file = 0;
      for (int j = 0; j < cache_size; ++j) {
        const double point = eta + j;
        while (file < cum.size() && cum[file] <= point) ++file;
        if (file >= cum.size()) break;
        set(static_cast<int>(file));
      }
    } else {
      for (int j = 0; j < cache_size; ++j) {
        const Block b = philox4x32(seed, realization, kStreamCache,
                                   sbs * blocks_per_sbs + static_cast<uint32_t>(j / 2));
        const double u = unit53((j % 2) ? lane_b(b) : lane_a(b));
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        set(static_cast<int>(std::min<size_t>(it - cum.begin(), cum.size() - 1)));
      }
    }
  }
};

// Read-only adapter over a materialized realization.
struct FullView {
  const NetworkRealization& r;

  size_t sbs_count() const { return r.sbs_count(); }
  uint32_t sbs_at(size_t rank) const { return r.sbs_order[rank]; }
  bool caches(uint32_t s, int file) const { return r.caches_file(s, file); }
  double p(uint32_t s) const { return r.sbs_power[s]; }
  double g(uint32_t s) const { return r.sbs_fade[s]; }
  double amp(uint32_t s) const { return r.sbs_amp[s]; }
  double re(uint32_t s) const { return r.sbs_re[s]; }
  double im(uint32_t s) const { return r.sbs_im[s]; }
  double S_all() const { return r.sbs_interference; }
  double M_all() const { return r.mbs_interference; }
  bool has_mbs() const { return r.mbs_count() > 0; }
  double mbs_signal() const {
    const uint32_t i = r.mbs_order[0];
    return r.mbs_power[i] * r.mbs_fade[i];
  }
};

// Estimator view: materializes per-SBS geometry and power fades eagerly (the
// interference totals need them all), but sorts ranks incrementally and draws
// caches and complex fading only for the cells an indicator actually visits.
// Every draw is block-addressed, so results are bit-identical to FullView.
struct LeanWorld {
  uint64_t seed;
  uint64_t idx;
  const CacheSampler& sampler;
  int words;

  long n_m = 0, n_s = 0;
  std::vector<double> r2_, p_, g_;
  std::vector<uint32_t> order_;
  size_t sorted_ = 0;

  std::vector<double> re_, im_;
  std::vector<uint8_t> fade_known_;
  std::vector<uint64_t> bits_;
  std::vector<uint8_t> cache_known_;

  double s_all = 0.0, m_all = 0.0, mbs_sig = 0.0;
  bool mbs_present = false;

  LeanWorld(const NetworkConfig& cfg, const CacheSampler& smp, const SimParams& sim,
            uint64_t index)
      : seed(sim.master_seed), idx(index), sampler(smp), words((smp.files + 63) / 64) {
    const double side = sim.window_side;
    const double area = side * side;
    n_m = poisson_count(seed, idx, kStreamCountMbs, cfg.mbs.density * area);
    n_s = poisson_count(seed, idx, kStreamCountSbs, cfg.sbs.density * area);

    double best_r2 = std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_m; ++i) {
      const Pt q = pos_from_block(seed, idx, kStreamPosMbs, static_cast<uint32_t>(i), side);
      const double rr = q.x * q.x + q.y * q.y;
      const double p = path_power(cfg.mbs.power, rr, cfg.mbs.pathloss_exponent);
      const Block fb = philox4x32(seed, idx, kStreamFadeMbs, static_cast<uint32_t>(i));
      const double g = exp_fade(lane_a(fb));
      m_all += p * g;
      if (rr < best_r2) {
        best_r2 = rr;
        mbs_sig = p * g;
      }
    }
    mbs_present = n_m > 0;

    r2_.resize(n_s);
    p_.resize(n_s);
    g_.resize(n_s);
    for (long i = 0; i < n_s; ++i) {
      const Pt q = pos_from_block(seed, idx, kStreamPosSbs, static_cast<uint32_t>(i), side);
      r2_[i] = q.x * q.x + q.y * q.y;
      p_[i] = path_power(cfg.sbs.power, r2_[i], cfg.sbs.pathloss_exponent);
      g_[i] = sbs_fade_draw(seed, idx, static_cast<uint32_t>(i), false).g;
      s_all += p_[i] * g_[i];
    }
    order_.resize(n_s);
    std::iota(order_.begin(), order_.end(), 0u);
    re_.resize(n_s);
    im_.resize(n_s);
    fade_known_.assign(n_s, 0);
    bits_.assign(static_cast<size_t>(n_s) * words, 0);
    cache_known_.assign(n_s, 0);
  }

  size_t sbs_count() const { return static_cast<size_t>(n_s); }

  void ensure_sorted(size_t rank) {
    while (rank >= sorted_ && sorted_ < order_.size()) {
      const size_t want = std::min(order_.size(), std::max<size_t>(64, sorted_ * 4));
      const auto cmp = [this](uint32_t a, uint32_t b) {
        return r2_[a] != r2_[b] ? r2_[a] < r2_[b] : a < b;
      };
      if (want < order_.size())
        std::nth_element(order_.begin() + sorted_, order_.begin() + want - 1, order_.end(),
                         cmp);
      std::sort(order_.begin() + sorted_, order_.begin() + want, cmp);
      sorted_ = want;
    }
  }

  uint32_t sbs_at(size_t rank) {
    ensure_sorted(rank);
    return order_[rank];
  }

  bool caches(uint32_t s, int file) {
    if (!cache_known_[s]) {
      sampler.sample(seed, idx, s, [&](int f) {
        bits_[static_cast<size_t>(s) * words + f / 64] |= uint64_t{1} << (f % 64);
      });
      cache_known_[s] = 1;
    }
    return (bits_[static_cast<size_t>(s) * words + file / 64] >> (file % 64)) & 1u;
  }

  void ensure_fade(uint32_t s) {
    if (!fade_known_[s]) {
      const FadeDraw d = sbs_fade_draw(seed, idx, s, true);
      re_[s] = d.re;
      im_[s] = d.im;
      fade_known_[s] = 1;
    }
  }

  double p(uint32_t s) const { return p_[s]; }
  double g(uint32_t s) const { return g_[s]; }
  double amp(uint32_t s) const { return std::sqrt(p_[s]); }
  double re(uint32_t s) {
    ensure_fade(s);
    return re_[s];
  }
  double im(uint32_t s) {
    ensure_fade(s);
    return im_[s];
  }
  double S_all() const { return s_all; }
  double M_all() const { return m_all; }
  bool has_mbs() const { return mbs_present; }
  double mbs_signal() const { return mbs_sig; }
};

template <class World>
bool mbs_branch(World& w, double theta_m) {
  if (!w.has_mbs()) return false;
  const double x = w.mbs_signal();
  return x > theta_m * ((w.M_all() - x) + w.S_all());
}

// Shared indicator. Scheme 1 walks outward for the nearest holders of the
// file; everything else keeps transmitting. Scheme 2 takes the holders among
// the nearest coop_size cells; the whole cluster mutes while it serves. An
// empty serving set falls back to the macro tier against the full small-cell
// field.
template <class World>
bool indicator_core(World& w, double theta_s, double theta_m, int coop, int file,
                    Scheme scheme, bool* underpopulated) {
  uint32_t serving[kMaxCoopSize];
  int found = 0;
  double muted = 0.0;
  const size_t n = w.sbs_count();
  bool short_set;
  if (scheme == Scheme::scheme1) {
    for (size_t rank = 0; rank < n && found < coop; ++rank) {
      const uint32_t s = w.sbs_at(rank);
      if (w.caches(s, file)) {
        serving[found++] = s;
        muted += w.p(s) * w.g(s);
      }
    }
    short_set = found < coop;
  } else {
    const size_t cluster = std::min<size_t>(coop, n);
    for (size_t rank = 0; rank < cluster; ++rank) {
      const uint32_t s = w.sbs_at(rank);
      muted += w.p(s) * w.g(s);
      if (w.caches(s, file)) serving[found++] = s;
    }
    short_set = cluster < static_cast<size_t>(coop);
  }
  if (underpopulated) *underpopulated = short_set;
  if (found == 0) return mbs_branch(w, theta_m);
  double re_sum = 0.0, im_sum = 0.0;
  for (int i = 0; i < found; ++i) {
    const uint32_t s = serving[i];
    re_sum += w.amp(s) * w.re(s);
    im_sum += w.amp(s) * w.im(s);
  }
  const double x = re_sum * re_sum + im_sum * im_sum;
  const double interference = (w.S_all() - muted) + w.M_all();
  return x > theta_s * interference;
}

}  // namespace

PhiloxRng::PhiloxRng(uint64_t seed, uint64_t realization, uint32_t stream)
    : seed_(seed), realization_(realization), stream_(stream) {}

PhiloxRng::result_type PhiloxRng::operator()() {
  if (pos_ == 4) {
    const Block b = philox4x32(seed_, realization_, stream_, block_++);
    std::memcpy(buf_, b.v, sizeof(buf_));
    pos_ = 0;
  }
  return buf_[pos_++];
}

uint64_t PhiloxRng::next_u64() {
  const uint64_t hi = (*this)();
  const uint64_t lo = (*this)();
  return (hi << 32) | lo;
}

double PhiloxRng::next_unit() { return unit53(next_u64()); }

std::vector<std::pair<double, double>> sample_ppp(double density, double window_side,
                                                  PhiloxRng& rng) {
  if (!(std::isfinite(density) && density > 0.0))
    throw DomainError("density must be finite and positive");
  if (!(std::isfinite(window_side) && window_side > 0.0))
    throw DomainError("window side must be finite and positive");
  const double mean = density * window_side * window_side;
  if (mean > 5e7) throw DomainError("window holds too many points");
  std::poisson_distribution<long> pois(mean);
  const long n = pois(rng);
  std::vector<std::pair<double, double>> pts(n);
  for (auto& q : pts) {
    q.first = (rng.next_unit() - 0.5) * window_side;
    q.second = (rng.next_unit() - 0.5) * window_side;
  }
  return pts;
}

NetworkRealization realize(const NetworkConfig& cfg, const CachingDistribution& dist,
                           const SimParams& sim, uint64_t realization_index) {
  cfg.validate();
  dist.validate();
  sim.validate();
  check_window(cfg, sim);
  const CacheSampler sampler(dist);

  NetworkRealization out;
  out.files = sampler.files;
  out.words_per_set = (sampler.files + 63) / 64;
  const uint64_t seed = sim.master_seed;
  const uint64_t idx = realization_index;
  const double side = sim.window_side;
  const double area = side * side;

  const long n_m = poisson_count(seed, idx, kStreamCountMbs, cfg.mbs.density * area);
  out.mbs_x.resize(n_m);
  out.mbs_y.resize(n_m);
  out.mbs_fade.resize(n_m);
  out.mbs_power.resize(n_m);
  std::vector<double> mr2(n_m);
  for (long i = 0; i < n_m; ++i) {
    const Pt q = pos_from_block(seed, idx, kStreamPosMbs, static_cast<uint32_t>(i), side);
    out.mbs_x[i] = q.x;
    out.mbs_y[i] = q.y;
    mr2[i] = q.x * q.x + q.y * q.y;
    out.mbs_power[i] = path_power(cfg.mbs.power, mr2[i], cfg.mbs.pathloss_exponent);
    const Block fb = philox4x32(seed, idx, kStreamFadeMbs, static_cast<uint32_t>(i));
    out.mbs_fade[i] = exp_fade(lane_a(fb));
    out.mbs_interference += out.mbs_power[i] * out.mbs_fade[i];
  }
  out.mbs_order.resize(n_m);
  std::iota(out.mbs_order.begin(), out.mbs_order.end(), 0u);
  std::sort(out.mbs_order.begin(), out.mbs_order.end(), [&](uint32_t a, uint32_t b) {
    return mr2[a] != mr2[b] ? mr2[a] < mr2[b] : a < b;
  });

  const long n_s = poisson_count(seed, idx, kStreamCountSbs, cfg.sbs.density * area);
  out.sbs_x.resize(n_s);
  out.sbs_y.resize(n_s);
  out.sbs_re.resize(n_s);
  out.sbs_im.resize(n_s);
  out.sbs_fade.resize(n_s);
  out.sbs_power.resize(n_s);
  out.sbs_amp.resize(n_s);
  out.cache_words.assign(static_cast<size_t>(n_s) * out.words_per_set, 0);
  std::vector<double> sr2(n_s);
  for (long i = 0; i < n_s; ++i) {
    const Pt q = pos_from_block(seed, idx, kStreamPosSbs, static_cast<uint32_t>(i), side);
    out.sbs_x[i] = q.x;
    out.sbs_y[i] = q.y;
    sr2[i] = q.x * q.x + q.y * q.y;
    out.sbs_power[i] = path_power(cfg.sbs.power, sr2[i], cfg.sbs.pathloss_exponent);
    out.sbs_amp[i] = std::sqrt(out.sbs_power[i]);
    const FadeDraw d = sbs_fade_draw(seed, idx, static_cast<uint32_t>(i), true);
    out.sbs_fade[i] = d.g;
    out.sbs_re[i] = d.re;
    out.sbs_im[i] = d.im;
    out.sbs_interference += out.sbs_power[i] * out.sbs_fade[i];
    sampler.sample(seed, idx, static_cast<uint32_t>(i), [&](int f) {
      out.cache_words[static_cast<size_t>(i) * out.words_per_set + f / 64] |= uint64_t{1}
                                                                              << (f % 64);
    });
  }
  out.sbs_order.resize(n_s);
  std::iota(out.sbs_order.begin(), out.sbs_order.end(), 0u);
  std::sort(out.sbs_order.begin(), out.sbs_order.end(), [&](uint32_t a, uint32_t b) {
    return sr2[a] != sr2[b] ? sr2[a] < sr2[b] : a < b;
  });
  return out;
}

bool sir_indicator(const NetworkRealization& real, const NetworkConfig& cfg, int coop_size,
                   int file, Scheme scheme, bool* underpopulated) {
  cfg.validate();
  if (coop_size < 1 || coop_size > kMaxCoopSize)
    throw DomainError("cooperation size must lie in [1, 8]");
  if (file < 0 || file >= real.files) throw DomainError("file index out of range");
  FullView view{real};
  return indicator_core(view, cfg.theta_s(), cfg.theta_m(), coop_size, file, scheme,
                        underpopulated);
}

StpEstimate estimate_stp(const NetworkConfig& cfg, const Popularity& pop,
                         const CachingDistribution& dist, int coop_size, Scheme scheme,
                         const SimParams& sim) {
  cfg.validate();
  pop.validate();
  dist.validate();
  sim.validate();
  check_window(cfg, sim);
  if (pop.files() != dist.files())
    throw DomainError("popularity and caching distribution sizes differ");
  if (coop_size < 1 || coop_size > kMaxCoopSize)
    throw DomainError("cooperation size must lie in [1, 8]");
  const CacheSampler sampler(dist);

  const double theta_s = cfg.theta_s();
  const double theta_m = cfg.theta_m();
  const int nfiles = dist.files();
  const int total = sim.realizations;
  std::vector<double> per_real(total);
  std::vector<uint32_t> short_events(total);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int requested = sim.workers > 0 ? sim.workers : static_cast<int>(std::min(hw, 8u));
  const int workers = std::max(1, std::min(requested, total));

  const auto body = [&](int first) {
    for (int r = first; r < total; r += workers) {
      LeanWorld world(cfg, sampler, sim, static_cast<uint64_t>(r));
      double acc = 0.0;
      uint32_t events = 0;
      for (int n = 0; n < nfiles; ++n) {
        bool ok;
        if (dist.probs[n] < kZeroCache) {
          // never cached: the walk can find no holder, skip straight to the
          // macro fallback instead of scanning every cell
          ok = mbs_branch(world, theta_m);
        } else {
          bool short_set = false;
          ok = indicator_core(world, theta_s, theta_m, coop_size, n, scheme, &short_set);
          if (short_set) ++events;
        }
        if (ok) acc += pop.probabilities[n];
      }
      per_real[r] = acc;
      short_events[r] = events;
    }
  };
  if (workers <= 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wi = 0; wi < workers; ++wi) pool.emplace_back(body, wi);
    for (auto& t : pool) t.join();
  }

  // fixed-order reduction: results are independent of the worker count
  StpEstimate out;
  double mean = 0.0;
  for (int r = 0; r < total; ++r) mean += per_real[r];
  mean /= total;
  double ss = 0.0;
  for (int r = 0; r < total; ++r) {
    const double d = per_real[r] - mean;
    ss += d * d;
  }
  out.estimate = mean;
  out.std_error = total > 1 ? std::sqrt(ss / (total - 1) / total) : 0.0;
  long events = 0;
  for (int r = 0; r < total; ++r) events += short_events[r];
  out.underpopulated = events;
  return out;
}

}  // namespace hetcoop
