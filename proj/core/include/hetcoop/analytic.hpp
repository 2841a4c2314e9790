#pragma once

#include <hetcoop/quadrature.hpp>
#include <hetcoop/specfun.hpp>
#include <hetcoop/types.hpp>

#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace hetcoop {

// Largest supported cooperation cluster. Cube dimension grows with K, so the
// cap keeps integral dimensions inside the Sobol table.
inline constexpr int kMaxCoopSize = 8;

// Evaluation route: 'automatic' uses the closed inner form whenever the two
// tiers share a pathloss exponent (the exponent kernel is then linear in u);
// 'integral_only' forces the general semi-infinite integral, which is the
// independent cross-check of the closed route.
enum class FormulaPath { automatic, integral_only };

// Hit probability of the fallback (macro) tier: the typical user is served by
// its nearest macro BS while every small cell interferes.
double psi_m(const NetworkConfig& cfg, const QuadratureSpec& spec = {},
             FormulaPath path = FormulaPath::automatic);

// Scheme-1 per-file hit probability: the K nearest holders of the file (a
// density fraction T of the small-cell tier) transmit it non-coherently.
// T must lie in (0, 1].
double psi_s1(const NetworkConfig& cfg, int coop_size, double T, const QuadratureSpec& spec = {},
              FormulaPath path = FormulaPath::automatic);

// Derivative of psi_s1 in T (strictly positive: more holders, more signal).
double psi_s1_dT(const NetworkConfig& cfg, int coop_size, double T,
                 const QuadratureSpec& spec = {}, FormulaPath path = FormulaPath::automatic);

// Scheme-2 building blocks for a cluster of the K nearest small cells of
// which k hold the file. q_k1 is the hit probability when a non-holder is the
// k-th ranked cell (vanishes at k = K by construction), q_k2 when a holder is.
double q_k1(const NetworkConfig& cfg, int coop_size, int k, const QuadratureSpec& spec = {},
            FormulaPath path = FormulaPath::automatic);
double q_k2(const NetworkConfig& cfg, int coop_size, int k, const QuadratureSpec& spec = {},
            FormulaPath path = FormulaPath::automatic);

// Precomputed scheme-2 pieces for one config and cluster size.
struct StpTables {
  int coop_size = 0;
  double psi_mbs = 0.0;
  std::vector<double> q1;      // q1[k], k = 1..K; q1[0] unused; q1[K] == 0
  std::vector<double> q2;      // q2[k], k = 1..K; q2[0] unused
  std::vector<double> psi_s2;  // psi_s2[k], k = 0..K; psi_s2[0] == psi_mbs
};

StpTables build_stp_tables(const NetworkConfig& cfg, int coop_size,
                           const QuadratureSpec& spec = {},
                           FormulaPath path = FormulaPath::automatic);

// Scheme-2 per-file hit probability at caching fraction T in [0, 1]: the
// number of holders among the K nearest small cells is Binomial(K, T), and a
// cache miss falls back to the macro tier.
double psi_ms(const StpTables& tables, double T);
double psi_ms_dT(const StpTables& tables, double T);

// Reusable scheme-1 evaluator: precomputes the cube nodes once so repeated
// psi/dpsi calls (optimizer inner loops) are cheap. Results agree exactly
// with psi_s1/psi_s1_dT under the same spec and path.
class Scheme1Evaluator {
 public:
  Scheme1Evaluator(const NetworkConfig& cfg, int coop_size, const QuadratureSpec& spec = {},
                   FormulaPath path = FormulaPath::automatic);

  double psi(double T) const;
  double dpsi(double T) const;
  double psi_mbs() const { return psi_mbs_; }
  int coop_size() const { return coop_size_; }

 private:
  struct ClosedNode {
    double w, a, b;  // weight and kernel-at-u=1 coefficients: B = a/T + b
  };
  struct RawNode {
    double w, theta;  // weight and effective SIR threshold for the inner integral
  };

  double psi_uncached(double T) const;
  double dpsi_uncached(double T) const;

  NetworkConfig cfg_;
  int coop_size_;
  QuadratureSpec spec_;
  bool closed_ = true;
  double psi_mbs_ = 0.0;
  std::vector<ClosedNode> nodes_;
  std::vector<RawNode> raw_nodes_;
  mutable std::mutex mu_;
  mutable std::unordered_map<uint64_t, double> memo_psi_;
  mutable std::unordered_map<uint64_t, double> memo_dpsi_;
};

// Successful transmission probability of each scheme: popularity-weighted mix
// of per-file hit probabilities under the given caching distribution. Entries
// below 1e-12 are treated as exactly uncached (macro fallback).
double stp_scheme1(const NetworkConfig& cfg, const Popularity& pop,
                   const CachingDistribution& dist, int coop_size,
                   const QuadratureSpec& spec = {});
double stp_scheme2(const NetworkConfig& cfg, const Popularity& pop,
                   const CachingDistribution& dist, int coop_size,
                   const QuadratureSpec& spec = {});

}  // namespace hetcoop
