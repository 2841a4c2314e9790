#pragma once

#include <hetcoop/types.hpp>

namespace hetcoop {

// Zipf popularity over N files with exponent gamma >= 0: a_n ~ n^-gamma,
// normalized. gamma = 0 gives the uniform distribution.
Popularity zipf(int files, double gamma);

// Non-optimized cache placement baselines:
//   most_popular  caches files 1..M everywhere (T = 1,1,...,0),
//   uniform       spreads capacity evenly (T_n = M/N),
//   iid_popular   each cache slot drawn i.i.d. from the popularity law; the
//                 per-file hit marginal is 1 - (1 - a_n)^M, which does not sum
//                 to M, so the result carries relaxed_sum and keeps the
//                 sampling weights for simulation.
enum class BaselineKind { most_popular, uniform, iid_popular };

CachingDistribution baseline_distribution(BaselineKind kind, const Popularity& pop, int cache_size);

}  // namespace hetcoop
