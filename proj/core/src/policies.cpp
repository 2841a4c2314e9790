#include <hetcoop/policies.hpp>

#include <cmath>

namespace hetcoop {

Popularity zipf(int files, double gamma) {
  if (files < 1) throw DomainError("zipf needs at least one file");
  if (!(std::isfinite(gamma) && gamma >= 0.0)) throw DomainError("zipf exponent must be >= 0");
  Popularity pop;
  pop.probabilities.resize(files);
  double norm = 0.0;
  for (int n = 1; n <= files; ++n) norm += std::pow(n, -gamma);
  for (int n = 1; n <= files; ++n) pop.probabilities[n - 1] = std::pow(n, -gamma) / norm;
  pop.validate();
  return pop;
}

CachingDistribution baseline_distribution(BaselineKind kind, const Popularity& pop,
                                          int cache_size) {
  pop.validate();
  const int n = pop.files();
  if (cache_size < 1 || cache_size > n)
    throw DomainError("cache size must lie in [1, number of files]");

  CachingDistribution dist;
  dist.cache_size = cache_size;
  dist.probs.assign(n, 0.0);
  switch (kind) {
    case BaselineKind::most_popular:
      for (int i = 0; i < cache_size; ++i) dist.probs[i] = 1.0;
      break;
    case BaselineKind::uniform:
      for (int i = 0; i < n; ++i) dist.probs[i] = static_cast<double>(cache_size) / n;
      break;
    case BaselineKind::iid_popular:
      for (int i = 0; i < n; ++i)
        dist.probs[i] = 1.0 - std::pow(1.0 - pop.probabilities[i], cache_size);
      dist.relaxed_sum = true;
      dist.iid_weights = pop.probabilities;
      break;
  }
  dist.validate();
  return dist;
}

}  // namespace hetcoop
