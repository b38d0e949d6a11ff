#include <cmath>
#include <numeric>

#include "kernels.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

double RandomizationTestResult::bootstrap_mean() const {
  if (bootstrap.empty()) return 0.0;
  return std::accumulate(bootstrap.begin(), bootstrap.end(), 0.0) /
         static_cast<double>(bootstrap.size());
}

double RandomizationTestResult::bootstrap_sd() const {
  if (bootstrap.size() < 2) return 0.0;
  const double mean = bootstrap_mean();
  double ss = 0.0;
  for (double x : bootstrap) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(bootstrap.size() - 1));
}

RandomizationTestResult randomization_test(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                           int B, std::uint64_t seed) {
  if (B < 1) throw StatsError("randomization test needs B >= 1");
  detail::check_paired(a, b);
  // The observed statistic and the bootstrap read the same Gram entries, so
  // exact ties (e.g. identical matrices) stay exact.
  const auto gram = cosine_gram(detail::stack(a, b));
  const auto n = static_cast<std::size_t>(a.n());

  RandomizationTestResult r;
  r.B = B;
  r.seed = seed;
  r.statistic = detail::paired_from_gram(gram, n);
  r.bootstrap = detail::bootstrap_from_gram(gram, n, B, seed);
  r.p_value = upper_tail_p_value(r.statistic, r.bootstrap);
  if (B >= 2 && r.bootstrap_sd() > 0.0) r.effect_size_d = cohens_d(r.statistic, r.bootstrap);
  return r;
}

}  // namespace tutorbench
