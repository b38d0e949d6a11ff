#include <fmt/format.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "tutorbench/error.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

ProportionEstimate wilson_interval(int successes, int n, double confidence) {
  if (n < 1) throw StatsError("wilson interval needs n >= 1");
  if (successes < 0 || successes > n) {
    throw StatsError(fmt::format("successes {} outside [0, {}]", successes, n));
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw StatsError("confidence must lie in (0, 1)");
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + confidence / 2.0);
  const double nn = n;
  const double p = successes / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);

  ProportionEstimate e;
  e.successes = successes;
  e.n = n;
  e.confidence = confidence;
  e.midpoint = (lo + hi) / 2.0;
  e.margin = (hi - lo) / 2.0;
  return e;
}

}  // namespace tutorbench
