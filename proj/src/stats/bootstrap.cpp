#include <omp.h>

#include <algorithm>
#include <numeric>

#include "kernels.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/hashing.hpp"
#include "tutorbench/random.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

std::vector<std::size_t> bootstrap_permutation(std::uint64_t seed, int b, std::size_t two_n) {
  Rng rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(b) + 1)));
  std::vector<std::size_t> perm(two_n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle_in_place(std::span<std::size_t>(perm), rng);
  return perm;
}

RowMatrix cosine_gram(const RowMatrix& x) {
  const Eigen::Index m = x.rows();
  RowMatrix unit(m, x.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = x.row(i).norm();
    if (norm == 0.0) throw StatsError("cosine of a zero-norm row");
    unit.row(i) = x.row(i) / norm;
  }
  RowMatrix g(m, m);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < m; ++i) {
    g(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double c = std::clamp(unit.row(i).dot(unit.row(j)), -1.0, 1.0);
      g(i, j) = c;
      g(j, i) = c;
    }
  }
  return g;
}

namespace detail {

double paired_from_gram(const RowMatrix& gram, std::size_t n) {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum += 1.0 - gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n + j));
  }
  return sum / static_cast<double>(n);
}

std::vector<double> bootstrap_from_gram(const RowMatrix& gram, std::size_t n, int B,
                                        std::uint64_t seed) {
  if (B < 1) throw StatsError("bootstrap needs B >= 1");
  std::vector<double> out(static_cast<std::size_t>(B));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    const auto perm = bootstrap_permutation(seed, b, 2 * n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += 1.0 - gram(static_cast<Eigen::Index>(perm[j]), static_cast<Eigen::Index>(perm[n + j]));
    }
    out[static_cast<std::size_t>(b)] = sum / static_cast<double>(n);
  }
  return out;
}

}  // namespace detail

std::vector<double> bootstrap_null(const EmbeddingMatrix& a, const EmbeddingMatrix& b, int B,
                                   std::uint64_t seed) {
  if (B < 1) throw StatsError("bootstrap needs B >= 1");
  detail::check_paired(a, b);
  const auto gram = cosine_gram(detail::stack(a, b));
  return detail::bootstrap_from_gram(gram, static_cast<std::size_t>(a.n()), B, seed);
}

namespace reference {

RowMatrix cosine_gram(const RowMatrix& x) {
  const Eigen::Index m = x.rows();
  const auto d = static_cast<std::size_t>(x.cols());
  RowMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      g(i, j) = cosine_similarity({x.row(i).data(), d}, {x.row(j).data(), d});
    }
  }
  return g;
}

std::vector<double> bootstrap_null(const EmbeddingMatrix& a, const EmbeddingMatrix& b, int B,
                                   std::uint64_t seed) {
  if (B < 1) throw StatsError("bootstrap needs B >= 1");
  detail::check_paired(a, b);
  const RowMatrix stacked = detail::stack(a, b);
  const auto n = static_cast<Eigen::Index>(a.n());
  const auto d = static_cast<std::size_t>(a.dim());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(B));
  RowMatrix shuffled(stacked.rows(), stacked.cols());
  for (int it = 0; it < B; ++it) {
    const auto perm = bootstrap_permutation(seed, it, static_cast<std::size_t>(2 * n));
    for (Eigen::Index r = 0; r < 2 * n; ++r) {
      shuffled.row(r) = stacked.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]));
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      sum += divergence({shuffled.row(j).data(), d}, {shuffled.row(n + j).data(), d});
    }
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

}  // namespace reference

}  // namespace tutorbench
