#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "kernels.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

void EmbeddingMatrix::validate() const {
  if (static_cast<std::size_t>(rows.rows()) != row_index.size()) {
    throw StatsError(fmt::format("{}: {} rows but {} row ids", label, rows.rows(),
                                 row_index.size()));
  }
  if (!rows.allFinite()) throw StatsError(fmt::format("{}: non-finite entries", label));
  for (Eigen::Index j = 0; j < rows.rows(); ++j) {
    if (rows.row(j).squaredNorm() == 0.0) {
      throw StatsError(fmt::format("{}: row '{}' has zero norm", label, row_index[j]));
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::subset(std::span<const std::string> ids) const {
  std::unordered_map<std::string_view, Eigen::Index> pos;
  for (std::size_t j = 0; j < row_index.size(); ++j) {
    if (!pos.emplace(row_index[j], static_cast<Eigen::Index>(j)).second) {
      throw StatsError(fmt::format("{}: duplicate row id '{}'", label, row_index[j]));
    }
  }
  EmbeddingMatrix out;
  out.label = label;
  out.rows.resize(static_cast<Eigen::Index>(ids.size()), rows.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto it = pos.find(ids[k]);
    if (it == pos.end()) throw StatsError(fmt::format("{}: no row '{}'", label, ids[k]));
    out.rows.row(static_cast<Eigen::Index>(k)) = rows.row(it->second);
    out.row_index.push_back(ids[k]);
  }
  return out;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw StatsError(fmt::format("dimension mismatch: {} vs {}", u.size(), v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw StatsError("cosine similarity of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double divergence(std::span<const double> u, std::span<const double> v) {
  return 1.0 - cosine_similarity(u, v);
}

namespace detail {

void check_paired(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  a.validate();
  b.validate();
  if (a.n() != b.n() || a.dim() != b.dim()) {
    throw StatsError(fmt::format("shape mismatch: {} is {}x{}, {} is {}x{}", a.label, a.n(),
                                 a.dim(), b.label, b.n(), b.dim()));
  }
  if (a.n() == 0) throw StatsError("no rows to compare");
  for (std::size_t j = 0; j < a.row_index.size(); ++j) {
    if (a.row_index[j] != b.row_index[j]) {
      throw StatsError(fmt::format("row_index mismatch at row {}: '{}' vs '{}'", j,
                                   a.row_index[j], b.row_index[j]));
    }
  }
}

RowMatrix stack(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  RowMatrix s(a.n() + b.n(), a.dim());
  s.topRows(a.n()) = a.rows;
  s.bottomRows(b.n()) = b.rows;
  return s;
}

}  // namespace detail

double paired_mean_divergence(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  detail::check_paired(a, b);
  const auto d = static_cast<std::size_t>(a.dim());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.n(); ++j) {
    sum += divergence({a.rows.row(j).data(), d}, {b.rows.row(j).data(), d});
  }
  return sum / static_cast<double>(a.n());
}

double cohens_d(double statistic, std::span<const double> bootstrap) {
  if (bootstrap.size() < 2) throw StatsError("cohens_d needs at least two bootstrap values");
  const double n = static_cast<double>(bootstrap.size());
  const double mean = std::accumulate(bootstrap.begin(), bootstrap.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : bootstrap) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) throw StatsError("cohens_d undefined: bootstrap has zero variance");
  return (statistic - mean) / sd;
}

double upper_tail_p_value(double statistic, std::span<const double> bootstrap) {
  const auto k = std::count_if(bootstrap.begin(), bootstrap.end(),
                               [&](double x) { return x >= statistic; });
  return (1.0 + static_cast<double>(k)) / (static_cast<double>(bootstrap.size()) + 1.0);
}

}  // namespace tutorbench
