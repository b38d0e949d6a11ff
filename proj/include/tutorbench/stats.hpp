#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tutorbench/ablation.hpp"

namespace tutorbench {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Response embeddings for one prompt condition. Row j belongs to
/// row_index[j]; two matrices are compared row by row only when their
/// row_index sequences match.
struct EmbeddingMatrix {
  RowMatrix rows;
  std::vector<std::string> row_index;
  std::string label;

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }

  /// Throws StatsError on size mismatch, non-finite entries or zero rows.
  void validate() const;
  /// Rows for `ids`, in that order. Throws StatsError for an unknown id.
  EmbeddingMatrix subset(std::span<const std::string> ids) const;
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// 1 - cosine similarity, in [0, 2]. Larger means more different.
double divergence(std::span<const double> u, std::span<const double> v);

/// Mean divergence between scenario-aligned rows.
double paired_mean_divergence(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Chance distribution of the mean divergence: B times, shuffle the 2n
/// stacked rows, pair the first half with the second half and record the
/// mean divergence. Iteration b shuffles the original stack with its own
/// stream seeded from (seed, b), so output does not depend on thread count.
/// OpenMP-parallel over iterations, using a precomputed cosine Gram matrix.
std::vector<double> bootstrap_null(const EmbeddingMatrix& a, const EmbeddingMatrix& b, int B,
                                   std::uint64_t seed);

/// The permutation of [0, 2n) used by bootstrap iteration `b`.
std::vector<std::size_t> bootstrap_permutation(std::uint64_t seed, int b, std::size_t two_n);

/// Cosine similarities between all rows of `x` (symmetric). OpenMP-parallel.
RowMatrix cosine_gram(const RowMatrix& x);

namespace reference {

/// Straight serial transcription of the shuffle-split loop: materializes the
/// shuffled stack and recomputes every divergence from the raw vectors. Kept
/// to check and benchmark the parallel kernel.
std::vector<double> bootstrap_null(const EmbeddingMatrix& a, const EmbeddingMatrix& b, int B,
                                   std::uint64_t seed);

RowMatrix cosine_gram(const RowMatrix& x);

}  // namespace reference

/// (statistic - mean) / sd with the n-1 sample sd. Throws StatsError if the
/// bootstrap has fewer than two values or zero variance.
double cohens_d(double statistic, std::span<const double> bootstrap);

/// (1 + #{b : bootstrap_b >= statistic}) / (B + 1).
double upper_tail_p_value(double statistic, std::span<const double> bootstrap);

struct RandomizationTestResult {
  double statistic = 0.0;
  std::vector<double> bootstrap;
  double p_value = 1.0;
  std::optional<double> effect_size_d;  // nullopt when the bootstrap sd is zero
  int B = 0;
  std::uint64_t seed = 0;

  double bootstrap_mean() const;
  double bootstrap_sd() const;
};

RandomizationTestResult randomization_test(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                           int B, std::uint64_t seed);

struct ProportionEstimate {
  int successes = 0;
  int n = 0;
  double confidence = 0.95;
  double midpoint = 0.0;
  double margin = 0.0;

  double lower() const { return midpoint - margin; }
  double upper() const { return midpoint + margin; }
};

/// Wilson score interval.
ProportionEstimate wilson_interval(int successes, int n, double confidence = 0.95);

// ---------------------------------------------------------------------------
// Adaptivity grid

/// The six condition matrices of one model keyed by variant key.
struct ModelEmbeddings {
  std::string model_name;
  std::map<std::string, EmbeddingMatrix> by_variant;
};

struct AdaptivityCell {
  std::string model_name;
  ContextComponent component{};
  std::size_t n = 0;
  RandomizationTestResult result;
};

/// master ^ fnv1a64("<model>/<variant_key>").
std::uint64_t derive_cell_seed(std::uint64_t master, std::string_view model_name,
                               ContextComponent c);

/// Tests full vs each ablation for every model. Scenarios missing from any of
/// a model's six matrices are dropped from all six (listwise deletion); the
/// surviving count is reported per cell. Cells are model-major, components in
/// canonical order.
std::vector<AdaptivityCell> run_adaptivity_tests(const std::vector<ModelEmbeddings>& models, int B,
                                                 std::uint64_t master_seed);

/// {model, component, n, statistic, p_value, effect_size_d, B, seed} plus the
/// bootstrap mean and sd. With `with_bootstrap` the raw bootstrap is included.
nlohmann::json cell_to_json(const AdaptivityCell& cell, bool with_bootstrap = false);
AdaptivityCell cell_from_json(const nlohmann::json& j);

}  // namespace tutorbench
