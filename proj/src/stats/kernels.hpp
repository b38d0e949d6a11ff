#pragma once

#include <cstdint>
#include <vector>

#include "tutorbench/stats.hpp"

namespace tutorbench::detail {

/// Checks the pairing preconditions shared by every two-matrix operation.
void check_paired(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Rows of a followed by rows of b.
RowMatrix stack(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Mean of 1 - gram(j, n + j) over j < n.
double paired_from_gram(const RowMatrix& gram, std::size_t n);

std::vector<double> bootstrap_from_gram(const RowMatrix& gram, std::size_t n, int B,
                                        std::uint64_t seed);

}  // namespace tutorbench::detail
