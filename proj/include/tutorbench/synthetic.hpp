#pragma once

#include <cstdint>

#include "tutorbench/corpus.hpp"

namespace tutorbench {

/// Linear-equation tutoring snapshots with plausible step histories, errors,
/// hints, skills and chat. For offline runs and tests only; not real data.
Corpus make_synthetic_corpus(std::size_t n, std::uint64_t seed);

}  // namespace tutorbench
