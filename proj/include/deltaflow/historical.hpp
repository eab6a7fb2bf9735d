#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"
#include "deltaflow/dataset.hpp"

namespace deltaflow {

/// Training deltas grouped by delivery hour of day. Every training hour lands
/// in exactly one bucket; the 24 buckets partition the training range.
struct HistoryIndex {
    std::array<std::vector<std::array<double, 4>>, 24> buckets;

    std::size_t total() const;
};

HistoryIndex build_history_index(const std::vector<DeltaVector>& deltas);

/// n draws with replacement of whole historical 4-vectors from the bucket.
std::vector<std::array<double, 4>> sample_multivariate(const HistoryIndex& index, int hour_of_day,
                                                       std::size_t n, Rng& rng);

/// n draws where each of the four quarters is drawn independently from the
/// bucket's per-quarter marginal, then recombined.
std::vector<std::array<double, 4>> sample_univariate(const HistoryIndex& index, int hour_of_day,
                                                     std::size_t n, Rng& rng);

std::string history_to_json(const HistoryIndex& index);
HistoryIndex history_from_json(const std::string& text);

}  // namespace deltaflow
