#include "deltaflow/historical.hpp"

#include <cmath>

#include "json.hpp"

namespace deltaflow {

namespace {

const std::vector<std::array<double, 4>>& bucket_for(const HistoryIndex& index, int hour_of_day) {
    if (hour_of_day < 0 || hour_of_day >= 24) {
        fail("InvalidConfig", "hour of day must lie in [0, 24), got " + std::to_string(hour_of_day));
    }
    const auto& b = index.buckets[std::size_t(hour_of_day)];
    if (b.empty()) {
        fail("EmptyBucket", "no training data for hour of day " + std::to_string(hour_of_day));
    }
    return b;
}

}  // namespace

std::size_t HistoryIndex::total() const {
    std::size_t n = 0;
    for (const auto& b : buckets) n += b.size();
    return n;
}

HistoryIndex build_history_index(const std::vector<DeltaVector>& deltas) {
    HistoryIndex index;
    for (const auto& dv : deltas) {
        for (double v : dv.d) {
            if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite delta vector");
        }
        index.buckets[std::size_t(hour_of_day(dv.hour))].push_back(dv.d);
    }
    return index;
}

std::vector<std::array<double, 4>> sample_multivariate(const HistoryIndex& index, int hour_of_day,
                                                       std::size_t n, Rng& rng) {
    const auto& b = bucket_for(index, hour_of_day);
    std::vector<std::array<double, 4>> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) out.push_back(b[rng.below(b.size())]);
    return out;
}

std::vector<std::array<double, 4>> sample_univariate(const HistoryIndex& index, int hour_of_day,
                                                     std::size_t n, Rng& rng) {
    const auto& b = bucket_for(index, hour_of_day);
    std::vector<std::array<double, 4>> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::array<double, 4> x;
        for (int q = 0; q < 4; ++q) x[q] = b[rng.below(b.size())][q];
        out.push_back(x);
    }
    return out;
}

std::string history_to_json(const HistoryIndex& index) {
    nlohmann::json j;
    j["format"] = "deltaflow-hist";
    j["version"] = 1;
    auto buckets = nlohmann::json::array();
    for (const auto& b : index.buckets) buckets.push_back(b);
    j["buckets"] = std::move(buckets);
    return j.dump();
}

HistoryIndex history_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "deltaflow-hist" || j.value("version", 0) != 1) {
        fail("DimensionMismatch", "not a recognized history file");
    }
    const auto& buckets = j.at("buckets");
    if (buckets.size() != 24) fail("DimensionMismatch", "expected 24 hour buckets");
    HistoryIndex index;
    for (std::size_t h = 0; h < 24; ++h) {
        index.buckets[h] = buckets[h].get<std::vector<std::array<double, 4>>>();
    }
    return index;
}

}  // namespace deltaflow
