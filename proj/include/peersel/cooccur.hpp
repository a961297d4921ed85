#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peersel/kernels.hpp"
#include "peersel/panel.hpp"

namespace peersel {

// Symmetric joint "1" counts over a window of panel rows. Column layout
// mirrors the panel: n signal columns, then m asset columns (m == 0 for a
// signals-only matrix).
struct CoOccurrence {
    std::vector<std::string> names;
    std::size_t n_signals = 0;
    std::size_t n_assets = 0;
    std::int64_t window_len = 0;
    std::vector<std::int64_t> counts;  // k x k row-major
    bool blocks_zeroed = false;

    std::size_t k() const { return n_signals + n_assets; }
    std::int64_t at(std::size_t i, std::size_t j) const { return counts[i * k() + j]; }
    std::int64_t& at(std::size_t i, std::size_t j) { return counts[i * k() + j]; }
};

// Integer-exact counts = submatrix^T * submatrix over rows [begin, end).
// signals_only drops the asset columns (the long-run estimation case).
CoOccurrence cooccurrence(const BinaryPanel& panel, std::size_t row_begin, std::size_t row_end,
                          bool signals_only = false);

// Fast path for rolling re-estimation: panel already packed once.
CoOccurrence cooccurrence(const kernels::BitMatrix& bits, const std::vector<std::string>& names,
                          std::size_t n_signals, std::size_t n_assets, std::size_t row_begin,
                          std::size_t row_end);

// Zeroes the asset-asset block (no direct links among targets) and the
// signal-row / asset-column block (signals never depend on future returns).
// Idempotent.
CoOccurrence apply_block_rules(CoOccurrence c);

// Dissimilarity re-parameterization w = 1 - (chi / window_len)^2: strictly
// decreasing in chi, in [0,1], so path sums over windows of different
// lengths are comparable and shortest-path preconditions hold.
double dissimilarity_weight(std::int64_t chi, std::int64_t window_len);

struct DissimilarityWeights {
    std::size_t k = 0;
    std::int64_t window_len = 0;
    std::vector<double> w;  // k x k row-major

    double at(std::size_t i, std::size_t j) const { return w[i * k + j]; }
};

DissimilarityWeights to_dissimilarity(const CoOccurrence& c);

std::string cooccurrence_to_csv(const CoOccurrence& c);
std::string cooccurrence_to_json(const CoOccurrence& c);

}  // namespace peersel
