#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peersel/backtest.hpp"
#include "peersel/panel.hpp"

namespace peersel {

// Regime-switching generator blueprint. Signals follow a tree-structured
// dependence (ancestral sampling: a child copies its parent with
// probability edge_agreement, otherwise draws its own marginal). Each
// asset is driven by one signal per regime; its reaction trails the
// regime boundary by a per-asset lag, which is the asynchrony the
// adaptive attachment is supposed to exploit.
struct RegimeSpec {
    struct Regime {
        std::int64_t start_row = 0;
        std::vector<std::uint32_t> drivers;  // signal index per asset
    };

    std::size_t n_signals = 14;
    std::size_t m_assets = 8;
    std::vector<Regime> regimes;             // first must start at row 0
    std::vector<std::int64_t> lag_days;      // per asset, >= 0
    double p_high = 0.85;                    // P(asset outcome = 1 | driver = 1)
    double p_low = 0.15;                     // P(asset outcome = 1 | driver = 0)
    std::vector<double> signal_marginals;    // per signal; empty = all 0.5
    std::vector<std::pair<std::uint32_t, std::uint32_t>> tree_edges;  // parent, child
    double edge_agreement = 0.8;
    std::uint64_t seed = 1;

    void validate() const;  // parameter errors
};

struct GroundTruth {
    // Effective driver schedule per asset after applying its lag:
    // (first effective row, driver signal index), ascending rows.
    std::vector<std::vector<std::pair<std::int64_t, std::uint32_t>>> schedule;
    std::vector<RegimeSpec::Regime> regimes;
    std::vector<std::int64_t> lag_days;
};

struct SynthResult {
    BinaryPanel panel;                  // signals "_S.." then assets "xA.."
    std::vector<std::vector<double>> returns;  // per asset, +-0.01 per outcome bit
    GroundTruth truth;
};

// The panel follows the forward-outcome layout: the asset cell at row t
// is the outcome realized over (t, t+1], Bernoulli(p_high) when the
// effective driver's value at row t is 1 and Bernoulli(p_low) otherwise.
// The effective driver at row t is the one assigned by the regime active
// at row t - lag. Same seed, same platform or not: byte-identical output.
SynthResult generate(const RegimeSpec& spec, std::int64_t length);

// Per-regime detection statistics for one target asset: how many
// rebalances after the asset's effective switch row each variant first
// names the new true driver. Censored (never detected) entries are
// reported as such.
struct DetectionStat {
    std::size_t regime_index = 0;        // which regime boundary (>= 1)
    std::int64_t effective_row = 0;      // start_row + target lag
    std::int64_t adaptive_rebalances = 0;
    bool adaptive_censored = true;
    std::int64_t greedy_rebalances = 0;
    bool greedy_censored = true;
};

std::vector<DetectionStat> detection_lag(const BacktestLedger& ledger,
                                         const GroundTruth& truth,
                                         std::size_t target_asset,
                                         const std::vector<std::string>& signal_names);

// JSON round-trip for the spec (strict: unknown keys rejected) and the
// ground truth export.
RegimeSpec regime_spec_from_json(const std::string& text);
std::string ground_truth_json(const GroundTruth& truth);

}  // namespace peersel
