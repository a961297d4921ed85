#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "peersel/attach.hpp"
#include "peersel/panel.hpp"
#include "peersel/sigtree.hpp"

namespace peersel {

struct BacktestConfig {
    std::int64_t estimation_window = 200;  // W: trailing rows behind C_t
    std::int64_t rebalance_step = 20;      // Q: holding period in rows
    std::int64_t vol_window = 200;         // trailing window for vol equalization
    std::int64_t yoy_window = 252;         // span for year-on-year aggregation
    std::string target;                    // asset column to trade
    PeerSpec peers;
    AlphaMode alpha_mode = AlphaMode::lca;
    double cost_bps = 0.0;                 // charged per position change
    int jobs = 1;
};

struct RebalanceRecord {
    std::int64_t row = 0;
    Date date{};
    std::string adaptive;                  // attachment names
    std::string greedy;
    bool pos_adaptive = false;             // long iff attached signal == 1 at row
    bool pos_greedy = false;
    double prediction = 0.0;               // vol-equalized, adaptive attachment
    bool prediction_flagged = false;       // indicator vol was zero
    double chosen_cost = 0.0;
    std::int64_t chosen_chi = 0;
    std::int64_t greedy_chi = 0;
    bool greedy_fallback = false;
    bool uninformative = false;
    bool peers_empty = false;
    std::vector<double> cost_vector;       // per-signal adaptive costs
    std::string alpha;
    std::vector<std::string> subtree;               // peer subtree node names
    std::vector<std::pair<std::string, std::string>> peer_attachments;
};

struct VariantMetrics {
    double cumulative = 0.0;       // additive sum of daily PnL
    double hit_ratio = 0.0;        // invested periods with positive period return
    bool hit_defined = false;      // false = never traded
    std::int64_t invested_periods = 0;
    std::int64_t switches = 0;     // attachment changes between rebalances
};

struct BacktestLedger {
    std::vector<Date> dates;           // panel row dates
    std::int64_t start_row = 0;        // first rebalance row (= W)
    std::vector<RebalanceRecord> rebalances;
    std::vector<double> pnl_adaptive;  // per panel row; zero before start_row
    std::vector<double> pnl_greedy;
    std::vector<double> pnl_underlying;
    VariantMetrics adaptive;
    VariantMetrics greedy;
    VariantMetrics underlying;
    double yoy_correlation = 0.0;
    bool yoy_defined = false;
    std::int64_t yoy_points = 0;
    std::vector<std::string> warnings;
};

// Rolling re-estimation: at each rebalance row i = W, W+Q, ... the
// short-run counts come from rows [i-W, i) — the newest complete
// signal/outcome pair sits at row i-1 — peers are attached greedily, the
// target adaptively, and the position over rows [i, i+Q) is long iff the
// attached signal's value at row i is 1. `target_returns[u]` must hold
// the target's return over (u, u+1], aligned with the panel's forward
// outcome cells. `signal_values`, when given, supplies continuous
// indicator values per row and signal for the prediction series
// (binarized cells are used otherwise). Daily PnL is additive; the
// underlying variant is always long from the first rebalance on.
BacktestLedger run_backtest(const BinaryPanel& panel,
                            const std::vector<double>& target_returns,
                            std::shared_ptr<const SignalTree> tree,
                            const BacktestConfig& config,
                            const std::vector<std::vector<double>>* signal_values = nullptr);

struct YoyResult {
    double correlation = 0.0;  // Pearson across qualifying rebalances
    bool defined = false;      // false: fewer than two points or zero variance
    std::int64_t points = 0;   // number of qualifying rebalances
};

// Year-on-year forecast evaluation. At each rebalance row i that has a
// full window of history (i - yoy_window >= first rebalance row), the
// predictions issued at earlier rebalances j with
// i - yoy_window <= row(j) <= i - rebalance_step are summed and paired
// with the realized target return over rows [i - yoy_window, i); the
// correlation is Pearson's r across all such pairs.
YoyResult yoy_correlation(const std::vector<std::int64_t>& rebalance_rows,
                          const std::vector<double>& predictions,
                          const std::vector<double>& target_returns,
                          std::int64_t rebalance_step,
                          std::int64_t yoy_window);

// Exports. CSV: date + one daily PnL column per variant from the first
// rebalance row on. JSONL: one record per rebalance with the attachment
// diagnostics. Metrics JSON carries per-variant metrics, the YoY
// correlation and a manifest pinning every convention (PnL additivity,
// prediction aggregation, cost rule). Plot data bundles cumulative
// curves, switching sequences and the prediction overlay.
std::string daily_pnl_csv(const BacktestLedger& ledger);
std::string rebalances_jsonl(const BacktestLedger& ledger);
std::string metrics_json(const BacktestLedger& ledger, const BacktestConfig& config);
std::string plot_data_json(const BacktestLedger& ledger);

}  // namespace peersel
