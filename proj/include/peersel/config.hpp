#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peersel/backtest.hpp"
#include "peersel/panel.hpp"
#include "peersel/synth.hpp"

namespace peersel {

// One derived column: which file/column it comes from and how to turn it
// into an indicator. Window/lag of 0 mean the kind's default.
struct SeriesSpec {
    std::string name;           // output column ("_" signal / "x" asset prefix)
    IndicatorKind kind = IndicatorKind::zscore;
    std::string file;
    std::string column;         // source column; carry: the domestic leg
    std::string minus_column;   // carry / carry_change: subtracted leg
    std::string minus_file;     // defaults to `file`
    int window = 0;
    int lag = 0;
    bool sign_invert = false;
    double threshold = 0.0;     // binarization cut
};

// Full run configuration. Exactly one panel source is used per command:
// a prebuilt panel (CSV + manifest), raw series to ingest, or a synthetic
// generator spec whose artifacts live in the output directory.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    std::string panel_csv;
    std::string panel_manifest;
    std::string returns_csv;    // optional alongside a prebuilt panel

    std::vector<SeriesSpec> series;

    std::optional<RegimeSpec> simulate;
    std::int64_t simulate_length = 0;

    std::int64_t long_window = 0;  // rows behind the stationary tree; 0 = all
    std::map<std::string, std::vector<std::string>> peer_groups;

    BacktestConfig backtest;
    bool has_backtest = false;
};

RunConfig run_config_from_json(const std::string& text);  // strict keys
RunConfig load_run_config(const std::string& path);

// Panel plus whatever continuous context the source can provide:
// per-row signal values (series mode) and per-asset forward returns
// (series mode computes them, simulate mode reads returns.csv, panel
// mode reads the optional returns_csv).
struct DataBundle {
    BinaryPanel panel;
    std::vector<std::vector<double>> signal_values;  // rows x n, may be empty
    std::map<std::string, std::vector<double>> asset_returns;
};

DataBundle load_data(const RunConfig& cfg, const std::string& out_dir);

}  // namespace peersel
