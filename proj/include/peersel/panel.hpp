#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peersel/series.hpp"

namespace peersel {

// Time-indexed {0,1} observation matrix. Columns are ordered signals first
// (prefix "_"), then assets (prefix "x"). Asset columns are built from
// forward returns, so row t pairs the signals seen at t with the asset
// outcome realized one step later.
struct BinaryPanel {
    std::vector<Date> stamps;
    std::vector<std::string> names;   // n signal names then m asset names
    std::size_t n_signals = 0;
    std::size_t n_assets = 0;
    std::vector<std::uint8_t> cells;  // row-major rows x (n+m)
    std::vector<double> thresholds;   // per-column cut level

    std::size_t rows() const { return stamps.size(); }
    std::size_t cols() const { return n_signals + n_assets; }
    std::uint8_t at(std::size_t row, std::size_t col) const { return cells[row * cols() + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) { return cells[row * cols() + col]; }

    std::size_t column_index(const std::string& name) const;  // throws data error if missing
    void validate() const;
};

// Binarizes a set of indicator columns on the intersection of timestamps
// where every column is available. Entry = 1 iff value > threshold (strict).
// Signal columns come before asset columns regardless of input order; each
// group keeps its input order. `thresholds` runs parallel to `indicators`;
// absent entries default to 0.
BinaryPanel binarize(const std::vector<IndicatorSeries>& indicators,
                     const std::vector<std::optional<double>>& thresholds = {});

// CSV of 0/1 entries (date first column) plus a sidecar JSON manifest
// carrying n, m, thresholds and column kinds.
std::string panel_to_csv(const BinaryPanel& panel);
std::string panel_manifest_json(const BinaryPanel& panel,
                                const std::vector<std::string>& kinds = {});
BinaryPanel panel_from_files(const std::string& csv_path, const std::string& manifest_path);

}  // namespace peersel
