#include "peersel/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "peersel/errors.hpp"
#include "peersel/io.hpp"

namespace peersel {

std::size_t BinaryPanel::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw_data("panel has no column '" + name + "'");
}

void BinaryPanel::validate() const {
    if (n_signals < 2 || n_assets < 1)
        throw_data("panel needs at least 2 signal and 1 asset column, got " +
                   std::to_string(n_signals) + "/" + std::to_string(n_assets));
    if (names.size() != cols() || thresholds.size() != cols())
        throw_data("panel name/threshold bookkeeping inconsistent");
    if (cells.size() != rows() * cols())
        throw_data("panel cell count inconsistent");
    for (std::size_t i = 0; i < n_signals; ++i)
        if (names[i].empty() || names[i][0] != '_')
            throw_data("signal column '" + names[i] + "' must carry prefix '_'");
    for (std::size_t i = n_signals; i < cols(); ++i)
        if (names[i].empty() || names[i][0] != 'x')
            throw_data("asset column '" + names[i] + "' must carry prefix 'x'");
    for (std::uint8_t c : cells)
        if (c > 1) throw_data("panel cell outside {0,1}");
    for (std::size_t i = 1; i < stamps.size(); ++i)
        if (!(stamps[i - 1] < stamps[i])) throw_data("panel timestamps not strictly increasing");
}

BinaryPanel binarize(const std::vector<IndicatorSeries>& indicators,
                     const std::vector<std::optional<double>>& thresholds) {
    if (!thresholds.empty() && thresholds.size() != indicators.size())
        throw_parameter("binarize: thresholds must run parallel to indicators");

    std::vector<std::size_t> signal_cols, asset_cols;
    for (std::size_t i = 0; i < indicators.size(); ++i) {
        if (indicators[i].is_signal())
            signal_cols.push_back(i);
        else if (indicators[i].is_asset())
            asset_cols.push_back(i);
        else
            throw_data("column '" + indicators[i].name + "' has neither signal prefix '_' nor asset prefix 'x'");
    }
    if (signal_cols.size() < 2 || asset_cols.empty())
        throw_data("binarize needs at least 2 signal columns and 1 asset column");

    // timestamp intersection, restricted to rows where each column is valid
    std::map<Date, std::size_t> hits;
    for (const auto& ind : indicators)
        for (std::size_t i = ind.first_valid; i < ind.end_valid; ++i)
            ++hits[ind.stamps[i]];
    std::vector<Date> grid;
    for (const auto& [d, c] : hits)
        if (c == indicators.size()) grid.push_back(d);
    if (grid.empty())
        throw_data("binarize: timestamp intersection is empty");

    BinaryPanel panel;
    panel.stamps = grid;
    panel.n_signals = signal_cols.size();
    panel.n_assets = asset_cols.size();

    std::vector<std::size_t> order = signal_cols;
    order.insert(order.end(), asset_cols.begin(), asset_cols.end());
    panel.names.reserve(order.size());
    panel.thresholds.reserve(order.size());
    for (std::size_t src : order) {
        panel.names.push_back(indicators[src].name);
        double thr = 0.0;
        if (!thresholds.empty() && thresholds[src].has_value()) thr = *thresholds[src];
        panel.thresholds.push_back(thr);
    }

    panel.cells.assign(grid.size() * order.size(), 0);
    for (std::size_t c = 0; c < order.size(); ++c) {
        const IndicatorSeries& ind = indicators[order[c]];
        const double thr = panel.thresholds[c];
        // walk the series once; grid dates are a subsequence of its stamps
        std::size_t s = ind.first_valid;
        for (std::size_t r = 0; r < grid.size(); ++r) {
            while (s < ind.end_valid && ind.stamps[s] < grid[r]) ++s;
            if (s >= ind.end_valid || !(ind.stamps[s] == grid[r]))
                throw_data("binarize: internal alignment failure on '" + ind.name + "'");
            panel.at(r, c) = ind.values[s] > thr ? 1 : 0;
        }
    }
    panel.validate();
    return panel;
}

std::string panel_to_csv(const BinaryPanel& panel) {
    std::ostringstream out;
    out << "date";
    for (const auto& n : panel.names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        out << to_iso(panel.stamps[r]);
        for (std::size_t c = 0; c < panel.cols(); ++c) out << ',' << int(panel.at(r, c));
        out << '\n';
    }
    return out.str();
}

std::string panel_manifest_json(const BinaryPanel& panel, const std::vector<std::string>& kinds) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["n"] = panel.n_signals;
    j["m"] = panel.n_assets;
    j["names"] = panel.names;
    j["thresholds"] = panel.thresholds;
    if (!kinds.empty()) j["kinds"] = kinds;
    j["rows"] = panel.rows();
    return j.dump(2) + "\n";
}

BinaryPanel panel_from_files(const std::string& csv_path, const std::string& manifest_path) {
    CsvTable table = read_csv(csv_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw_data("bad panel manifest '" + manifest_path + "': " + e.what());
    }

    BinaryPanel panel;
    panel.stamps = table.stamps;
    panel.names = table.columns;
    panel.n_signals = manifest.at("n").get<std::size_t>();
    panel.n_assets = manifest.at("m").get<std::size_t>();
    if (manifest.contains("names") &&
        manifest.at("names").get<std::vector<std::string>>() != table.columns)
        throw_data("panel manifest names disagree with CSV header");
    if (panel.cols() != table.columns.size())
        throw_data("panel manifest n+m disagrees with CSV column count");
    panel.thresholds = manifest.value("thresholds", std::vector<double>(panel.cols(), 0.0));
    if (panel.thresholds.size() != panel.cols())
        throw_data("panel manifest thresholds length mismatch");

    panel.cells.assign(panel.rows() * panel.cols(), 0);
    for (std::size_t c = 0; c < panel.cols(); ++c)
        for (std::size_t r = 0; r < panel.rows(); ++r) {
            double v = table.values[c][r];
            if (v != 0.0 && v != 1.0)
                throw_data("panel cell not 0/1 in column '" + table.columns[c] + "'");
            panel.at(r, c) = v == 1.0 ? 1 : 0;
        }
    panel.validate();
    return panel;
}

}  // namespace peersel
