#include "peersel/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "peersel/errors.hpp"
#include "peersel/indicators.hpp"
#include "peersel/io.hpp"

namespace peersel {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw_config(where + " has unknown key '" + it.key() + "'");
}

SeriesSpec parse_series(const nlohmann::json& j) {
    reject_unknown(j,
                   {"name", "kind", "file", "column", "minus_column", "minus_file",
                    "window", "lag", "sign_invert", "threshold"},
                   "series entry");
    SeriesSpec s;
    s.name = j.at("name").get<std::string>();
    s.kind = indicator_kind_from_string(j.at("kind").get<std::string>());
    s.file = j.at("file").get<std::string>();
    s.column = j.value("column", s.name);
    s.minus_column = j.value("minus_column", std::string{});
    s.minus_file = j.value("minus_file", std::string{});
    s.window = j.value("window", 0);
    s.lag = j.value("lag", 0);
    s.sign_invert = j.value("sign_invert", false);
    s.threshold = j.value("threshold", 0.0);
    if (s.name.empty() || (s.name[0] != '_' && s.name[0] != 'x'))
        throw_config("series name '" + s.name +
                     "' must carry the '_' (signal) or 'x' (asset) prefix");
    const bool needs_minus = s.kind == IndicatorKind::carry ||
                             s.kind == IndicatorKind::carry_change;
    if (needs_minus && s.minus_column.empty())
        throw_config("series '" + s.name + "': kind '" +
                     std::string(to_string(s.kind)) + "' needs minus_column");
    if (!needs_minus && !s.minus_column.empty())
        throw_config("series '" + s.name + "': minus_column only applies to carry kinds");
    return s;
}

BacktestConfig parse_backtest(const nlohmann::json& j,
                              const std::map<std::string, std::vector<std::string>>& groups) {
    reject_unknown(j,
                   {"estimation_window", "rebalance_step", "vol_window", "yoy_window",
                    "target", "peer_group", "peers", "peer_mode", "theta",
                    "horizon_days", "alpha_mode", "cost_bps", "jobs"},
                   "backtest");
    BacktestConfig b;
    b.estimation_window = j.value("estimation_window", std::int64_t{200});
    b.rebalance_step = j.value("rebalance_step", std::int64_t{20});
    b.vol_window = j.value("vol_window", std::int64_t{200});
    b.yoy_window = j.value("yoy_window", std::int64_t{252});
    b.target = j.value("target", std::string{});
    b.cost_bps = j.value("cost_bps", 0.0);
    b.jobs = j.value("jobs", 1);
    const std::string mode = j.value("peer_mode", std::string{"explicit"});
    if (mode == "explicit")
        b.peers.mode = PeerSpec::Mode::explicit_list;
    else if (mode == "threshold")
        b.peers.mode = PeerSpec::Mode::threshold;
    else
        throw_config("peer_mode must be 'explicit' or 'threshold'");
    b.peers.theta = j.value("theta", 0.0);
    b.peers.horizon_days = j.value("horizon_days", std::int64_t{0});
    if (j.contains("peer_group") && j.contains("peers"))
        throw_config("backtest: give either peer_group or peers, not both");
    if (j.contains("peer_group")) {
        const std::string name = j["peer_group"].get<std::string>();
        auto it = groups.find(name);
        if (it == groups.end())
            throw_config("backtest references unknown peer group '" + name + "'");
        b.peers.peers = it->second;
    } else if (j.contains("peers")) {
        b.peers.peers = j["peers"].get<std::vector<std::string>>();
    }
    b.alpha_mode = alpha_mode_from_string(j.value("alpha_mode", std::string{"lca"}));
    return b;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_config(std::string("invalid config JSON: ") + e.what());
    }
    if (!j.is_object()) throw_config("config must be a JSON object");
    reject_unknown(j,
                   {"format_version", "seed", "out_dir", "panel", "series",
                    "simulate", "long_window", "peer_groups", "backtest"},
                   "config");
    if (!j.contains("format_version"))
        throw_config("config is missing format_version");
    if (j["format_version"].get<int>() != 1)
        throw_config("unsupported config format_version");

    RunConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.out_dir = j.value("out_dir", std::string{"out"});
        cfg.long_window = j.value("long_window", std::int64_t{0});

        if (j.contains("panel")) {
            const auto& p = j["panel"];
            reject_unknown(p, {"csv", "manifest", "returns"}, "panel");
            cfg.panel_csv = p.at("csv").get<std::string>();
            cfg.panel_manifest = p.at("manifest").get<std::string>();
            cfg.returns_csv = p.value("returns", std::string{});
        }
        if (j.contains("series"))
            for (const auto& s : j["series"]) cfg.series.push_back(parse_series(s));
        if (j.contains("simulate")) {
            nlohmann::json sim = j["simulate"];
            if (sim.contains("seed"))
                throw_config("simulate block must not carry its own seed; "
                             "use the top-level seed");
            if (!sim.contains("length"))
                throw_config("simulate block needs a length");
            cfg.simulate_length = sim["length"].get<std::int64_t>();
            sim.erase("length");
            cfg.simulate = regime_spec_from_json(sim.dump());
            cfg.simulate->seed = cfg.seed;
        }
        if (j.contains("peer_groups")) {
            for (auto it = j["peer_groups"].begin(); it != j["peer_groups"].end(); ++it)
                cfg.peer_groups[it.key()] = it.value().get<std::vector<std::string>>();
        }
        if (j.contains("backtest")) {
            cfg.backtest = parse_backtest(j["backtest"], cfg.peer_groups);
            cfg.has_backtest = true;
        }
    } catch (const nlohmann::json::exception& e) {
        throw_config(std::string("invalid config JSON: ") + e.what());
    }

    int sources = 0;
    if (!cfg.panel_csv.empty()) ++sources;
    if (!cfg.series.empty()) ++sources;
    if (cfg.simulate) ++sources;
    if (sources > 1)
        throw_config("config must name exactly one panel source "
                     "(panel, series, or simulate)");
    if (cfg.long_window < 0) throw_config("long_window must be non-negative");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_text_file(path));
}

namespace {

// Per-row lookup of a series value by date; data error when a panel date
// is missing from the series grid.
std::vector<double> align_to_panel(const std::vector<Date>& stamps,
                                   const std::vector<double>& values,
                                   const std::vector<Date>& panel_stamps,
                                   const std::string& what) {
    std::vector<double> out;
    out.reserve(panel_stamps.size());
    for (Date d : panel_stamps) {
        const auto it = std::lower_bound(stamps.begin(), stamps.end(), d);
        if (it == stamps.end() || !(*it == d))
            throw_data(what + " does not cover panel date " + to_iso(d));
        out.push_back(values[static_cast<std::size_t>(it - stamps.begin())]);
    }
    return out;
}

RawSeries extract_column(const CsvTable& table, const std::string& column,
                         const std::string& file) {
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        if (table.columns[c] == column) {
            RawSeries raw;
            raw.name = column;
            raw.stamps = table.stamps;
            raw.values = table.values[c];
            raw.validate();
            return raw;
        }
    throw_data("column '" + column + "' not found in " + file);
}

IndicatorSeries build_indicator(const SeriesSpec& spec,
                                std::map<std::string, CsvTable>& cache) {
    auto table = [&](const std::string& path) -> const CsvTable& {
        auto it = cache.find(path);
        if (it == cache.end()) it = cache.emplace(path, read_csv(path)).first;
        return it->second;
    };
    const RawSeries raw = extract_column(table(spec.file), spec.column, spec.file);

    IndicatorSeries ind;
    switch (spec.kind) {
        case IndicatorKind::zscore:
            ind = zscore(raw, spec.window > 0 ? spec.window : kDefaultZScoreWindow,
                         spec.name);
            break;
        case IndicatorKind::implied_vol_zscore:
            ind = implied_vol_zscore(
                raw, spec.window > 0 ? spec.window : kDefaultZScoreWindow, spec.name);
            break;
        case IndicatorKind::carry:
        case IndicatorKind::carry_change: {
            const std::string mfile =
                spec.minus_file.empty() ? spec.file : spec.minus_file;
            const RawSeries base = extract_column(table(mfile), spec.minus_column, mfile);
            ind = carry(raw, base, spec.name);
            if (spec.kind == IndicatorKind::carry_change)
                ind = carry_change(ind, spec.lag > 0 ? spec.lag : kDefaultCarryLag,
                                   spec.name);
            break;
        }
        case IndicatorKind::momentum_mean: {
            // Source column holds levels; momentum averages their realized returns.
            const IndicatorSeries rets = realized_return(raw, raw.name);
            RawSeries ret_raw;
            ret_raw.name = raw.name;
            for (std::size_t i = rets.first_valid; i < rets.end_valid; ++i) {
                ret_raw.stamps.push_back(rets.stamps[i]);
                ret_raw.values.push_back(rets.values[i]);
            }
            ind = momentum_mean(ret_raw,
                                spec.window > 0 ? spec.window : kDefaultMomentumWindow,
                                spec.name);
            break;
        }
        case IndicatorKind::ret:
            ind = forward_return(raw, spec.name);
            break;
        case IndicatorKind::raw_count:
            ind = raw_count(raw, spec.name);
            break;
    }
    if (spec.sign_invert) ind = invert_sign(std::move(ind));
    return ind;
}

}  // namespace

DataBundle load_data(const RunConfig& cfg, const std::string& out_dir) {
    DataBundle bundle;
    if (!cfg.panel_csv.empty()) {
        bundle.panel = panel_from_files(cfg.panel_csv, cfg.panel_manifest);
        if (!cfg.returns_csv.empty()) {
            const CsvTable table = read_csv(cfg.returns_csv);
            for (std::size_t c = 0; c < table.columns.size(); ++c)
                bundle.asset_returns[table.columns[c]] =
                    align_to_panel(table.stamps, table.values[c],
                                   bundle.panel.stamps, "returns column");
        }
        return bundle;
    }
    if (!cfg.series.empty()) {
        std::map<std::string, CsvTable> cache;
        std::vector<IndicatorSeries> indicators;
        std::vector<std::optional<double>> thresholds;
        for (const auto& spec : cfg.series) {
            indicators.push_back(build_indicator(spec, cache));
            thresholds.push_back(spec.threshold);
        }
        bundle.panel = binarize(indicators, thresholds);

        const std::size_t rows = bundle.panel.rows();
        bundle.signal_values.assign(rows, std::vector<double>(bundle.panel.n_signals));
        for (std::size_t col = 0; col < bundle.panel.n_signals; ++col) {
            const std::string& name = bundle.panel.names[col];
            const auto it = std::find_if(
                indicators.begin(), indicators.end(),
                [&](const IndicatorSeries& s) { return s.name == name; });
            const std::vector<double> aligned = align_to_panel(
                it->stamps, it->values, bundle.panel.stamps, "signal '" + name + "'");
            for (std::size_t r = 0; r < rows; ++r)
                bundle.signal_values[r][col] = aligned[r];
        }
        for (std::size_t a = 0; a < bundle.panel.n_assets; ++a) {
            const std::string& name =
                bundle.panel.names[bundle.panel.n_signals + a];
            const auto it = std::find_if(
                indicators.begin(), indicators.end(),
                [&](const IndicatorSeries& s) { return s.name == name; });
            bundle.asset_returns[name] = align_to_panel(
                it->stamps, it->values, bundle.panel.stamps, "asset '" + name + "'");
        }
        return bundle;
    }
    if (cfg.simulate) {
        const std::string base = out_dir.empty() ? cfg.out_dir : out_dir;
        bundle.panel = panel_from_files(base + "/panel.csv",
                                        base + "/panel_manifest.json");
        const CsvTable table = read_csv(base + "/returns.csv");
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            bundle.asset_returns[table.columns[c]] =
                align_to_panel(table.stamps, table.values[c], bundle.panel.stamps,
                               "returns column");
        return bundle;
    }
    throw_config("config names no panel source (panel, series, or simulate)");
}

}  // namespace peersel
