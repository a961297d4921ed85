#include "peersel/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>

#include <json.hpp>

#include "peersel/errors.hpp"
#include "peersel/rng.hpp"

namespace peersel {

void RegimeSpec::validate() const {
    if (n_signals < 2) throw_parameter("need at least two signals");
    if (m_assets < 1) throw_parameter("need at least one asset");
    // p_low == p_high is allowed: it is the no-signal null case in which
    // assets carry no information about their drivers.
    if (!(p_low >= 0.0 && p_low <= p_high && p_high <= 1.0))
        throw_parameter("emission probabilities must satisfy 0 <= p_low <= p_high <= 1");
    if (regimes.empty()) throw_parameter("at least one regime required");
    if (regimes.front().start_row != 0)
        throw_parameter("first regime must start at row 0");
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        if (r > 0 && regimes[r].start_row <= regimes[r - 1].start_row)
            throw_parameter("regime start rows must be strictly increasing");
        if (regimes[r].drivers.size() != m_assets)
            throw_parameter("each regime needs one driver per asset");
        for (std::uint32_t d : regimes[r].drivers)
            if (d >= n_signals) throw_parameter("driver index out of range");
    }
    if (lag_days.size() != m_assets)
        throw_parameter("lag_days must have one entry per asset");
    for (std::int64_t l : lag_days)
        if (l < 0) throw_parameter("lags must be non-negative");
    if (!signal_marginals.empty()) {
        if (signal_marginals.size() != n_signals)
            throw_parameter("signal_marginals must have one entry per signal");
        for (double p : signal_marginals)
            if (!(p >= 0.0 && p <= 1.0))
                throw_parameter("signal marginals must lie in [0, 1]");
    }
    if (!(edge_agreement >= 0.0 && edge_agreement <= 1.0))
        throw_parameter("edge_agreement must lie in [0, 1]");
    std::vector<int> parent_count(n_signals, 0);
    for (const auto& [p, c] : tree_edges) {
        if (p >= n_signals || c >= n_signals)
            throw_parameter("tree edge index out of range");
        if (p == c) throw_parameter("tree edge cannot be a self-loop");
        if (++parent_count[c] > 1)
            throw_parameter("signal " + std::to_string(c) + " has two parents");
    }
}

namespace {

std::string signal_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_S%02zu", i);
    return buf;
}

std::string asset_name(std::size_t j) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "xA%02zu", j);
    return buf;
}

// Sampling order: parents strictly before children, derived by repeated
// index-order sweeps so the order (and thus the RNG stream) is a pure
// function of the spec.
std::vector<std::size_t> topological_order(
    std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::vector<std::int32_t> parent(n, -1);
    for (const auto& [p, c] : edges) parent[c] = static_cast<std::int32_t>(p);
    std::vector<std::size_t> order;
    std::vector<bool> placed(n, false);
    while (order.size() < n) {
        bool progress = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (placed[i]) continue;
            if (parent[i] >= 0 && !placed[static_cast<std::size_t>(parent[i])]) continue;
            placed[i] = true;
            order.push_back(i);
            progress = true;
        }
        if (!progress) throw_parameter("signal dependence edges contain a cycle");
    }
    return order;
}

}  // namespace

SynthResult generate(const RegimeSpec& spec, std::int64_t length) {
    spec.validate();
    if (length < 1) throw_parameter("panel length must be positive");
    if (spec.regimes.back().start_row >= length)
        throw_parameter("last regime starts beyond the panel");

    const std::size_t n = spec.n_signals;
    const std::size_t m = spec.m_assets;
    const std::size_t rows = static_cast<std::size_t>(length);

    SynthResult out;
    BinaryPanel& panel = out.panel;
    panel.n_signals = n;
    panel.n_assets = m;
    for (std::size_t i = 0; i < n; ++i) panel.names.push_back(signal_name(i));
    for (std::size_t j = 0; j < m; ++j) panel.names.push_back(asset_name(j));
    panel.thresholds.assign(n + m, 0.0);
    panel.cells.assign(rows * (n + m), 0);
    panel.stamps.reserve(rows);
    const Date epoch = parse_date("2000-01-03");
    for (std::size_t t = 0; t < rows; ++t) panel.stamps.push_back(epoch.plus_days(
        static_cast<std::int32_t>(t)));

    std::vector<std::int32_t> parent(n, -1);
    for (const auto& [p, c] : spec.tree_edges) parent[c] = static_cast<std::int32_t>(p);
    const std::vector<std::size_t> order = topological_order(n, spec.tree_edges);
    auto marginal = [&](std::size_t i) {
        return spec.signal_marginals.empty() ? 0.5 : spec.signal_marginals[i];
    };

    // Effective driver for asset j at row t: the regime active at t - lag.
    auto driver_at = [&](std::size_t j, std::int64_t t) {
        const std::int64_t shifted = t - spec.lag_days[j];
        std::size_t r = 0;
        for (std::size_t k = 1; k < spec.regimes.size(); ++k)
            if (spec.regimes[k].start_row <= shifted) r = k;
        return spec.regimes[r].drivers[j];
    };

    Rng rng(spec.seed);
    out.returns.assign(m, std::vector<double>(rows, 0.0));
    for (std::size_t t = 0; t < rows; ++t) {
        // Signals first (ancestral order), then assets, one row at a time,
        // so the draw sequence is fixed.
        for (std::size_t i : order) {
            std::uint8_t v;
            if (parent[i] < 0) {
                v = rng.bernoulli(marginal(i)) ? 1 : 0;
            } else {
                const bool agree = rng.bernoulli(spec.edge_agreement);
                const std::uint8_t own = rng.bernoulli(marginal(i)) ? 1 : 0;
                v = agree ? panel.at(t, static_cast<std::size_t>(parent[i])) : own;
            }
            panel.at(t, i) = v;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const std::uint32_t g = driver_at(j, static_cast<std::int64_t>(t));
            const double p = panel.at(t, g) == 1 ? spec.p_high : spec.p_low;
            const std::uint8_t v = rng.bernoulli(p) ? 1 : 0;
            panel.at(t, n + j) = v;
            out.returns[j][t] = v ? 0.01 : -0.01;
        }
    }

    out.truth.regimes = spec.regimes;
    out.truth.lag_days = spec.lag_days;
    out.truth.schedule.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t r = 0; r < spec.regimes.size(); ++r) {
            const std::int64_t eff =
                r == 0 ? 0 : spec.regimes[r].start_row + spec.lag_days[j];
            const std::uint32_t d = spec.regimes[r].drivers[j];
            auto& sched = out.truth.schedule[j];
            if (!sched.empty() && sched.back().second == d) continue;
            sched.push_back({eff, d});
        }
    }
    panel.validate();
    return out;
}

std::vector<DetectionStat> detection_lag(const BacktestLedger& ledger,
                                         const GroundTruth& truth,
                                         std::size_t target_asset,
                                         const std::vector<std::string>& signal_names) {
    if (target_asset >= truth.schedule.size())
        throw_parameter("target asset index out of range");
    std::vector<DetectionStat> stats;
    const auto& sched = truth.schedule[target_asset];
    for (std::size_t s = 1; s < sched.size(); ++s) {
        DetectionStat st;
        st.regime_index = s;
        st.effective_row = sched[s].first;
        const std::string want = signal_names.at(sched[s].second);
        // End of validity: next effective switch (or panel end).
        const std::int64_t until = s + 1 < sched.size()
                                       ? sched[s + 1].first
                                       : std::numeric_limits<std::int64_t>::max();
        // Only rebalances inside this regime's validity window count.
        std::int64_t count = 0;
        for (const auto& rec : ledger.rebalances) {
            if (rec.row < st.effective_row) continue;
            if (rec.row >= until) break;
            if (st.adaptive_censored && rec.adaptive == want) {
                st.adaptive_rebalances = count;
                st.adaptive_censored = false;
            }
            if (st.greedy_censored && rec.greedy == want) {
                st.greedy_rebalances = count;
                st.greedy_censored = false;
            }
            if (!st.adaptive_censored && !st.greedy_censored) break;
            ++count;
        }
        stats.push_back(st);
    }
    return stats;
}

RegimeSpec regime_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_config(std::string("invalid generator spec JSON: ") + e.what());
    }
    static const std::set<std::string> known{
        "n_signals",     "m_assets",    "regimes",          "lag_days",
        "p_high",        "p_low",       "signal_marginals", "tree_edges",
        "edge_agreement", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw_config("generator spec has unknown key '" + it.key() + "'");

    RegimeSpec spec;
    try {
        if (j.contains("n_signals")) spec.n_signals = j["n_signals"].get<std::size_t>();
        if (j.contains("m_assets")) spec.m_assets = j["m_assets"].get<std::size_t>();
        if (j.contains("p_high")) spec.p_high = j["p_high"].get<double>();
        if (j.contains("p_low")) spec.p_low = j["p_low"].get<double>();
        if (j.contains("edge_agreement"))
            spec.edge_agreement = j["edge_agreement"].get<double>();
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("signal_marginals"))
            spec.signal_marginals = j["signal_marginals"].get<std::vector<double>>();
        if (j.contains("lag_days"))
            spec.lag_days = j["lag_days"].get<std::vector<std::int64_t>>();
        if (j.contains("tree_edges"))
            for (const auto& e : j["tree_edges"]) {
                if (!e.is_array() || e.size() != 2)
                    throw_config("tree_edges entries must be [parent, child]");
                spec.tree_edges.emplace_back(e[0].get<std::uint32_t>(),
                                             e[1].get<std::uint32_t>());
            }
        if (j.contains("regimes"))
            for (const auto& r : j["regimes"]) {
                for (auto it = r.begin(); it != r.end(); ++it)
                    if (it.key() != "start_row" && it.key() != "drivers")
                        throw_config("regime has unknown key '" + it.key() + "'");
                RegimeSpec::Regime reg;
                reg.start_row = r.at("start_row").get<std::int64_t>();
                reg.drivers = r.at("drivers").get<std::vector<std::uint32_t>>();
                spec.regimes.push_back(reg);
            }
    } catch (const nlohmann::json::exception& e) {
        throw_config(std::string("invalid generator spec JSON: ") + e.what());
    }
    return spec;
}

std::string ground_truth_json(const GroundTruth& truth) {
    nlohmann::json j;
    j["format_version"] = 1;
    nlohmann::json sched = nlohmann::json::array();
    for (const auto& asset : truth.schedule) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& [row, driver] : asset) {
            nlohmann::json e;
            e["from_row"] = row;
            e["driver"] = driver;
            rows.push_back(e);
        }
        sched.push_back(rows);
    }
    j["schedule"] = sched;
    nlohmann::json regimes = nlohmann::json::array();
    for (const auto& r : truth.regimes) {
        nlohmann::json e;
        e["start_row"] = r.start_row;
        e["drivers"] = r.drivers;
        regimes.push_back(e);
    }
    j["regimes"] = regimes;
    j["lag_days"] = truth.lag_days;
    return j.dump(2) + "\n";
}

}  // namespace peersel
