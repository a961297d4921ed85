#include "peersel/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "peersel/errors.hpp"
#include "peersel/io.hpp"
#include "peersel/kernels.hpp"

namespace peersel {

namespace {

double population_std(const double* x, std::size_t count) {
    if (count == 0) return 0.0;
    // A constant sequence must come out exactly zero (it gates the
    // degenerate-indicator flag); summation roundoff would leave ~1e-17.
    bool constant = true;
    for (std::size_t i = 1; i < count && constant; ++i) constant = x[i] == x[0];
    if (constant) return 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean += x[i];
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = x[i] - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(count));
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys,
               bool& defined) {
    defined = false;
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    // Constant inputs are degenerate by definition; summation roundoff
    // must not smuggle them past the sxx/syy guard below.
    bool x_const = true, y_const = true;
    for (std::size_t i = 1; i < n; ++i) {
        x_const = x_const && xs[i] == xs[0];
        y_const = y_const && ys[i] == ys[0];
    }
    if (x_const || y_const) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    defined = true;
    return sxy / std::sqrt(sxx * syy);
}

// Per-rebalance intermediates computed in the parallel stage.
struct Stage {
    AttachedTree at;
    std::vector<std::int64_t> chi_row;
    std::vector<std::vector<double>> dist;  // only filled in threshold mode
};

}  // namespace

BacktestLedger run_backtest(const BinaryPanel& panel,
                            const std::vector<double>& target_returns,
                            std::shared_ptr<const SignalTree> tree,
                            const BacktestConfig& config,
                            const std::vector<std::vector<double>>* signal_values) {
    panel.validate();
    const std::size_t rows = panel.rows();
    const std::size_t n = panel.n_signals;
    const std::size_t m = panel.n_assets;
    const std::int64_t w = config.estimation_window;
    const std::int64_t q = config.rebalance_step;

    if (q < 1 || w < q) throw_parameter("backtest requires W >= Q >= 1");
    if (config.vol_window < 1) throw_parameter("vol_window must be positive");
    if (config.yoy_window < 1) throw_parameter("yoy_window must be positive");
    if (config.cost_bps < 0) throw_parameter("cost_bps must be non-negative");
    if (config.jobs < 1) throw_parameter("jobs must be positive");
    if (!tree) throw_parameter("backtest requires a signal tree");
    if (static_cast<std::int64_t>(rows) < w + q)
        throw_data("panel spans fewer than W + Q rows");
    if (config.vol_window > static_cast<std::int64_t>(rows) ||
        config.yoy_window > static_cast<std::int64_t>(rows))
        throw_data("window exceeds panel length");
    if (target_returns.size() != rows)
        throw_parameter("target return series does not align with panel rows");
    if (signal_values) {
        if (signal_values->size() != rows)
            throw_parameter("signal value matrix does not align with panel rows");
        for (const auto& r : *signal_values)
            if (r.size() != n)
                throw_parameter("signal value matrix does not cover all signals");
    }
    if (tree->size() != n)
        throw_config("tree does not cover the panel's signal columns");
    for (std::size_t i = 0; i < n; ++i)
        if (tree->nodes[i] != panel.names[i])
            throw_config("tree node '" + tree->nodes[i] +
                         "' does not match panel signal column '" + panel.names[i] + "'");

    std::size_t target_col = panel.column_index(config.target);
    if (target_col < n)
        throw_config("backtest target '" + config.target + "' is not an asset column");
    const std::uint32_t target_leaf = static_cast<std::uint32_t>(target_col - n);

    BacktestLedger ledger;
    ledger.dates = panel.stamps;
    ledger.start_row = w;
    ledger.warnings = tree->warnings;
    {
        std::ostringstream note;
        note << "rebalances begin at " << to_iso(panel.stamps[static_cast<std::size_t>(w)])
             << " (row " << w << "); earlier rows feed estimation only";
        ledger.warnings.push_back(note.str());
    }

    std::vector<std::int64_t> rebal_rows;
    for (std::int64_t i = w; i < static_cast<std::int64_t>(rows); i += q)
        rebal_rows.push_back(i);
    const std::size_t nrebal = rebal_rows.size();

    const bool need_dist = config.peers.mode == PeerSpec::Mode::threshold;
    const kernels::BitMatrix bits =
        kernels::BitMatrix::pack(panel.cells.data(), rows, panel.cols());

    // Each rebalance's estimation work depends only on its own window, so
    // the heavy stage fans out across a work queue; indices pin results.
    std::vector<Stage> stage(nrebal);
    auto compute = [&](std::size_t k) {
        const std::int64_t i = rebal_rows[k];
        CoOccurrence counts = apply_block_rules(
            cooccurrence(bits, panel.names, n, m,
                         static_cast<std::size_t>(i - w), static_cast<std::size_t>(i)));
        stage[k].at = attach_leaves(tree, counts);
        stage[k].chi_row.resize(n);
        for (std::size_t s = 0; s < n; ++s)
            stage[k].chi_row[s] = counts.at(n + target_leaf, s);
        if (need_dist) stage[k].dist = leaf_distances(stage[k].at);
    };
    const std::size_t threads =
        std::min<std::size_t>(static_cast<std::size_t>(config.jobs), nrebal);
    if (threads <= 1) {
        for (std::size_t k = 0; k < nrebal; ++k) compute(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < nrebal;
                     k = next.fetch_add(1))
                    compute(k);
            });
        for (auto& th : pool) th.join();
    }

    // Explicit peer lists never change across rebalances.
    Neighborhood fixed_nb;
    if (config.peers.mode == PeerSpec::Mode::explicit_list)
        fixed_nb = neighborhood({}, target_leaf, config.peers,
                                stage.empty() ? std::vector<std::string>{}
                                              : stage[0].at.leaf_names);

    ledger.pnl_adaptive.assign(rows, 0.0);
    ledger.pnl_greedy.assign(rows, 0.0);
    ledger.pnl_underlying.assign(rows, 0.0);

    bool prev_pos_a = false;
    bool prev_pos_g = false;
    const double cost = config.cost_bps * 1e-4;

    for (std::size_t k = 0; k < nrebal; ++k) {
        const std::int64_t i = rebal_rows[k];
        const Stage& st = stage[k];

        Neighborhood nb;
        if (config.peers.mode == PeerSpec::Mode::explicit_list) {
            nb = fixed_nb;
        } else {
            std::vector<std::vector<std::vector<double>>> hist;
            for (std::size_t j = 0; j <= k; ++j) {
                if (config.peers.horizon_days > 0 &&
                    rebal_rows[j] < i - config.peers.horizon_days + 1)
                    continue;
                if (config.peers.horizon_days <= 0 && j != k) continue;
                hist.push_back(stage[j].dist);
            }
            nb = neighborhood(hist, target_leaf, config.peers, st.at.leaf_names);
        }

        TargetAttachment ta =
            attach_target(st.at, target_leaf, st.chi_row, nb, config.alpha_mode);

        RebalanceRecord rec;
        rec.row = i;
        rec.date = panel.stamps[static_cast<std::size_t>(i)];
        rec.adaptive = tree->nodes[ta.chosen];
        rec.greedy = tree->nodes[ta.greedy];
        rec.chosen_cost = ta.chosen_cost;
        rec.chosen_chi = ta.chosen_chi;
        rec.greedy_chi = ta.greedy_chi;
        rec.greedy_fallback = ta.greedy_fallback;
        rec.uninformative = ta.uninformative;
        rec.peers_empty = nb.members.empty();
        rec.cost_vector = ta.cost;
        if (!ta.subtree.nodes.empty()) {
            rec.alpha = tree->nodes[ta.subtree.alpha];
            for (std::uint32_t node : ta.subtree.nodes)
                rec.subtree.push_back(tree->nodes[node]);
        }
        for (std::uint32_t p : nb.members)
            rec.peer_attachments.emplace_back(
                st.at.leaf_names[p], tree->nodes[st.at.attachments[p].signal]);

        rec.pos_adaptive = panel.at(static_cast<std::size_t>(i), ta.chosen) == 1;
        rec.pos_greedy = panel.at(static_cast<std::size_t>(i), ta.greedy) == 1;

        // Vol-equalized prediction from the adaptive attachment. Returns
        // are known through row i-1, indicator values through row i.
        const std::int64_t vb = std::max<std::int64_t>(0, i - config.vol_window);
        const std::size_t count = static_cast<std::size_t>(i - vb);
        const double sigma_target =
            population_std(target_returns.data() + vb, count);
        std::vector<double> vals(count);
        for (std::size_t u = 0; u < count; ++u) {
            const std::size_t row = static_cast<std::size_t>(vb) + 1 + u;
            vals[u] = signal_values ? (*signal_values)[row][ta.chosen]
                                    : static_cast<double>(panel.at(row, ta.chosen));
        }
        const double sigma_ind = population_std(vals.data(), count);
        const double cur = signal_values
                               ? (*signal_values)[static_cast<std::size_t>(i)][ta.chosen]
                               : static_cast<double>(
                                     panel.at(static_cast<std::size_t>(i), ta.chosen));
        if (sigma_ind == 0.0) {
            rec.prediction = 0.0;
            rec.prediction_flagged = true;
        } else {
            rec.prediction = cur * (sigma_target / sigma_ind);
        }

        const std::int64_t stop =
            std::min<std::int64_t>(i + q, static_cast<std::int64_t>(rows));
        for (std::int64_t u = i; u < stop; ++u) {
            const double r = target_returns[static_cast<std::size_t>(u)];
            if (rec.pos_adaptive) ledger.pnl_adaptive[static_cast<std::size_t>(u)] = r;
            if (rec.pos_greedy) ledger.pnl_greedy[static_cast<std::size_t>(u)] = r;
            ledger.pnl_underlying[static_cast<std::size_t>(u)] = r;
        }
        if (cost > 0.0) {
            if (rec.pos_adaptive != prev_pos_a)
                ledger.pnl_adaptive[static_cast<std::size_t>(i)] -= cost;
            if (rec.pos_greedy != prev_pos_g)
                ledger.pnl_greedy[static_cast<std::size_t>(i)] -= cost;
        }
        prev_pos_a = rec.pos_adaptive;
        prev_pos_g = rec.pos_greedy;

        ledger.rebalances.push_back(std::move(rec));
    }

    // Per-variant metrics over the rebalance periods.
    auto finish = [&](VariantMetrics& vm, auto invested, auto attachment) {
        std::int64_t hits = 0;
        for (std::size_t k = 0; k < nrebal; ++k) {
            const std::int64_t i = rebal_rows[k];
            const std::int64_t stop =
                std::min<std::int64_t>(i + q, static_cast<std::int64_t>(rows));
            if (!invested(k)) continue;
            ++vm.invested_periods;
            double period = 0.0;
            for (std::int64_t u = i; u < stop; ++u)
                period += target_returns[static_cast<std::size_t>(u)];
            if (period > 0.0) ++hits;
        }
        vm.hit_defined = vm.invested_periods > 0;
        vm.hit_ratio = vm.hit_defined ? static_cast<double>(hits) /
                                            static_cast<double>(vm.invested_periods)
                                      : 0.0;
        for (std::size_t k = 1; k < nrebal; ++k)
            if (attachment(k) != attachment(k - 1)) ++vm.switches;
    };
    finish(
        ledger.adaptive, [&](std::size_t k) { return ledger.rebalances[k].pos_adaptive; },
        [&](std::size_t k) -> const std::string& { return ledger.rebalances[k].adaptive; });
    finish(
        ledger.greedy, [&](std::size_t k) { return ledger.rebalances[k].pos_greedy; },
        [&](std::size_t k) -> const std::string& { return ledger.rebalances[k].greedy; });
    static const std::string kUnderlying = "underlying";
    finish(
        ledger.underlying, [&](std::size_t) { return true; },
        [&](std::size_t) -> const std::string& { return kUnderlying; });
    for (double v : ledger.pnl_adaptive) ledger.adaptive.cumulative += v;
    for (double v : ledger.pnl_greedy) ledger.greedy.cumulative += v;
    for (double v : ledger.pnl_underlying) ledger.underlying.cumulative += v;

    std::vector<double> preds(nrebal);
    for (std::size_t k = 0; k < nrebal; ++k)
        preds[k] = ledger.rebalances[k].prediction;
    const YoyResult yoy = yoy_correlation(rebal_rows, preds, target_returns, q,
                                          config.yoy_window);
    ledger.yoy_points = yoy.points;
    ledger.yoy_correlation = yoy.correlation;
    ledger.yoy_defined = yoy.defined;

    return ledger;
}

YoyResult yoy_correlation(const std::vector<std::int64_t>& rebalance_rows,
                          const std::vector<double>& predictions,
                          const std::vector<double>& target_returns,
                          std::int64_t rebalance_step,
                          std::int64_t yoy_window) {
    if (rebalance_rows.size() != predictions.size())
        throw_parameter("yoy_correlation needs one prediction per rebalance");
    if (rebalance_step < 1) throw_parameter("rebalance_step must be positive");
    if (yoy_window < 1) throw_parameter("yoy_window must be positive");
    std::vector<double> agg, realized;
    const std::int64_t first =
        rebalance_rows.empty() ? 0 : rebalance_rows.front();
    for (std::size_t k = 0; k < rebalance_rows.size(); ++k) {
        const std::int64_t i = rebalance_rows[k];
        if (i > static_cast<std::int64_t>(target_returns.size()))
            throw_parameter("yoy_correlation: rebalance row " +
                            std::to_string(i) + " beyond the return series");
        if (i - yoy_window < first) continue;  // predictions must exist
        double a = 0.0;
        bool any = false;
        for (std::size_t j = 0; j < k; ++j) {
            const std::int64_t rj = rebalance_rows[j];
            if (rj >= i - yoy_window && rj <= i - rebalance_step) {
                a += predictions[j];
                any = true;
            }
        }
        if (!any) continue;
        double r = 0.0;
        for (std::int64_t u = i - yoy_window; u < i; ++u)
            r += target_returns[static_cast<std::size_t>(u)];
        agg.push_back(a);
        realized.push_back(r);
    }
    YoyResult res;
    res.points = static_cast<std::int64_t>(agg.size());
    res.correlation = pearson(agg, realized, res.defined);
    return res;
}

std::string daily_pnl_csv(const BacktestLedger& ledger) {
    std::ostringstream out;
    out << "date,adaptive,greedy,underlying\n";
    for (std::size_t u = static_cast<std::size_t>(ledger.start_row);
         u < ledger.dates.size(); ++u)
        out << to_iso(ledger.dates[u]) << ',' << format_double(ledger.pnl_adaptive[u])
            << ',' << format_double(ledger.pnl_greedy[u]) << ','
            << format_double(ledger.pnl_underlying[u]) << '\n';
    return out.str();
}

std::string rebalances_jsonl(const BacktestLedger& ledger) {
    std::ostringstream out;
    for (const auto& rec : ledger.rebalances) {
        nlohmann::json j;
        j["date"] = to_iso(rec.date);
        j["row"] = rec.row;
        j["chosen"] = rec.adaptive;
        j["greedy_choice"] = rec.greedy;
        j["chosen_chi"] = rec.chosen_chi;
        j["greedy_chi"] = rec.greedy_chi;
        j["chosen_cost"] = rec.chosen_cost;
        j["cost_vector"] = rec.cost_vector;
        j["O"] = rec.subtree;
        j["alpha"] = rec.alpha;
        nlohmann::json pa = nlohmann::json::object();
        for (const auto& [leaf, sig] : rec.peer_attachments) pa[leaf] = sig;
        j["peer_attachments"] = pa;
        j["position_adaptive"] = rec.pos_adaptive ? "long" : "cash";
        j["position_greedy"] = rec.pos_greedy ? "long" : "cash";
        j["prediction"] = rec.prediction;
        j["prediction_flagged"] = rec.prediction_flagged;
        j["greedy_fallback"] = rec.greedy_fallback;
        j["uninformative"] = rec.uninformative;
        j["peers_empty"] = rec.peers_empty;
        out << j.dump() << '\n';
    }
    return out.str();
}

namespace {

nlohmann::json variant_json(const VariantMetrics& vm) {
    nlohmann::json j;
    j["cumulative_return"] = vm.cumulative;
    if (vm.hit_defined)
        j["hit_ratio"] = vm.hit_ratio;
    else
        j["hit_ratio"] = "no-trades";
    j["invested_periods"] = vm.invested_periods;
    j["switches"] = vm.switches;
    return j;
}

}  // namespace

std::string metrics_json(const BacktestLedger& ledger, const BacktestConfig& config) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["variants"]["adaptive"] = variant_json(ledger.adaptive);
    j["variants"]["greedy"] = variant_json(ledger.greedy);
    j["variants"]["underlying"] = variant_json(ledger.underlying);
    nlohmann::json yoy;
    yoy["defined"] = ledger.yoy_defined;
    if (ledger.yoy_defined)
        yoy["correlation"] = ledger.yoy_correlation;
    else
        yoy["correlation"] = nullptr;
    yoy["points"] = ledger.yoy_points;
    j["yoy"] = yoy;

    nlohmann::json man;
    man["target"] = config.target;
    man["estimation_window"] = config.estimation_window;
    man["rebalance_step"] = config.rebalance_step;
    man["vol_window"] = config.vol_window;
    man["yoy_window"] = config.yoy_window;
    man["alpha_mode"] = to_string(config.alpha_mode);
    man["peer_mode"] = config.peers.mode == PeerSpec::Mode::explicit_list
                           ? "explicit"
                           : "threshold";
    man["peers"] = config.peers.peers;
    man["theta"] = config.peers.theta;
    man["horizon_days"] = config.peers.horizon_days;
    man["cost_bps"] = config.cost_bps;
    man["cost_rule"] = "cost_bps per position change, long/cash variants only";
    man["pnl_convention"] =
        "additive daily PnL; the position held over (t, t+Q] earns the "
        "forward returns stored at rows [t, t+Q)";
    man["prediction_rule"] =
        "indicator value at t scaled by trailing sigma(target returns) / "
        "sigma(indicator values), both over vol_window";
    man["yoy_aggregation"] =
        "prediction sum over rebalances j with i-yoy_window <= row(j) <= "
        "i-Q against the realized return sum over rows [i-yoy_window, i)";
    j["manifest"] = man;
    j["warnings"] = ledger.warnings;
    return j.dump(2) + "\n";
}

std::string plot_data_json(const BacktestLedger& ledger) {
    nlohmann::json j;
    j["format_version"] = 1;
    nlohmann::json dates = nlohmann::json::array();
    nlohmann::json ca = nlohmann::json::array(), cg = nlohmann::json::array(),
                   cu = nlohmann::json::array();
    double sa = 0.0, sg = 0.0, su = 0.0;
    for (std::size_t u = static_cast<std::size_t>(ledger.start_row);
         u < ledger.dates.size(); ++u) {
        dates.push_back(to_iso(ledger.dates[u]));
        sa += ledger.pnl_adaptive[u];
        sg += ledger.pnl_greedy[u];
        su += ledger.pnl_underlying[u];
        ca.push_back(sa);
        cg.push_back(sg);
        cu.push_back(su);
    }
    j["dates"] = dates;
    j["cumulative"]["adaptive"] = ca;
    j["cumulative"]["greedy"] = cg;
    j["cumulative"]["underlying"] = cu;

    nlohmann::json sw_a = nlohmann::json::array(), sw_g = nlohmann::json::array();
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& rec : ledger.rebalances) {
        nlohmann::json a;
        a["date"] = to_iso(rec.date);
        a["attachment"] = rec.adaptive;
        sw_a.push_back(a);
        nlohmann::json g;
        g["date"] = to_iso(rec.date);
        g["attachment"] = rec.greedy;
        sw_g.push_back(g);
        nlohmann::json p;
        p["date"] = to_iso(rec.date);
        p["value"] = rec.prediction;
        p["attachment"] = rec.adaptive;
        preds.push_back(p);
    }
    j["switching"]["adaptive"] = sw_a;
    j["switching"]["greedy"] = sw_g;
    j["predictions"] = preds;
    return j.dump(2) + "\n";
}

}  // namespace peersel
