#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "peersel/attach.hpp"
#include "peersel/backtest.hpp"
#include "peersel/config.hpp"
#include "peersel/cooccur.hpp"
#include "peersel/errors.hpp"
#include "peersel/io.hpp"
#include "peersel/panel.hpp"
#include "peersel/rng.hpp"
#include "peersel/sigtree.hpp"
#include "peersel/synth.hpp"
#include "peersel/verify.hpp"

namespace {

using namespace peersel;

int g_verbosity = 0;  // PEERSEL_LOG=debug turns on progress notes

void log_note(const std::string& msg) {
    if (g_verbosity > 0) std::cerr << "[peersel] " << msg << "\n";
}

struct Overrides {
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> peer_mode;
    std::optional<std::string> alpha_mode;
};

RunConfig load_config(const std::string& config_path, const Overrides& ov) {
    if (config_path.empty()) throw_config("--config is required for this command");
    RunConfig cfg = load_run_config(config_path);
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    if (ov.seed) {
        cfg.seed = *ov.seed;
        if (cfg.simulate) cfg.simulate->seed = *ov.seed;
    }
    if (ov.jobs) cfg.backtest.jobs = *ov.jobs;
    if (ov.peer_mode)
        cfg.backtest.peers.mode = *ov.peer_mode == "threshold"
                                      ? PeerSpec::Mode::threshold
                                      : PeerSpec::Mode::explicit_list;
    if (ov.alpha_mode) cfg.backtest.alpha_mode = alpha_mode_from_string(*ov.alpha_mode);
    return cfg;
}

std::string returns_csv_text(const SynthResult& synth) {
    std::ostringstream out;
    out << "date";
    for (std::size_t j = 0; j < synth.panel.n_assets; ++j)
        out << ',' << synth.panel.names[synth.panel.n_signals + j];
    out << '\n';
    for (std::size_t t = 0; t < synth.panel.rows(); ++t) {
        out << to_iso(synth.panel.stamps[t]);
        for (std::size_t j = 0; j < synth.panel.n_assets; ++j)
            out << ',' << format_double(synth.returns[j][t]);
        out << '\n';
    }
    return out.str();
}

void run_simulate(const RunConfig& cfg) {
    if (!cfg.simulate)
        throw_config("simulate requires a 'simulate' block in the config");
    const SynthResult synth = generate(*cfg.simulate, cfg.simulate_length);
    ensure_directory(cfg.out_dir);
    atomic_write(cfg.out_dir + "/panel.csv", panel_to_csv(synth.panel));
    atomic_write(cfg.out_dir + "/panel_manifest.json",
                 panel_manifest_json(synth.panel));
    atomic_write(cfg.out_dir + "/returns.csv", returns_csv_text(synth));
    atomic_write(cfg.out_dir + "/truth.json", ground_truth_json(synth.truth));
    log_note("simulate: wrote panel of " + std::to_string(synth.panel.rows()) +
             " rows to " + cfg.out_dir);
}

// The stationary tree comes from the trailing long window (all rows when
// long_window is 0).
void run_build_tree(const RunConfig& cfg) {
    const DataBundle bundle = load_data(cfg, cfg.out_dir);
    const std::size_t rows = bundle.panel.rows();
    std::size_t h = rows;
    if (cfg.long_window > 0)
        h = std::min<std::size_t>(static_cast<std::size_t>(cfg.long_window), rows);
    const CoOccurrence counts = cooccurrence(bundle.panel, rows - h, rows, true);
    const SignalTree tree = build_mst(counts);
    ensure_directory(cfg.out_dir);
    atomic_write(cfg.out_dir + "/tree.json", tree_to_json(tree));
    atomic_write(cfg.out_dir + "/tree_edges.csv", tree_edges_csv(tree));
    atomic_write(cfg.out_dir + "/cooccur_long.csv", cooccurrence_to_csv(counts));
    atomic_write(cfg.out_dir + "/cooccur_long.json", cooccurrence_to_json(counts));
    log_note("build-tree: " + std::to_string(tree.size()) + " nodes, root " +
             tree.nodes[tree.root]);
}

std::shared_ptr<const SignalTree> load_tree(const RunConfig& cfg) {
    const std::string path = cfg.out_dir + "/tree.json";
    return std::make_shared<const SignalTree>(tree_from_json(read_text_file(path)));
}

nlohmann::json attachment_json(const AttachedTree& at, std::size_t leaf) {
    const Attachment& a = at.attachments[leaf];
    nlohmann::json j;
    j["signal"] = at.tree->nodes[a.signal];
    j["chi"] = a.chi;
    j["weight"] = a.weight;
    j["uninformative"] = a.uninformative;
    return j;
}

void run_attach(const RunConfig& cfg) {
    const DataBundle bundle = load_data(cfg, cfg.out_dir);
    const auto tree = load_tree(cfg);
    const std::size_t rows = bundle.panel.rows();
    const std::int64_t w = cfg.backtest.estimation_window;
    if (static_cast<std::int64_t>(rows) < w)
        throw_data("panel spans fewer rows than the estimation window");
    CoOccurrence counts = apply_block_rules(
        cooccurrence(bundle.panel, rows - static_cast<std::size_t>(w), rows));
    const AttachedTree at = attach_leaves(tree, counts);

    nlohmann::json j;
    j["format_version"] = 1;
    j["date"] = to_iso(bundle.panel.stamps.back());
    j["short_window"] = w;
    nlohmann::json leaves = nlohmann::json::object();
    for (std::size_t leaf = 0; leaf < at.leaf_names.size(); ++leaf)
        leaves[at.leaf_names[leaf]] = attachment_json(at, leaf);
    j["leaves"] = leaves;

    if (!cfg.backtest.target.empty()) {
        const std::uint32_t target = at.leaf_index(cfg.backtest.target);
        std::vector<std::vector<std::vector<double>>> hist;
        if (cfg.backtest.peers.mode == PeerSpec::Mode::threshold)
            hist.push_back(leaf_distances(at));
        const Neighborhood nb =
            neighborhood(hist, target, cfg.backtest.peers, at.leaf_names);
        std::vector<std::int64_t> chi_row(tree->size());
        for (std::size_t s = 0; s < tree->size(); ++s)
            chi_row[s] = counts.at(bundle.panel.n_signals + target, s);
        const TargetAttachment ta =
            attach_target(at, target, chi_row, nb, cfg.backtest.alpha_mode);
        nlohmann::json t;
        t["target"] = cfg.backtest.target;
        t["chosen"] = tree->nodes[ta.chosen];
        t["greedy_choice"] = tree->nodes[ta.greedy];
        t["chosen_cost"] = ta.chosen_cost;
        t["cost_vector"] = ta.cost;
        t["greedy_fallback"] = ta.greedy_fallback;
        t["uninformative"] = ta.uninformative;
        nlohmann::json o = nlohmann::json::array();
        for (std::uint32_t node : ta.subtree.nodes) o.push_back(tree->nodes[node]);
        t["O"] = o;
        t["alpha"] =
            ta.subtree.nodes.empty() ? "" : tree->nodes[ta.subtree.alpha];
        nlohmann::json pa = nlohmann::json::object();
        for (std::uint32_t p : nb.members)
            pa[at.leaf_names[p]] = tree->nodes[at.attachments[p].signal];
        t["peer_attachments"] = pa;
        j["target"] = t;
    } else {
        j["target"] = nullptr;
    }
    ensure_directory(cfg.out_dir);
    atomic_write(cfg.out_dir + "/attach.json", j.dump(2) + "\n");
}

void run_backtest_cmd(const RunConfig& cfg) {
    if (!cfg.has_backtest || cfg.backtest.target.empty())
        throw_config("backtest requires a 'backtest' block with a target");
    const DataBundle bundle = load_data(cfg, cfg.out_dir);
    const auto tree = load_tree(cfg);
    const auto rit = bundle.asset_returns.find(cfg.backtest.target);
    if (rit == bundle.asset_returns.end())
        throw_config("no return series available for target '" +
                     cfg.backtest.target + "'");
    const std::vector<std::vector<double>>* values =
        bundle.signal_values.empty() ? nullptr : &bundle.signal_values;
    const BacktestLedger ledger =
        run_backtest(bundle.panel, rit->second, tree, cfg.backtest, values);
    ensure_directory(cfg.out_dir);
    atomic_write(cfg.out_dir + "/daily_pnl.csv", daily_pnl_csv(ledger));
    atomic_write(cfg.out_dir + "/rebalances.jsonl", rebalances_jsonl(ledger));
    atomic_write(cfg.out_dir + "/metrics.json", metrics_json(ledger, cfg.backtest));
    atomic_write(cfg.out_dir + "/plot_data.json", plot_data_json(ledger));
    log_note("backtest: " + std::to_string(ledger.rebalances.size()) + " rebalances");
}

std::string fmt_cell(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v.get<double>());
    return buf;
}

void run_report(const RunConfig& cfg) {
    const std::string metrics_text = read_text_file(cfg.out_dir + "/metrics.json");
    nlohmann::json metrics;
    try {
        metrics = nlohmann::json::parse(metrics_text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("metrics.json is not valid JSON: ") + e.what());
    }
    const CsvTable pnl = read_csv(cfg.out_dir + "/daily_pnl.csv");

    std::ostringstream out;
    out << "backtest report\n";
    out << "target: " << metrics["manifest"]["target"].get<std::string>() << "\n";
    if (!pnl.stamps.empty())
        out << "span: " << to_iso(pnl.stamps.front()) << " .. "
            << to_iso(pnl.stamps.back()) << " (" << pnl.stamps.size()
            << " rows)\n";
    out << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-11s %14s %10s %9s %9s\n", "variant",
                  "cumulative", "hit_ratio", "switches", "invested");
    out << line;
    for (const auto& name : {"adaptive", "greedy", "underlying"}) {
        const auto& v = metrics["variants"][name];
        std::snprintf(line, sizeof(line), "%-11s %14.6f %10s %9lld %9lld\n", name,
                      v["cumulative_return"].get<double>(),
                      fmt_cell(v["hit_ratio"]).c_str(),
                      static_cast<long long>(v["switches"].get<std::int64_t>()),
                      static_cast<long long>(v["invested_periods"].get<std::int64_t>()));
        out << line;
    }
    out << "\n";
    if (metrics["yoy"]["defined"].get<bool>()) {
        std::snprintf(line, sizeof(line),
                      "yoy prediction correlation: %.6f over %lld points\n",
                      metrics["yoy"]["correlation"].get<double>(),
                      static_cast<long long>(metrics["yoy"]["points"].get<std::int64_t>()));
        out << line;
    } else {
        out << "yoy prediction correlation: undefined\n";
    }
    ensure_directory(cfg.out_dir);
    atomic_write(cfg.out_dir + "/report.txt", out.str());

    nlohmann::json echo;
    echo["format_version"] = 1;
    echo["metrics"] = metrics;
    echo["pnl_rows"] = pnl.stamps.size();
    atomic_write(cfg.out_dir + "/report.json", echo.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// selftest: fast oracle sweep over every core property.

struct SelfTest {
    int passed = 0;
    int failed = 0;

    void check(const std::string& name, bool ok, const std::string& detail = {}) {
        if (ok) {
            ++passed;
            std::printf("selftest: PASS %s\n", name.c_str());
        } else {
            ++failed;
            std::printf("selftest: FAIL %s%s%s\n", name.c_str(),
                        detail.empty() ? "" : " — ", detail.c_str());
        }
    }
};

std::vector<std::string> test_names(std::size_t n, std::size_t m) {
    std::vector<std::string> names;
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "_S%02zu", i);
        names.push_back(buf);
    }
    for (std::size_t j = 0; j < m; ++j) {
        std::snprintf(buf, sizeof(buf), "xA%02zu", j);
        names.push_back(buf);
    }
    return names;
}

void run_selftest(std::uint64_t seed) {
    SelfTest st;
    Rng rng(seed);

    {  // spanning tree optimality against exhaustive enumeration
        bool ok = true;
        std::string detail;
        for (int inst = 0; inst < 40 && ok; ++inst) {
            const int n = 4 + static_cast<int>(rng.uniform_int(0, 2));
            const auto cells = verify::random_cells(rng, 64, static_cast<std::size_t>(n), 0.5);
            const CoOccurrence counts = verify::naive_counts(
                cells, 64, test_names(static_cast<std::size_t>(n), 0),
                static_cast<std::size_t>(n), 0);
            const SignalTree tree = build_mst(counts);
            const std::int64_t got = verify::scaled_tree_cost(tree, counts);
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            verify::for_each_spanning_tree(n, [&](const auto& edges) {
                best = std::min(best, verify::scaled_tree_cost(edges, counts));
            });
            if (got != best) {
                ok = false;
                detail = "instance " + std::to_string(inst);
            }
        }
        st.check("mst-optimal-vs-enumeration", ok, detail);
    }

    {  // union-path cost invariant over the attachment point inside O
        bool ok = true;
        std::string detail;
        for (int inst = 0; inst < 30 && ok; ++inst) {
            const std::size_t n = 5, m = 3;
            const auto long_cells = verify::random_cells(rng, 64, n, 0.5);
            const CoOccurrence ch =
                verify::naive_counts(long_cells, 64, test_names(n, 0), n, 0);
            auto tree = std::make_shared<const SignalTree>(build_mst(ch));
            const auto short_cells = verify::random_cells(rng, 64, n + m, 0.5);
            const CoOccurrence ct = apply_block_rules(
                verify::naive_counts(short_cells, 64, test_names(n, m), n, m));
            const AttachedTree at = attach_leaves(tree, ct);
            Neighborhood nb;
            nb.target = 0;
            nb.members = {1, 2};
            const PeerSubtree o = peer_subtree(at, nb);
            double first = 0.0;
            bool have = false;
            for (std::uint32_t node : o.nodes) {
                const double c = verify::union_path_cost(at, nb, 0.25, node);
                if (!have) {
                    first = c;
                    have = true;
                } else if (c != first) {
                    ok = false;
                    detail = "instance " + std::to_string(inst);
                }
            }
        }
        st.check("union-path-invariance", ok, detail);
    }

    {  // adaptive choice against brute force + contracted Dijkstra
        bool ok = true;
        std::string detail;
        for (int inst = 0; inst < 60 && ok; ++inst) {
            const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform_int(0, 4));
            const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_int(0, 2));
            const auto long_cells = verify::random_cells(rng, 64, n, 0.5);
            const CoOccurrence ch =
                verify::naive_counts(long_cells, 64, test_names(n, 0), n, 0);
            auto tree = std::make_shared<const SignalTree>(build_mst(ch));
            const auto short_cells = verify::random_cells(rng, 64, n + m, 0.5);
            const CoOccurrence ct = apply_block_rules(
                verify::naive_counts(short_cells, 64, test_names(n, m), n, m));
            const AttachedTree at = attach_leaves(tree, ct);
            Neighborhood nb;
            nb.target = 0;
            for (std::uint32_t p = 1; p < m; ++p) nb.members.push_back(p);
            if (nb.members.empty()) continue;
            std::vector<std::int64_t> chi_row(n);
            for (std::size_t s = 0; s < n; ++s) chi_row[s] = ct.at(n + 0, s);
            const TargetAttachment ta = attach_target(at, 0, chi_row, nb);
            if (ta.greedy_fallback) continue;
            const std::uint32_t want = verify::brute_force_choice(
                *tree, chi_row, 64, ta.subtree.nodes);
            if (ta.chosen != want) {
                ok = false;
                detail = "instance " + std::to_string(inst);
            }
            std::vector<double> cw(n);
            for (std::size_t s = 0; s < n; ++s)
                cw[s] = dissimilarity_weight(chi_row[s], 64);
            const double dij = verify::dijkstra_to_star(
                contract(*tree, ta.subtree, cw, "xA00"));
            if (dij != ta.chosen_cost) {
                ok = false;
                detail = "dijkstra mismatch at instance " + std::to_string(inst);
            }
        }
        st.check("adaptive-choice-vs-bruteforce", ok, detail);
    }

    {  // kernel ISA equivalence
        bool ok = true;
        std::string detail = kernels::avx2_supported() ? "" : "avx2 unavailable, scalar only";
        for (int inst = 0; inst < 20 && ok; ++inst) {
            const std::size_t rows = 64 + static_cast<std::size_t>(rng.uniform_int(0, 512));
            const auto cells = verify::random_cells(rng, rows, 4, 0.4);
            const auto bits = kernels::BitMatrix::pack(cells.data(), rows, 4);
            const std::size_t b = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(rows - 1)));
            const std::size_t e = b + static_cast<std::size_t>(rng.uniform_int(
                                          1, static_cast<std::int64_t>(rows - b)));
            kernels::force_isa(kernels::Isa::scalar);
            const std::int64_t s = kernels::pair_count(bits, 0, 1, b, e);
            kernels::force_isa(std::nullopt);
            if (kernels::avx2_supported()) {
                kernels::force_isa(kernels::Isa::avx2);
                const std::int64_t v = kernels::pair_count(bits, 0, 1, b, e);
                kernels::force_isa(std::nullopt);
                if (s != v) {
                    ok = false;
                    detail = "range [" + std::to_string(b) + "," + std::to_string(e) + ")";
                }
            }
            std::int64_t naive = 0;
            for (std::size_t t = b; t < e; ++t)
                naive += (cells[t * 4 + 0] & cells[t * 4 + 1]) ? 1 : 0;
            if (s != naive) {
                ok = false;
                detail = "scalar kernel disagrees with naive count";
            }
        }
        st.check("kernel-isa-equivalence", ok, detail);
    }

    {  // no look-ahead in the backtest
        RegimeSpec spec;
        spec.n_signals = 4;
        spec.m_assets = 3;
        spec.lag_days = {0, 5, 10};
        spec.regimes.push_back({0, {0, 0, 0}});
        spec.regimes.push_back({60, {2, 2, 2}});
        spec.tree_edges = {{0, 1}, {1, 2}, {2, 3}};
        spec.seed = seed + 7;
        const SynthResult synth = generate(spec, 140);
        const CoOccurrence ch = cooccurrence(synth.panel, 0, synth.panel.rows(), true);
        auto tree = std::make_shared<const SignalTree>(build_mst(ch));
        BacktestConfig bc;
        bc.estimation_window = 40;
        bc.rebalance_step = 10;
        bc.vol_window = 40;
        bc.yoy_window = 60;
        bc.target = "xA02";
        bc.peers.peers = {"xA00", "xA01"};
        const auto audit =
            verify::no_lookahead_audit(synth.panel, synth.returns[2], tree, bc);
        st.check("backtest-no-lookahead", audit.ok, audit.message);
    }

    {  // generator reproducibility
        RegimeSpec spec;
        spec.n_signals = 5;
        spec.m_assets = 2;
        spec.lag_days = {0, 3};
        spec.regimes.push_back({0, {0, 1}});
        spec.tree_edges = {{0, 1}, {0, 2}, {2, 3}, {2, 4}};
        spec.seed = seed;
        const SynthResult a = generate(spec, 200);
        const SynthResult b = generate(spec, 200);
        st.check("generator-reproducible",
                 a.panel.cells == b.panel.cells && a.returns == b.returns);
    }

    std::printf("selftest: %d passed, %d failed\n", st.passed, st.failed);
    if (st.failed > 0) throw_numeric("selftest failed");
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* lv = std::getenv("PEERSEL_LOG"))
        g_verbosity = std::string(lv) == "debug" ? 1 : 0;

    CLI::App app{"peer-cohesion signal selection"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    std::uint64_t seed_opt = 0;
    int jobs_opt = 0;
    std::string peer_mode_opt, alpha_mode_opt;

    app.add_option("--config", config_path, "run configuration JSON");
    app.add_option("--out", ov.out, "output directory (overrides config)");
    auto* seed_flag = app.add_option("--seed", seed_opt, "seed override");
    auto* jobs_flag = app.add_option("--jobs", jobs_opt, "worker threads")
                          ->check(CLI::PositiveNumber);
    app.add_option("--peer-mode", peer_mode_opt, "peer selection mode")
        ->check(CLI::IsMember({"explicit", "threshold"}));
    app.add_option("--alpha-mode", alpha_mode_opt, "peer subtree truncation")
        ->check(CLI::IsMember({"lca", "literal"}));

    auto* cmd_build = app.add_subcommand("build-tree", "estimate the signal tree");
    auto* cmd_attach = app.add_subcommand("attach", "attach assets at the latest window");
    auto* cmd_backtest = app.add_subcommand("backtest", "run the rolling evaluation");
    auto* cmd_simulate = app.add_subcommand("simulate", "generate a synthetic panel");
    auto* cmd_report = app.add_subcommand("report", "summarize backtest outputs");
    auto* cmd_selftest = app.add_subcommand("selftest", "run the oracle suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (seed_flag->count() > 0) ov.seed = seed_opt;
        if (jobs_flag->count() > 0) ov.jobs = jobs_opt;
        if (!peer_mode_opt.empty()) ov.peer_mode = peer_mode_opt;
        if (!alpha_mode_opt.empty()) ov.alpha_mode = alpha_mode_opt;

        if (cmd_selftest->parsed()) {
            run_selftest(ov.seed.value_or(12345));
            return 0;
        }
        const RunConfig cfg = load_config(config_path, ov);
        if (cmd_simulate->parsed()) run_simulate(cfg);
        if (cmd_build->parsed()) run_build_tree(cfg);
        if (cmd_attach->parsed()) run_attach(cfg);
        if (cmd_backtest->parsed()) run_backtest_cmd(cfg);
        if (cmd_report->parsed()) run_report(cfg);
        return 0;
    } catch (const Error& e) {
        nlohmann::json err;
        err["error"]["category"] = to_string(e.category());
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"]["category"] = "internal";
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
