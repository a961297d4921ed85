#include "peersel/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "peersel/errors.hpp"

namespace peersel::verify {

std::vector<std::array<int, 2>> prufer_decode(const std::vector<int>& seq, int n) {
    if (n < 2) throw_parameter("prufer_decode needs n >= 2");
    if (static_cast<int>(seq.size()) != n - 2)
        throw_parameter("prufer sequence must have n - 2 entries");
    std::vector<int> degree(n, 1);
    for (int v : seq) {
        if (v < 0 || v >= n) throw_parameter("prufer label out of range");
        ++degree[v];
    }
    std::vector<std::array<int, 2>> edges;
    std::set<int> leaves;
    for (int i = 0; i < n; ++i)
        if (degree[i] == 1) leaves.insert(i);
    for (int v : seq) {
        const int leaf = *leaves.begin();
        leaves.erase(leaves.begin());
        edges.push_back({leaf, v});
        if (--degree[v] == 1) leaves.insert(v);
    }
    const int a = *leaves.begin();
    const int b = *std::next(leaves.begin());
    edges.push_back({a, b});
    return edges;
}

void for_each_spanning_tree(
    int n, const std::function<void(const std::vector<std::array<int, 2>>&)>& fn) {
    if (n == 2) {
        fn({{0, 1}});
        return;
    }
    std::vector<int> seq(static_cast<std::size_t>(n - 2), 0);
    while (true) {
        fn(prufer_decode(seq, n));
        int pos = n - 3;
        while (pos >= 0 && seq[static_cast<std::size_t>(pos)] == n - 1) {
            seq[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++seq[static_cast<std::size_t>(pos)];
    }
}

std::int64_t scaled_tree_cost(const std::vector<std::array<int, 2>>& edges,
                              const CoOccurrence& counts) {
    const std::int64_t l2 = counts.window_len * counts.window_len;
    std::int64_t total = 0;
    for (const auto& e : edges) {
        const std::int64_t chi = counts.at(static_cast<std::size_t>(e[0]),
                                           static_cast<std::size_t>(e[1]));
        total += l2 - chi * chi;
    }
    return total;
}

std::int64_t scaled_tree_cost(const SignalTree& tree, const CoOccurrence& counts) {
    const std::int64_t l2 = counts.window_len * counts.window_len;
    std::int64_t total = 0;
    for (const auto& e : tree.edges) total += l2 - e.chi * e.chi;
    return total;
}

CoOccurrence naive_counts(const std::vector<std::uint8_t>& cells, std::size_t rows,
                          const std::vector<std::string>& names,
                          std::size_t n_signals, std::size_t n_assets) {
    const std::size_t k = n_signals + n_assets;
    if (cells.size() != rows * k) throw_parameter("cell buffer does not match shape");
    CoOccurrence c;
    c.names = names;
    c.n_signals = n_signals;
    c.n_assets = n_assets;
    c.window_len = static_cast<std::int64_t>(rows);
    c.counts.assign(k * k, 0);
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t i = 0; i < k; ++i) {
            if (!cells[t * k + i]) continue;
            for (std::size_t j = 0; j < k; ++j)
                if (cells[t * k + j]) ++c.at(i, j);
        }
    return c;
}

std::vector<std::uint8_t> random_cells(Rng& rng, std::size_t rows, std::size_t cols,
                                       double density) {
    std::vector<std::uint8_t> cells(rows * cols);
    for (auto& v : cells) v = rng.bernoulli(density) ? 1 : 0;
    return cells;
}

double graph_distance(const SignalTree& tree, std::uint32_t a, std::uint32_t b) {
    const std::size_t n = tree.size();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(n);
    for (const auto& e : tree.edges) {
        adj[e.a].push_back({e.b, e.weight});
        adj[e.b].push_back({e.a, e.weight});
    }
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[a] = 0.0;
    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    pq.push({0.0, a});
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : adj[u])
            if (d + w < dist[v]) {
                dist[v] = d + w;
                pq.push({dist[v], v});
            }
    }
    return dist[b];
}

std::uint32_t brute_force_choice(const SignalTree& tree,
                                 const std::vector<std::int64_t>& chi_row,
                                 std::int64_t short_window,
                                 const std::vector<std::uint32_t>& subtree_nodes,
                                 double* cost_out) {
    const std::size_t n = tree.size();
    if (chi_row.size() != n) throw_parameter("chi row does not match tree");
    if (subtree_nodes.empty()) throw_parameter("subtree must be non-empty");
    std::uint32_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    const double w2 = static_cast<double>(short_window) *
                      static_cast<double>(short_window);
    for (std::uint32_t a = 0; a < n; ++a) {
        const double chi = static_cast<double>(chi_row[a]);
        double cost = 1.0 - (chi * chi) / w2;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::uint32_t o : subtree_nodes)
            nearest = std::min(nearest, graph_distance(tree, a, o));
        cost += nearest;
        if (cost < best_cost ||
            (cost == best_cost && tree.nodes[a] < tree.nodes[best])) {
            best_cost = cost;
            best = a;
        }
    }
    if (cost_out) *cost_out = best_cost;
    return best;
}

double union_path_cost(const AttachedTree& at, const Neighborhood& peers,
                       double target_edge_weight, std::uint32_t attach_node) {
    const SignalTree& tree = *at.tree;
    const std::size_t n = tree.size();
    std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> adj(n);
    for (std::size_t k = 0; k < tree.edges.size(); ++k) {
        adj[tree.edges[k].a].push_back({tree.edges[k].b, k});
        adj[tree.edges[k].b].push_back({tree.edges[k].a, k});
    }
    // Unique tree path between two nodes by BFS parent tracking.
    auto path_edges = [&](std::uint32_t from, std::uint32_t to) {
        std::vector<std::int64_t> via(n, -1);
        std::vector<std::size_t> via_edge(n, 0);
        std::vector<bool> seen(n, false);
        std::queue<std::uint32_t> bfs;
        bfs.push(from);
        seen[from] = true;
        while (!bfs.empty()) {
            const std::uint32_t u = bfs.front();
            bfs.pop();
            if (u == to) break;
            for (const auto& [v, k] : adj[u])
                if (!seen[v]) {
                    seen[v] = true;
                    via[v] = u;
                    via_edge[v] = k;
                    bfs.push(v);
                }
        }
        std::set<std::size_t> edges;
        for (std::uint32_t u = to; u != from;
             u = static_cast<std::uint32_t>(via[u]))
            edges.insert(via_edge[u]);
        return edges;
    };

    std::set<std::size_t> visited;
    double leaf_edges = 0.0;
    for (std::uint32_t p : peers.members) {
        const auto& att = at.attachments[p];
        leaf_edges += att.weight;
        for (std::size_t k : path_edges(attach_node, att.signal)) visited.insert(k);
    }
    double total = target_edge_weight + leaf_edges;
    for (std::size_t k : visited) total += tree.edges[k].weight;
    return total;
}

double dijkstra_to_star(const ContractedGraph& g) {
    const std::size_t n = g.names.size();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(n);
    for (const auto& arc : g.arcs) {
        adj[arc.u].push_back({arc.v, arc.w});
        adj[arc.v].push_back({arc.u, arc.w});
    }
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[g.target] = 0.0;
    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    pq.push({0.0, g.target});
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : adj[u])
            if (d + w < dist[v]) {
                dist[v] = d + w;
                pq.push({dist[v], v});
            }
    }
    return dist[g.star];
}

std::vector<std::uint32_t> ancestors_by_matrix_power(const SignalTree& tree,
                                                     std::uint32_t node) {
    const std::size_t n = tree.size();
    // p[i][j] = 1 iff j is i's parent; powers shift the indicator up the chain.
    std::vector<std::vector<int>> p(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        if (tree.parent[i] >= 0) p[i][static_cast<std::size_t>(tree.parent[i])] = 1;
    std::vector<int> z(n, 0);
    z[node] = 1;
    std::vector<std::uint32_t> chain;
    for (std::size_t step = 0; step < n; ++step) {
        std::vector<int> next(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            if (z[i])
                for (std::size_t j = 0; j < n; ++j)
                    if (p[i][j]) next[j] = 1;
        bool any = false;
        for (std::size_t j = 0; j < n; ++j)
            if (next[j]) {
                chain.push_back(static_cast<std::uint32_t>(j));
                any = true;
            }
        if (!any) break;
        z = next;
    }
    return chain;
}

EigenPair dominant_eigen_2x2(const std::array<double, 4>& q) {
    const double a = q[0], b = q[1], c = q[3];
    const double tr = a + c;
    const double disc = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
    EigenPair out;
    out.value = (tr + disc) / 2.0;
    if (b != 0.0)
        out.vector = {b, out.value - a};
    else if (a >= c)
        out.vector = {1.0, 0.0};
    else
        out.vector = {0.0, 1.0};
    const double nv = std::sqrt(out.vector[0] * out.vector[0] +
                                out.vector[1] * out.vector[1]);
    out.vector[0] /= nv;
    out.vector[1] /= nv;
    return out;
}

EigenPair dominant_eigen_3x3(const std::array<double, 9>& q) {
    const double a11 = q[0], a12 = q[1], a13 = q[2];
    const double a22 = q[4], a23 = q[5], a33 = q[8];
    EigenPair out;
    const double off = a12 * a12 + a13 * a13 + a23 * a23;
    double l1;
    if (off == 0.0) {
        l1 = std::max({a11, a22, a33});
    } else {
        const double tr = (a11 + a22 + a33) / 3.0;
        const double p2 = (a11 - tr) * (a11 - tr) + (a22 - tr) * (a22 - tr) +
                          (a33 - tr) * (a33 - tr) + 2.0 * off;
        const double p = std::sqrt(p2 / 6.0);
        // det((A - tr I) / p) / 2, clamped into acos range
        const double b11 = (a11 - tr) / p, b22 = (a22 - tr) / p, b33 = (a33 - tr) / p;
        const double b12 = a12 / p, b13 = a13 / p, b23 = a23 / p;
        double r = (b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                    b13 * (b12 * b23 - b22 * b13)) /
                   2.0;
        r = std::clamp(r, -1.0, 1.0);
        const double phi = std::acos(r) / 3.0;
        l1 = tr + 2.0 * p * std::cos(phi);
    }
    out.value = l1;
    // Null direction of (A - l1 I) from the most robust row cross product.
    const std::array<std::array<double, 3>, 3> rows{{{a11 - l1, a12, a13},
                                                     {a12, a22 - l1, a23},
                                                     {a13, a23, a33 - l1}}};
    std::array<double, 3> best{0.0, 0.0, 0.0};
    double best_norm = -1.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const auto& u = rows[static_cast<std::size_t>(i)];
            const auto& v = rows[static_cast<std::size_t>(j)];
            const std::array<double, 3> cr{u[1] * v[2] - u[2] * v[1],
                                           u[2] * v[0] - u[0] * v[2],
                                           u[0] * v[1] - u[1] * v[0]};
            const double nn = cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2];
            if (nn > best_norm) {
                best_norm = nn;
                best = cr;
            }
        }
    if (best_norm <= 0.0) best = {1.0, 0.0, 0.0};  // repeated eigenvalue: any direction
    const double nv =
        std::sqrt(best[0] * best[0] + best[1] * best[1] + best[2] * best[2]);
    out.vector = {best[0] / nv, best[1] / nv, best[2] / nv};
    return out;
}

namespace {

bool same_decisions(const RebalanceRecord& a, const RebalanceRecord& b) {
    return a.row == b.row && a.adaptive == b.adaptive && a.greedy == b.greedy &&
           a.pos_adaptive == b.pos_adaptive && a.pos_greedy == b.pos_greedy &&
           a.prediction == b.prediction &&
           a.prediction_flagged == b.prediction_flagged &&
           a.chosen_cost == b.chosen_cost && a.chosen_chi == b.chosen_chi &&
           a.greedy_chi == b.greedy_chi && a.cost_vector == b.cost_vector &&
           a.alpha == b.alpha && a.subtree == b.subtree &&
           a.peer_attachments == b.peer_attachments;
}

}  // namespace

AuditResult no_lookahead_audit(const BinaryPanel& panel,
                               const std::vector<double>& target_returns,
                               std::shared_ptr<const SignalTree> tree,
                               const BacktestConfig& config) {
    AuditResult res;
    const BacktestLedger base = run_backtest(panel, target_returns, tree, config);
    for (std::size_t k = 0; k < base.rebalances.size(); ++k) {
        const std::int64_t cutoff = base.rebalances[k].row;
        BinaryPanel mutated = panel;
        std::vector<double> mreturns = target_returns;
        for (std::size_t t = 0; t < panel.rows(); ++t) {
            const std::int64_t row = static_cast<std::int64_t>(t);
            if (row > cutoff)
                for (std::size_t i = 0; i < panel.n_signals; ++i)
                    mutated.at(t, i) ^= 1;
            if (row >= cutoff) {
                for (std::size_t j = 0; j < panel.n_assets; ++j)
                    mutated.at(t, panel.n_signals + j) ^= 1;
                mreturns[t] = -mreturns[t] - 0.001;
            }
        }
        const BacktestLedger other = run_backtest(mutated, mreturns, tree, config);
        for (std::size_t j = 0; j <= k; ++j) {
            if (!same_decisions(base.rebalances[j], other.rebalances[j])) {
                std::ostringstream msg;
                msg << "decision at row " << base.rebalances[j].row
                    << " changed when data after row " << cutoff << " changed";
                res.ok = false;
                res.message = msg.str();
                return res;
            }
        }
    }
    res.message = "no look-ahead detected";
    return res;
}

}  // namespace peersel::verify
