#include "peersel/attach.hpp"

#include <algorithm>
#include <limits>

#include "peersel/errors.hpp"

namespace peersel {

std::uint32_t AttachedTree::leaf_index(const std::string& name) const {
    for (std::size_t i = 0; i < leaf_names.size(); ++i)
        if (leaf_names[i] == name) return static_cast<std::uint32_t>(i);
    throw_parameter("unknown leaf '" + name + "'");
}

AttachedTree attach_leaves(std::shared_ptr<const SignalTree> tree,
                           const CoOccurrence& short_counts) {
    if (!tree) throw_parameter("attach_leaves: null tree");
    const std::size_t n = tree->size();
    if (short_counts.n_signals != n)
        throw_parameter("short-run matrix signal count does not match tree");
    for (std::size_t i = 0; i < n; ++i)
        if (short_counts.names[i] != tree->nodes[i])
            throw_parameter("short-run matrix signals do not match tree nodes");
    if (short_counts.n_assets == 0)
        throw_parameter("short-run matrix carries no asset rows");

    // Lexicographically smallest signal hosts uninformative leaves.
    std::size_t fallback = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (tree->nodes[i] < tree->nodes[fallback]) fallback = i;

    AttachedTree at;
    at.tree = std::move(tree);
    at.short_window = short_counts.window_len;
    for (std::size_t j = 0; j < short_counts.n_assets; ++j) {
        const std::size_t row = n + j;
        at.leaf_names.push_back(short_counts.names[row]);
        Attachment a;
        std::int64_t best = -1;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t c = short_counts.at(row, i);
            if (c > best ||
                (c == best && at.tree->nodes[i] < at.tree->nodes[arg])) {
                best = c;
                arg = i;
            }
        }
        if (best == 0) {
            a.signal = static_cast<std::uint32_t>(fallback);
            a.chi = 0;
            a.weight = 1.0;
            a.uninformative = true;
        } else {
            a.signal = static_cast<std::uint32_t>(arg);
            a.chi = best;
            a.weight = dissimilarity_weight(best, short_counts.window_len);
        }
        at.attachments.push_back(a);
    }
    return at;
}

std::vector<std::vector<double>> leaf_distances(const AttachedTree& at) {
    const std::size_t m = at.leaf_names.size();
    std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = at.attachments[i].weight +
                             tree_distance(*at.tree, at.attachments[i].signal,
                                           at.attachments[j].signal) +
                             at.attachments[j].weight;
            d[i][j] = v;
            d[j][i] = v;
        }
    return d;
}

Neighborhood neighborhood(const std::vector<std::vector<std::vector<double>>>& d_history,
                          std::uint32_t target, const PeerSpec& spec,
                          const std::vector<std::string>& leaf_names) {
    if (target >= leaf_names.size())
        throw_parameter("target leaf index out of range");
    Neighborhood nb;
    nb.target = target;
    if (spec.mode == PeerSpec::Mode::explicit_list) {
        for (const auto& name : spec.peers) {
            std::size_t idx = leaf_names.size();
            for (std::size_t i = 0; i < leaf_names.size(); ++i)
                if (leaf_names[i] == name) {
                    idx = i;
                    break;
                }
            if (idx == leaf_names.size())
                throw_config("peer '" + name + "' is not an asset column");
            if (idx == target) continue;  // a group may list its own target
            nb.members.push_back(static_cast<std::uint32_t>(idx));
        }
        std::sort(nb.members.begin(), nb.members.end());
        nb.members.erase(std::unique(nb.members.begin(), nb.members.end()),
                         nb.members.end());
        nb.empty_flagged = nb.members.empty();
        return nb;
    }
    if (d_history.empty())
        throw_parameter("threshold neighborhood needs at least one distance matrix");
    const std::size_t m = leaf_names.size();
    for (const auto& d : d_history)
        if (d.size() != m)
            throw_parameter("distance matrix size does not match leaf count");
    for (std::size_t j = 0; j < m; ++j) {
        if (j == target) continue;
        double score = 0.0;
        for (const auto& d : d_history) score += d[target][j];
        if (score < spec.theta)
            nb.members.push_back(static_cast<std::uint32_t>(j));
    }
    nb.empty_flagged = nb.members.empty();
    return nb;
}

const char* to_string(AlphaMode mode) {
    return mode == AlphaMode::lca ? "lca" : "literal";
}

AlphaMode alpha_mode_from_string(const std::string& s) {
    if (s == "lca") return AlphaMode::lca;
    if (s == "literal") return AlphaMode::literal;
    throw_parameter("unknown alpha mode '" + s + "' (expected lca or literal)");
}

bool PeerSubtree::contains(std::uint32_t node) const {
    return std::binary_search(nodes.begin(), nodes.end(), node);
}

PeerSubtree peer_subtree(const AttachedTree& at, const Neighborhood& peers,
                         AlphaMode mode) {
    if (peers.members.empty())
        throw_parameter("peer subtree requires a non-empty peer set");
    const SignalTree& tree = *at.tree;

    PeerSubtree o;
    for (std::uint32_t j : peers.members) {
        if (j >= at.attachments.size())
            throw_parameter("peer leaf index out of range");
        o.peer_attach.push_back(at.attachments[j].signal);
    }

    if (mode == AlphaMode::literal) {
        o.alpha = tree.root;
    } else {
        std::uint32_t alpha = o.peer_attach.front();
        for (std::size_t k = 1; k < o.peer_attach.size(); ++k)
            alpha = lowest_common_ancestor(tree, alpha, o.peer_attach[k]);
        o.alpha = alpha;
    }

    // Union of the paths from each attachment point up to alpha.
    std::vector<bool> in(tree.size(), false);
    in[o.alpha] = true;
    for (std::uint32_t a : o.peer_attach) {
        std::uint32_t u = a;
        while (u != o.alpha && !in[u]) {
            in[u] = true;
            u = static_cast<std::uint32_t>(tree.parent[u]);
        }
    }
    for (std::uint32_t i = 0; i < tree.size(); ++i)
        if (in[i]) o.nodes.push_back(i);
    return o;
}

ContractedGraph contract(const SignalTree& tree, const PeerSubtree& o,
                         const std::vector<double>& candidate_weights,
                         const std::string& target_name) {
    if (o.nodes.empty()) throw_parameter("cannot contract an empty subtree");
    if (candidate_weights.size() != tree.size())
        throw_parameter("candidate weight vector does not match tree size");

    ContractedGraph g;
    g.node_map.assign(tree.size(), 0);
    for (std::uint32_t i = 0; i < tree.size(); ++i) {
        if (o.contains(i)) continue;
        g.node_map[i] = static_cast<std::uint32_t>(g.names.size());
        g.names.push_back(tree.nodes[i]);
    }
    g.star = static_cast<std::uint32_t>(g.names.size());
    g.names.push_back("s*");
    for (std::uint32_t i = 0; i < tree.size(); ++i)
        if (o.contains(i)) g.node_map[i] = g.star;
    g.target = static_cast<std::uint32_t>(g.names.size());
    g.names.push_back(target_name);

    for (const auto& e : tree.edges) {
        const std::uint32_t u = g.node_map[e.a];
        const std::uint32_t v = g.node_map[e.b];
        if (u == v) continue;  // interior edge of the contracted subtree
        g.arcs.push_back({u, v, e.weight});
    }
    for (std::uint32_t i = 0; i < tree.size(); ++i)
        g.arcs.push_back({g.target, g.node_map[i], candidate_weights[i]});
    return g;
}

TargetAttachment attach_target(const AttachedTree& at, std::uint32_t target_leaf,
                               const std::vector<std::int64_t>& target_chi_row,
                               const Neighborhood& peers, AlphaMode mode) {
    const SignalTree& tree = *at.tree;
    const std::size_t n = tree.size();
    if (target_leaf >= at.leaf_names.size())
        throw_parameter("target leaf index out of range");
    if (target_chi_row.size() != n)
        throw_parameter("target count row does not match tree size");
    for (std::uint32_t j : peers.members)
        if (j == target_leaf)
            throw_parameter("target cannot be its own peer");

    TargetAttachment ta;

    // Greedy benchmark: argmax count, ties to the smaller name.
    std::size_t g = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (target_chi_row[i] > target_chi_row[g] ||
            (target_chi_row[i] == target_chi_row[g] && tree.nodes[i] < tree.nodes[g]))
            g = i;
    }
    ta.greedy = static_cast<std::uint32_t>(g);
    ta.greedy_chi = target_chi_row[g];

    ta.uninformative = (ta.greedy_chi == 0);
    if (ta.uninformative) {
        // All-zero row: nothing to minimize; sit at the smallest name.
        std::size_t lex = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (tree.nodes[i] < tree.nodes[lex]) lex = i;
        ta.greedy = static_cast<std::uint32_t>(lex);
        ta.greedy_chi = 0;
    }

    if (peers.members.empty() || ta.uninformative) {
        ta.greedy_fallback = true;
        ta.chosen = ta.greedy;
        ta.chosen_chi = target_chi_row[ta.chosen];
        ta.chosen_weight = ta.uninformative
                               ? 1.0
                               : dissimilarity_weight(ta.chosen_chi, at.short_window);
        ta.chosen_cost = ta.chosen_weight;
        return ta;
    }

    ta.subtree = peer_subtree(at, peers, mode);

    // Distance from each signal to the subtree (zero inside it). The
    // subtree is connected, so the minimum over members is attained at
    // the unique entry point of the tree path.
    std::vector<double> dist(n, 0.0);
    std::vector<std::uint32_t> entry(n, 0);
    for (std::uint32_t a = 0; a < n; ++a) {
        if (ta.subtree.contains(a)) {
            entry[a] = a;
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = ta.subtree.nodes.front();
        for (std::uint32_t o : ta.subtree.nodes) {
            const double d = tree_distance(tree, a, o);
            if (d < best) {
                best = d;
                arg = o;
            }
        }
        dist[a] = best;
        entry[a] = arg;
    }

    ta.cost.resize(n);
    std::size_t arg = 0;
    for (std::size_t a = 0; a < n; ++a) {
        ta.cost[a] =
            dissimilarity_weight(target_chi_row[a], at.short_window) + dist[a];
        if (a > 0 && (ta.cost[a] < ta.cost[arg] ||
                      (ta.cost[a] == ta.cost[arg] && tree.nodes[a] < tree.nodes[arg])))
            arg = a;
    }
    ta.chosen = static_cast<std::uint32_t>(arg);
    ta.chosen_chi = target_chi_row[arg];
    ta.chosen_weight = dissimilarity_weight(ta.chosen_chi, at.short_window);
    ta.chosen_cost = ta.cost[arg];

    // Tree path from the chosen signal to its subtree entry point.
    const std::uint32_t meet =
        lowest_common_ancestor(tree, ta.chosen, entry[ta.chosen]);
    std::vector<std::uint32_t> down;
    for (std::uint32_t u = ta.chosen; u != meet;
         u = static_cast<std::uint32_t>(tree.parent[u]))
        ta.path.push_back(u);
    ta.path.push_back(meet);
    for (std::uint32_t u = entry[ta.chosen]; u != meet;
         u = static_cast<std::uint32_t>(tree.parent[u]))
        down.push_back(u);
    for (auto it = down.rbegin(); it != down.rend(); ++it) ta.path.push_back(*it);
    return ta;
}

}  // namespace peersel
