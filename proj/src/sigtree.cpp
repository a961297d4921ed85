#include "peersel/sigtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "peersel/errors.hpp"
#include "peersel/io.hpp"
#include "peersel/rng.hpp"

namespace peersel {

std::uint32_t SignalTree::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == name) return static_cast<std::uint32_t>(i);
    throw_parameter("unknown node '" + name + "'");
}

SignalTree build_mst(const CoOccurrence& counts) {
    if (counts.n_assets != 0)
        throw_parameter("spanning tree requires a signals-only co-occurrence matrix");
    const std::size_t n = counts.n_signals;
    if (n < 2) throw_parameter("spanning tree needs at least two signals");

    SignalTree tree;
    tree.nodes = counts.names;
    tree.window_len = counts.window_len;

    // Seed at the lexicographically smallest name so the insertion order
    // (and therefore any tie resolution) is independent of input order.
    std::size_t seed = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (tree.nodes[i] < tree.nodes[seed]) seed = i;

    std::vector<bool> in_tree(n, false);
    in_tree[seed] = true;

    for (std::size_t step = 1; step < n; ++step) {
        double best_w = std::numeric_limits<double>::infinity();
        std::size_t best_u = 0, best_v = 0;
        const std::string* best_lo = nullptr;
        const std::string* best_hi = nullptr;
        for (std::size_t u = 0; u < n; ++u) {
            if (!in_tree[u]) continue;
            for (std::size_t v = 0; v < n; ++v) {
                if (in_tree[v]) continue;
                const double w = dissimilarity_weight(counts.at(u, v), counts.window_len);
                if (w > best_w) continue;
                const std::string& lo = std::min(tree.nodes[u], tree.nodes[v]);
                const std::string& hi = std::max(tree.nodes[u], tree.nodes[v]);
                if (w < best_w || std::tie(lo, hi) < std::tie(*best_lo, *best_hi)) {
                    best_w = w;
                    best_u = u;
                    best_v = v;
                    best_lo = &lo;
                    best_hi = &hi;
                }
            }
        }
        SignalTree::Edge e;
        e.a = static_cast<std::uint32_t>(best_u);
        e.b = static_cast<std::uint32_t>(best_v);
        e.chi = counts.at(best_u, best_v);
        e.weight = best_w;
        e.bridge = (e.chi == 0);
        if (e.bridge)
            tree.warnings.push_back("bridge edge " + tree.nodes[best_u] + "-" +
                                    tree.nodes[best_v] +
                                    " has zero co-occurrence; components are "
                                    "joined arbitrarily");
        tree.edges.push_back(e);
        in_tree[best_v] = true;
    }

    order_by_column_sums(tree, counts);
    return tree;
}

void order_by_column_sums(SignalTree& tree, const CoOccurrence& counts) {
    const std::size_t n = tree.nodes.size();
    if (counts.n_signals != n || counts.n_assets != 0)
        throw_parameter("co-occurrence matrix does not match tree nodes");

    tree.degree_key.assign(n, 0);
    for (const auto& e : tree.edges) {
        ++tree.degree_key[e.a];
        ++tree.degree_key[e.b];
    }
    tree.colsum_key.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t s = 0;
        for (std::size_t j = 0; j < n; ++j) s += counts.at(j, i);
        tree.colsum_key[i] = s;
    }

    // Root = most connected node: highest tree degree, then highest column
    // sum, then lexicographically smallest name.
    std::size_t root = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (tree.degree_key[i] != tree.degree_key[root]) {
            if (tree.degree_key[i] > tree.degree_key[root]) root = i;
        } else if (tree.colsum_key[i] != tree.colsum_key[root]) {
            if (tree.colsum_key[i] > tree.colsum_key[root]) root = i;
        } else if (tree.nodes[i] < tree.nodes[root]) {
            root = i;
        }
    }
    tree.root = static_cast<std::uint32_t>(root);

    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t k = 0; k < tree.edges.size(); ++k) {
        adj[tree.edges[k].a].push_back(k);
        adj[tree.edges[k].b].push_back(k);
    }

    tree.parent.assign(n, -1);
    tree.parent_weight.assign(n, 0.0);
    tree.parent_chi.assign(n, 0);
    tree.depth.assign(n, 0);

    std::vector<std::size_t> stack{root};
    std::vector<bool> seen(n, false);
    seen[root] = true;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t k : adj[u]) {
            const auto& e = tree.edges[k];
            const std::size_t v = (e.a == u) ? e.b : e.a;
            if (seen[v]) continue;
            seen[v] = true;
            ++visited;
            tree.parent[v] = static_cast<std::int32_t>(u);
            tree.parent_weight[v] = e.weight;
            tree.parent_chi[v] = e.chi;
            tree.depth[v] = tree.depth[u] + 1;
            stack.push_back(v);
        }
    }
    if (visited != n)
        throw_data("edge set does not span all nodes");
}

std::vector<std::uint32_t> ancestors(const SignalTree& tree, std::uint32_t node) {
    if (node >= tree.size()) throw_parameter("node index out of range");
    std::vector<std::uint32_t> chain;
    std::int32_t p = tree.parent[node];
    while (p >= 0) {
        chain.push_back(static_cast<std::uint32_t>(p));
        p = tree.parent[static_cast<std::size_t>(p)];
    }
    return chain;
}

std::uint32_t lowest_common_ancestor(const SignalTree& tree,
                                     std::uint32_t a, std::uint32_t b) {
    if (a >= tree.size() || b >= tree.size())
        throw_parameter("node index out of range");
    while (tree.depth[a] > tree.depth[b]) a = static_cast<std::uint32_t>(tree.parent[a]);
    while (tree.depth[b] > tree.depth[a]) b = static_cast<std::uint32_t>(tree.parent[b]);
    while (a != b) {
        a = static_cast<std::uint32_t>(tree.parent[a]);
        b = static_cast<std::uint32_t>(tree.parent[b]);
    }
    return a;
}

double tree_distance(const SignalTree& tree, std::uint32_t a, std::uint32_t b) {
    const std::uint32_t meet = lowest_common_ancestor(tree, a, b);
    double d = 0.0;
    for (std::uint32_t u = a; u != meet; u = static_cast<std::uint32_t>(tree.parent[u]))
        d += tree.parent_weight[u];
    for (std::uint32_t u = b; u != meet; u = static_cast<std::uint32_t>(tree.parent[u]))
        d += tree.parent_weight[u];
    return d;
}

namespace {

double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

std::vector<double> mat_vec(const std::vector<double>& q, std::size_t c,
                            const std::vector<double>& x) {
    std::vector<double> y(c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += q[i * c + j] * x[j];
        y[i] = s;
    }
    return y;
}

}  // namespace

ParentDominanceReport verify_parent_dominance(const CoOccurrence& counts,
                                              const SignalTree& tree,
                                              std::uint32_t parent,
                                              std::uint64_t seed,
                                              int samples) {
    if (parent >= tree.size()) throw_parameter("node index out of range");
    if (counts.n_signals != tree.size() || counts.n_assets != 0)
        throw_parameter("co-occurrence matrix does not match tree nodes");

    ParentDominanceReport rep;
    for (std::uint32_t i = 0; i < tree.size(); ++i)
        if (tree.parent[i] == static_cast<std::int32_t>(parent))
            rep.children.push_back(i);
    const std::size_t c = rep.children.size();
    if (c < 2)
        throw_parameter("parent '" + tree.nodes[parent] +
                        "' has fewer than two children");

    // Sum of squared co-occurrences against the sibling group, for the
    // parent and for every signal outside the group.
    auto chi2_sum = [&](std::uint32_t q) {
        double s = 0.0;
        for (std::uint32_t ch : rep.children) {
            const double x = static_cast<double>(counts.at(q, ch));
            s += x * x;
        }
        return s;
    };
    rep.parent_chi2_sum = chi2_sum(parent);
    rep.competitor_chi2_sum = -1.0;
    for (std::uint32_t q = 0; q < tree.size(); ++q) {
        if (q == parent) continue;
        if (std::find(rep.children.begin(), rep.children.end(), q) !=
            rep.children.end())
            continue;
        const double s = chi2_sum(q);
        if (s > rep.competitor_chi2_sum) {
            rep.competitor_chi2_sum = s;
            rep.best_competitor = tree.nodes[q];
        }
    }
    rep.chi2_sum_maximal = (rep.competitor_chi2_sum < 0.0) ||
                           (rep.parent_chi2_sum >= rep.competitor_chi2_sum);
    if (rep.competitor_chi2_sum < 0.0) rep.competitor_chi2_sum = 0.0;

    // Children-block principal direction by power iteration. The block is
    // nonnegative and the start vector strictly positive, so the iterates
    // stay nonnegative and settle on the Perron direction.
    std::vector<double> q(c * c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            q[i * c + j] = static_cast<double>(
                counts.at(rep.children[i], rep.children[j]));

    std::vector<double> v(c, 1.0 / std::sqrt(static_cast<double>(c)));
    const double tol = 1e-10;
    const int cap = 10000;
    bool converged = false;
    for (int it = 1; it <= cap; ++it) {
        std::vector<double> y = mat_vec(q, c, v);
        const double ny = norm2(y);
        rep.iterations = it;
        if (ny == 0.0) {  // zero block: every direction is principal
            converged = true;
            break;
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            y[i] /= ny;
            delta = std::max(delta, std::abs(y[i] - v[i]));
        }
        v.swap(y);
        if (delta < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "power iteration did not converge after " << cap << " iterations";
        throw_numeric(msg.str());
    }
    rep.principal = v;
    std::vector<double> qv = mat_vec(q, c, v);
    rep.spectral_norm = norm2(qv);
    double rsq = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        const double d = qv[i] - rep.spectral_norm * v[i];
        rsq += d * d;
    }
    rep.residual = std::sqrt(rsq) / std::max(rep.spectral_norm, 1.0);

    // Random unit vectors must not beat the principal direction in the
    // induced norm (tiny slack absorbs rounding in the norm evaluations).
    Rng rng(seed);
    rep.sampled_dominance = true;
    const double slack = 1e-8 * std::max(1.0, rep.spectral_norm);
    for (int s = 0; s < samples; ++s) {
        std::vector<double> x(c);
        double nx = 0.0;
        while (nx == 0.0) {
            for (std::size_t i = 0; i < c; ++i) x[i] = rng.normal();
            nx = norm2(x);
        }
        for (std::size_t i = 0; i < c; ++i) x[i] /= nx;
        const double nqx = norm2(mat_vec(q, c, x));
        ++rep.samples_tested;
        if (nqx > rep.spectral_norm + slack) {
            rep.sampled_dominance = false;
            break;
        }
    }
    return rep;
}

std::string tree_to_json(const SignalTree& tree) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["nodes"] = tree.nodes;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : tree.edges) {
        nlohmann::json je;
        je["a"] = tree.nodes[e.a];
        je["b"] = tree.nodes[e.b];
        je["chi"] = e.chi;
        je["weight"] = e.weight;
        je["bridge"] = e.bridge;
        edges.push_back(je);
    }
    j["edges"] = edges;
    j["root"] = tree.nodes[tree.root];
    nlohmann::json pm = nlohmann::json::object();
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (tree.parent[i] >= 0)
            pm[tree.nodes[i]] = tree.nodes[static_cast<std::size_t>(tree.parent[i])];
    j["parent_map"] = pm;
    nlohmann::json manifest;
    manifest["window_len"] = tree.window_len;
    manifest["ordering"] = "degree,colsum,name";
    manifest["degree_key"] = tree.degree_key;
    manifest["colsum_key"] = tree.colsum_key;
    manifest["warnings"] = tree.warnings;
    j["manifest"] = manifest;
    return j.dump(2) + "\n";
}

SignalTree tree_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid tree JSON: ") + e.what());
    }
    for (const auto& key : {"format_version", "nodes", "edges", "root",
                            "parent_map", "manifest"})
        if (!j.contains(key))
            throw_data(std::string("tree JSON missing key '") + key + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::vector<std::string> known{
            "format_version", "nodes", "edges", "root", "parent_map", "manifest"};
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw_data("tree JSON has unknown key '" + it.key() + "'");
    }
    if (j["format_version"].get<int>() != 1)
        throw_data("unsupported tree format_version");

    SignalTree tree;
    tree.nodes = j["nodes"].get<std::vector<std::string>>();
    const std::size_t n = tree.nodes.size();
    if (n < 2) throw_data("tree JSON has fewer than two nodes");
    std::map<std::string, std::uint32_t> index;
    for (std::size_t i = 0; i < n; ++i)
        index[tree.nodes[i]] = static_cast<std::uint32_t>(i);
    if (index.size() != n) throw_data("tree JSON has duplicate node names");

    auto lookup = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end())
            throw_data("tree JSON references unknown node '" + name + "'");
        return it->second;
    };

    for (const auto& je : j["edges"]) {
        SignalTree::Edge e;
        e.a = lookup(je.at("a").get<std::string>());
        e.b = lookup(je.at("b").get<std::string>());
        e.chi = je.at("chi").get<std::int64_t>();
        e.weight = je.at("weight").get<double>();
        e.bridge = je.at("bridge").get<bool>();
        tree.edges.push_back(e);
    }
    if (tree.edges.size() + 1 != n)
        throw_data("tree JSON edge count does not match node count");

    const auto& manifest = j["manifest"];
    tree.window_len = manifest.at("window_len").get<std::int64_t>();
    tree.degree_key = manifest.at("degree_key").get<std::vector<std::uint32_t>>();
    tree.colsum_key = manifest.at("colsum_key").get<std::vector<std::int64_t>>();
    tree.warnings = manifest.at("warnings").get<std::vector<std::string>>();
    if (tree.degree_key.size() != n || tree.colsum_key.size() != n)
        throw_data("tree JSON ordering keys do not match node count");

    tree.root = lookup(j["root"].get<std::string>());
    tree.parent.assign(n, -1);
    tree.parent_weight.assign(n, 0.0);
    tree.parent_chi.assign(n, 0);
    tree.depth.assign(n, 0);

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> edge_at;
    for (std::size_t k = 0; k < tree.edges.size(); ++k) {
        const auto& e = tree.edges[k];
        edge_at[{std::min(e.a, e.b), std::max(e.a, e.b)}] = k;
    }
    for (auto it = j["parent_map"].begin(); it != j["parent_map"].end(); ++it) {
        const std::uint32_t child = lookup(it.key());
        const std::uint32_t par = lookup(it.value().get<std::string>());
        auto eit = edge_at.find({std::min(child, par), std::max(child, par)});
        if (eit == edge_at.end())
            throw_data("parent_map entry has no matching edge");
        tree.parent[child] = static_cast<std::int32_t>(par);
        tree.parent_weight[child] = tree.edges[eit->second].weight;
        tree.parent_chi[child] = tree.edges[eit->second].chi;
    }
    if (tree.parent[tree.root] != -1)
        throw_data("root must not appear in parent_map");
    std::size_t orphans = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (tree.parent[i] < 0) ++orphans;
    if (orphans != 1) throw_data("parent_map must cover every non-root node");

    // Depths by walking each chain; guard against cycles.
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t d = 0;
        std::uint32_t u = static_cast<std::uint32_t>(i);
        while (tree.parent[u] >= 0) {
            u = static_cast<std::uint32_t>(tree.parent[u]);
            if (++d > n) throw_data("parent_map contains a cycle");
        }
        tree.depth[i] = d;
    }
    return tree;
}

std::string tree_edges_csv(const SignalTree& tree) {
    std::ostringstream out;
    out << "a,b,chi,weight,bridge\n";
    for (const auto& e : tree.edges)
        out << tree.nodes[e.a] << ',' << tree.nodes[e.b] << ',' << e.chi << ','
            << format_double(e.weight) << ',' << (e.bridge ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace peersel
