#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peersel/cooccur.hpp"

namespace peersel {

// Spanning tree over the signal universe, built from long-run co-occurrence
// counts and oriented so that every edge points from a "more connected"
// node (parent) to a less connected one (child).
struct SignalTree {
    struct Edge {
        std::uint32_t a = 0;  // node indices into `nodes`
        std::uint32_t b = 0;
        std::int64_t chi = 0;    // co-occurrence count behind this edge
        double weight = 0.0;     // 1 - (chi / window_len)^2
        bool bridge = false;     // chi == 0: links disconnected components
    };

    std::vector<std::string> nodes;
    std::vector<Edge> edges;  // n - 1 edges, in Prim insertion order

    // Orientation (filled by order_by_column_sums).
    std::uint32_t root = 0;
    std::vector<std::int32_t> parent;     // -1 for root
    std::vector<double> parent_weight;    // weight of edge to parent (0 for root)
    std::vector<std::int64_t> parent_chi; // chi of edge to parent (0 for root)
    std::vector<std::uint32_t> depth;     // root has depth 0

    // Ordering keys recorded for the manifest.
    std::vector<std::uint32_t> degree_key;
    std::vector<std::int64_t> colsum_key;

    std::int64_t window_len = 0;
    std::vector<std::string> warnings;

    std::size_t size() const { return nodes.size(); }
    std::uint32_t index_of(const std::string& name) const;  // parameter error if absent
};

// Maximum-chi spanning tree via Prim's algorithm on edge weights
// w = 1 - (chi/L)^2 (minimising w maximises chi^2). Deterministic:
// the seed node is the lexicographically smallest name and ties are
// broken by (weight, lexicographically ordered name pair). Zero-count
// edges are admitted but flagged as bridges with a warning.
// `counts` must be a signals-only matrix (n_assets == 0, n >= 2).
SignalTree build_mst(const CoOccurrence& counts);

// Root the tree at the node with the greatest connectivity — ordered by
// (tree degree, column sum of counts, lexicographically smaller name) —
// and orient all edges away from it. Idempotent: the result depends only
// on the edge set and the counts.
void order_by_column_sums(SignalTree& tree, const CoOccurrence& counts);

// Ancestor chain of `node`, nearest parent first, ending at the root.
// Empty for the root itself.
std::vector<std::uint32_t> ancestors(const SignalTree& tree, std::uint32_t node);

// Deepest common ancestor of a and b (possibly a or b itself).
std::uint32_t lowest_common_ancestor(const SignalTree& tree,
                                     std::uint32_t a, std::uint32_t b);

// Sum of edge weights along the unique tree path between a and b.
double tree_distance(const SignalTree& tree, std::uint32_t a, std::uint32_t b);

// Diagnostic report for the "parent tracks its children" property: the
// parent's squared co-occurrence sum against a sibling group should beat
// any other signal's, and the children-block principal direction should
// dominate random unit vectors in the induced norm.
struct ParentDominanceReport {
    std::vector<std::uint32_t> children;
    bool chi2_sum_maximal = false;      // parent beats every outside competitor
    std::string best_competitor;        // strongest outside node (empty if none)
    double parent_chi2_sum = 0.0;
    double competitor_chi2_sum = 0.0;
    std::vector<double> principal;      // dominant eigenvector of children block
    double spectral_norm = 0.0;         // ||Q v||_2 at convergence
    double residual = 0.0;              // ||Qv - lambda v|| / max(lambda, 1)
    int iterations = 0;
    int samples_tested = 0;
    bool sampled_dominance = false;     // ||Qv|| >= ||Qx|| for all sampled x
};

// `parent` must have at least two children in the oriented tree; the
// power iteration starts from the uniform vector, tolerance 1e-10,
// iteration cap 10000 (numeric error beyond that, reporting the count).
ParentDominanceReport verify_parent_dominance(const CoOccurrence& counts,
                                              const SignalTree& tree,
                                              std::uint32_t parent,
                                              std::uint64_t seed,
                                              int samples = 100);

// Serialization. JSON carries nodes, edges, the parent map, the root and
// a manifest (window length, ordering keys, warnings); keys are emitted
// in sorted order so output is reproducible byte-for-byte.
std::string tree_to_json(const SignalTree& tree);
SignalTree tree_from_json(const std::string& text);
std::string tree_edges_csv(const SignalTree& tree);

}  // namespace peersel
