#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "peersel/cooccur.hpp"
#include "peersel/sigtree.hpp"

namespace peersel {

// One asset leaf hung off the signal tree from short-run co-occurrence.
struct Attachment {
    std::uint32_t signal = 0;     // node index in the tree
    std::int64_t chi = 0;         // short-run co-occurrence count
    double weight = 1.0;          // 1 - (chi / W)^2
    bool uninformative = false;   // all-zero count row; placed at the
                                  // lexicographically smallest signal
};

struct AttachedTree {
    std::shared_ptr<const SignalTree> tree;
    std::vector<std::string> leaf_names;   // asset columns, panel order
    std::vector<Attachment> attachments;   // parallel to leaf_names
    std::int64_t short_window = 0;

    std::uint32_t leaf_index(const std::string& name) const;  // parameter error
};

// Greedy attachment of every asset to its highest-co-occurrence signal
// (ties to the lexicographically smaller signal name). `short_counts`
// must carry the tree's signals plus at least one asset, with matching
// signal names; only the asset-row/signal-column block is consulted, so
// the block-zeroing rule may or may not have been applied.
AttachedTree attach_leaves(std::shared_ptr<const SignalTree> tree,
                           const CoOccurrence& short_counts);

// Leaf-to-leaf distances through the tree:
// D[i][j] = w_i + tree_distance(a_i, a_j) + w_j, D[i][i] = 0.
std::vector<std::vector<double>> leaf_distances(const AttachedTree& at);

// How the peer set of a target is determined.
struct PeerSpec {
    enum class Mode { explicit_list, threshold };
    Mode mode = Mode::explicit_list;
    std::vector<std::string> peers;  // explicit mode; the target itself is
                                     // dropped if listed, per the invariant
    double theta = 0.0;              // threshold mode: strict cut on distance
    std::int64_t horizon_days = 0;   // 0 = instantaneous (latest distances
                                     // only); >0 sums distances over that
                                     // trailing span
};

struct Neighborhood {
    std::uint32_t target = 0;
    std::vector<std::uint32_t> members;  // leaf indices, never the target
    bool empty_flagged = false;          // threshold mode found nobody
};

// `d_history` holds leaf-distance matrices oldest-first, already limited
// to the spec's horizon by the caller (backtest keeps one per rebalance);
// threshold mode sums over all supplied matrices and requires at least
// one. Unknown peer names are configuration errors.
Neighborhood neighborhood(const std::vector<std::vector<std::vector<double>>>& d_history,
                          std::uint32_t target, const PeerSpec& spec,
                          const std::vector<std::string>& leaf_names);

enum class AlphaMode { lca, literal };

const char* to_string(AlphaMode mode);
AlphaMode alpha_mode_from_string(const std::string& s);

// Connected signal subtree spanned by the peers' attachment points:
// alpha is their deepest common ancestor and the subtree is the union of
// the paths from each attachment up to alpha (alpha included, anything
// strictly above excluded). literal mode forces alpha to the tree root,
// so the subtree takes every ancestor chain all the way up.
struct PeerSubtree {
    std::vector<std::uint32_t> nodes;        // ascending node indices
    std::uint32_t alpha = 0;
    std::vector<std::uint32_t> peer_attach;  // attachment node per member

    bool contains(std::uint32_t node) const;
};

PeerSubtree peer_subtree(const AttachedTree& at, const Neighborhood& peers,
                         AlphaMode mode = AlphaMode::lca);

// Tree with the peer subtree collapsed to a single node s*, plus a
// virtual target node wired to every signal at its candidate weight.
// Shortest target-to-s* distance equals the adaptive attachment cost.
struct ContractedGraph {
    struct Arc {
        std::uint32_t u = 0;
        std::uint32_t v = 0;
        double w = 0.0;
    };
    std::vector<std::string> names;       // surviving signals, then "s*", then target
    std::vector<std::uint32_t> node_map;  // signal index -> contracted index
    std::uint32_t star = 0;
    std::uint32_t target = 0;
    std::vector<Arc> arcs;
};

ContractedGraph contract(const SignalTree& tree, const PeerSubtree& o,
                         const std::vector<double>& candidate_weights,
                         const std::string& target_name);

// Adaptive attachment of the target: minimize
//   cost(a) = w_sr(a) + distance from a to the peer subtree
// over signals a, ties to the lexicographically smaller name. Falls back
// to the greedy choice when the peer set is empty or the target's count
// row is all zero (then flagged uninformative).
struct TargetAttachment {
    std::uint32_t chosen = 0;
    double chosen_weight = 1.0;        // w_sr of the chosen signal
    std::int64_t chosen_chi = 0;
    double chosen_cost = 0.0;
    std::uint32_t greedy = 0;          // benchmark argmax-chi attachment
    std::int64_t greedy_chi = 0;
    bool greedy_fallback = false;      // empty peers: adaptive = greedy
    bool uninformative = false;        // all-zero target row
    std::vector<double> cost;          // per-signal cost vector (empty on fallback)
    std::vector<std::uint32_t> path;   // chosen -> entry node of the subtree
    PeerSubtree subtree;               // empty nodes on fallback
};

TargetAttachment attach_target(const AttachedTree& at, std::uint32_t target_leaf,
                               const std::vector<std::int64_t>& target_chi_row,
                               const Neighborhood& peers,
                               AlphaMode mode = AlphaMode::lca);

}  // namespace peersel
