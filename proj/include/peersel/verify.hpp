#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "peersel/attach.hpp"
#include "peersel/backtest.hpp"
#include "peersel/cooccur.hpp"
#include "peersel/rng.hpp"
#include "peersel/sigtree.hpp"

// Independent oracles used by the test suites and the CLI selftest. These
// deliberately avoid the library's fast paths: counts are re-derived with
// naive loops, distances with Dijkstra over an adjacency list, optima by
// exhaustive enumeration, so agreement is meaningful.
namespace peersel::verify {

// Labeled spanning-tree enumeration via Prufer sequences (n^(n-2) trees).
std::vector<std::array<int, 2>> prufer_decode(const std::vector<int>& seq, int n);
void for_each_spanning_tree(
    int n, const std::function<void(const std::vector<std::array<int, 2>>&)>& fn);

// Exact integer tree cost: sum over edges of (L^2 - chi^2). Minimal over
// all spanning trees iff the summed squared co-occurrence is maximal.
std::int64_t scaled_tree_cost(const std::vector<std::array<int, 2>>& edges,
                              const CoOccurrence& counts);
std::int64_t scaled_tree_cost(const SignalTree& tree, const CoOccurrence& counts);

// Naive O(rows * k^2) co-occurrence counting over row-major cells.
CoOccurrence naive_counts(const std::vector<std::uint8_t>& cells, std::size_t rows,
                          const std::vector<std::string>& names,
                          std::size_t n_signals, std::size_t n_assets);

std::vector<std::uint8_t> random_cells(Rng& rng, std::size_t rows, std::size_t cols,
                                       double density);

// Path distance recomputed by Dijkstra over the tree's adjacency list.
double graph_distance(const SignalTree& tree, std::uint32_t a, std::uint32_t b);

// Exhaustive adaptive choice: argmin over signals of
// w_sr(a) + min over subtree nodes of graph_distance(a, o), ties to the
// lexicographically smaller name.
std::uint32_t brute_force_choice(const SignalTree& tree,
                                 const std::vector<std::int64_t>& chi_row,
                                 std::int64_t short_window,
                                 const std::vector<std::uint32_t>& subtree_nodes,
                                 double* cost_out = nullptr);

// Total weight of the distinct edges traversed when the target, attached
// at `attach_node` with edge weight w0, visits every peer leaf: w0 + the
// union of tree paths + each peer's leaf edge.
double union_path_cost(const AttachedTree& at, const Neighborhood& peers,
                       double target_edge_weight, std::uint32_t attach_node);

// Shortest target-to-s* distance in the contracted graph.
double dijkstra_to_star(const ContractedGraph& g);

// Ancestor chain recovered by powers of the child->parent 0/1 matrix.
std::vector<std::uint32_t> ancestors_by_matrix_power(const SignalTree& tree,
                                                     std::uint32_t node);

// Dominant eigenpair of small symmetric matrices from the characteristic
// polynomial (closed form), for cross-checking the power iteration.
struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;
};
EigenPair dominant_eigen_2x2(const std::array<double, 4>& q);
EigenPair dominant_eigen_3x3(const std::array<double, 9>& q);

// Re-runs the backtest with every row after each rebalance rewritten
// (future signal rows flipped, asset cells and returns from the decision
// row on flipped) and checks that all decisions up to that rebalance are
// unchanged.
struct AuditResult {
    bool ok = true;
    std::string message;
};
AuditResult no_lookahead_audit(const BinaryPanel& panel,
                               const std::vector<double>& target_returns,
                               std::shared_ptr<const SignalTree> tree,
                               const BacktestConfig& config);

}  // namespace peersel::verify
