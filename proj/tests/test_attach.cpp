#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "peersel/attach.hpp"
#include "peersel/cooccur.hpp"
#include "peersel/rng.hpp"
#include "peersel/sigtree.hpp"
#include "peersel/verify.hpp"
#include "test_support.hpp"

using namespace peersel;
using testsup::error_category;
using testsup::make_counts;
using testsup::mixed_names;
using testsup::signal_names;
using doctest::Approx;

namespace {

std::shared_ptr<const SignalTree> make_tree(const CoOccurrence& counts) {
    return std::make_shared<SignalTree>(build_mst(counts));
}

// Chain _S00 - _S01 - _S02 - _S03 with every edge chi = 8 over window 16
// (weight 0.75 each), rooted at _S01 by the colsum/name tie rules.
CoOccurrence chain_long_counts() {
    return make_counts(signal_names(4), 4, 16,
                       {{0, 1, 8}, {1, 2, 8}, {2, 3, 8}});
}

// Short counts over window 16 for three assets against that chain:
//   xA00, xA01 attach at _S03 (chi 9); xA02 is the target whose raw
//   maximum sits at the far end _S00.
CoOccurrence chain_short_counts() {
    CoOccurrence c = make_counts(mixed_names(4, 3), 4, 16, {});
    auto set_row = [&](std::size_t asset, std::vector<std::int64_t> row) {
        for (std::size_t s = 0; s < 4; ++s) {
            c.at(4 + asset, s) = row[s];
            c.at(s, 4 + asset) = row[s];
        }
    };
    set_row(0, {0, 0, 0, 9});
    set_row(1, {0, 0, 0, 9});
    set_row(2, {9, 0, 0, 6});
    return apply_block_rules(c);
}

Neighborhood explicit_peers(const AttachedTree& at, std::uint32_t target,
                            std::vector<std::string> names) {
    PeerSpec spec;
    spec.mode = PeerSpec::Mode::explicit_list;
    spec.peers = std::move(names);
    return neighborhood({}, target, spec, at.leaf_names);
}

}  // namespace

TEST_CASE("attach_leaves: argmax with lexicographic ties and exact weights") {
    auto tree = make_tree(make_counts(signal_names(3), 3, 64,
                                      {{0, 1, 40}, {0, 2, 35}}));
    CoOccurrence shortc = make_counts(mixed_names(3, 1), 3, 16, {});
    // Tie row [3, 3, 1]: the lexicographically first of the argmax set wins.
    shortc.at(3, 0) = shortc.at(0, 3) = 3;
    shortc.at(3, 1) = shortc.at(1, 3) = 3;
    shortc.at(3, 2) = shortc.at(2, 3) = 1;
    AttachedTree at = attach_leaves(tree, shortc);
    REQUIRE(at.leaf_names == std::vector<std::string>{"xA00"});
    CHECK(tree->nodes[at.attachments[0].signal] == "_S00");
    CHECK(at.attachments[0].chi == 3);
    CHECK(at.attachments[0].weight == dissimilarity_weight(3, 16));
    CHECK_FALSE(at.attachments[0].uninformative);
    CHECK(at.short_window == 16);
    CHECK(at.leaf_index("xA00") == 0);
    CHECK(error_category([&] { at.leaf_index("xZZ"); }) == ErrorCategory::parameter);
}

TEST_CASE("attach_leaves: all-zero count row is flagged uninformative") {
    auto tree = make_tree(make_counts(signal_names(3), 3, 64,
                                      {{0, 1, 40}, {0, 2, 35}}));
    CoOccurrence shortc = make_counts(mixed_names(3, 2), 3, 16, {});
    shortc.at(4, 1) = shortc.at(1, 4) = 7;  // second asset is informative
    AttachedTree at = attach_leaves(tree, shortc);
    CHECK(at.attachments[0].uninformative);
    CHECK(tree->nodes[at.attachments[0].signal] == "_S00");  // lex fallback
    CHECK(at.attachments[0].weight == 1.0);
    CHECK(at.attachments[0].chi == 0);
    CHECK_FALSE(at.attachments[1].uninformative);
    CHECK(tree->nodes[at.attachments[1].signal] == "_S01");
}

TEST_CASE("attach_leaves: input validation") {
    auto tree = make_tree(make_counts(signal_names(3), 3, 64,
                                      {{0, 1, 40}, {0, 2, 35}}));
    CoOccurrence no_assets = make_counts(signal_names(3), 3, 16, {});
    CHECK(error_category([&] { attach_leaves(tree, no_assets); }) ==
          ErrorCategory::parameter);
    CoOccurrence wrong = make_counts(mixed_names(4, 1), 4, 16, {});
    CHECK(error_category([&] { attach_leaves(tree, wrong); }) ==
          ErrorCategory::parameter);
    CHECK(error_category([&] { attach_leaves(nullptr, wrong); }) ==
          ErrorCategory::parameter);
}

TEST_CASE("leaf_distances: symmetric, zero diagonal, exact path sums") {
    AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                    chain_short_counts());
    auto d = leaf_distances(at);
    REQUIRE(d.size() == 3);
    const double w9 = dissimilarity_weight(9, 16);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(d[i][i] == 0.0);
        for (std::size_t j = 0; j < 3; ++j) CHECK(d[i][j] == d[j][i]);
    }
    // Both peers sit on _S03: distance is just the two leaf edges.
    CHECK(d[0][1] == Approx(2 * w9).epsilon(1e-15));
    // xA02 attaches greedily at _S00, three chain edges away from _S03.
    CHECK(d[0][2] == Approx(w9 + 3 * 0.75 + dissimilarity_weight(9, 16))
                         .epsilon(1e-15));
}

TEST_CASE("neighborhood: explicit lists drop the target and reject unknowns") {
    AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                    chain_short_counts());
    // The configured group may include the target itself: silently dropped.
    Neighborhood nb = explicit_peers(at, 2, {"xA00", "xA01", "xA02"});
    CHECK(nb.target == 2);
    CHECK(nb.members == std::vector<std::uint32_t>{0, 1});
    CHECK_FALSE(nb.empty_flagged);

    // Duplicates collapse.
    Neighborhood dup = explicit_peers(at, 2, {"xA01", "xA01"});
    CHECK(dup.members == std::vector<std::uint32_t>{1});

    // Unknown names are configuration errors.
    CHECK(error_category([&] { explicit_peers(at, 2, {"xA07"}); }) ==
          ErrorCategory::config);

    // A list reducing to nothing is flagged, not an error.
    Neighborhood none = explicit_peers(at, 2, {"xA02"});
    CHECK(none.members.empty());
    CHECK(none.empty_flagged);
}

TEST_CASE("neighborhood: threshold cut is strict and sums over the horizon") {
    AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                    chain_short_counts());
    const std::vector<std::vector<double>> d = {
        {0.0, 0.5, 0.9}, {0.5, 0.0, 0.7}, {0.9, 0.7, 0.0}};
    PeerSpec spec;
    spec.mode = PeerSpec::Mode::threshold;

    spec.theta = 0.6;
    Neighborhood nb = neighborhood({d}, 0, spec, at.leaf_names);
    CHECK(nb.members == std::vector<std::uint32_t>{1});

    spec.theta = 0.95;
    CHECK(neighborhood({d}, 0, spec, at.leaf_names).members ==
          std::vector<std::uint32_t>{1, 2});

    // Strictly below: equality does not admit a peer.
    spec.theta = 0.5;
    Neighborhood cut = neighborhood({d}, 0, spec, at.leaf_names);
    CHECK(cut.members.empty());
    CHECK(cut.empty_flagged);

    // Two matrices: scores add, so the cut applies to the sum.
    spec.theta = 1.0;
    CHECK(neighborhood({d, d}, 0, spec, at.leaf_names).members.empty());
    spec.theta = 1.01;
    CHECK(neighborhood({d, d}, 0, spec, at.leaf_names).members ==
          std::vector<std::uint32_t>{1});

    CHECK(error_category([&] { neighborhood({}, 0, spec, at.leaf_names); }) ==
          ErrorCategory::parameter);
}

TEST_CASE("peer_subtree: degenerate, sibling, and literal cases") {
    // Two-level tree rooted at _S00: children _S01,_S02; _S03 under _S01,
    // _S04 under _S02.
    auto tree = make_tree(make_counts(
        signal_names(5), 5, 64,
        {{0, 1, 48}, {0, 2, 46}, {1, 3, 40}, {2, 4, 38}}));
    REQUIRE(tree->nodes[tree->root] == "_S00");

    CoOccurrence shortc = make_counts(mixed_names(5, 5), 5, 16, {});
    auto put = [&](std::size_t asset, std::size_t signal) {
        shortc.at(5 + asset, signal) = 9;
        shortc.at(signal, 5 + asset) = 9;
    };
    put(0, 3);  // xA00 -> _S03
    put(1, 4);  // xA01 -> _S04
    put(2, 1);  // xA02 -> _S01
    put(3, 2);  // xA03 -> _S02
    put(4, 0);  // xA04 -> _S00 (spare target for the all-peers case)
    AttachedTree at = attach_leaves(tree, shortc);

    auto names_of = [&](const PeerSubtree& o) {
        std::set<std::string> out;
        for (auto n : o.nodes) out.insert(tree->nodes[n]);
        return out;
    };

    SUBCASE("all peers on one node collapse O to that node") {
        Neighborhood nb = explicit_peers(at, 1, {"xA00"});
        PeerSubtree o = peer_subtree(at, nb);
        CHECK(names_of(o) == std::set<std::string>{"_S03"});
        CHECK(tree->nodes[o.alpha] == "_S03");
        CHECK(o.contains(tree->index_of("_S03")));
        CHECK_FALSE(o.contains(tree->index_of("_S01")));
    }
    SUBCASE("siblings pull in their common parent") {
        Neighborhood nb = explicit_peers(at, 0, {"xA02", "xA03"});
        PeerSubtree o = peer_subtree(at, nb);
        CHECK(names_of(o) == std::set<std::string>{"_S00", "_S01", "_S02"});
        CHECK(tree->nodes[o.alpha] == "_S00");
    }
    SUBCASE("nested attachments stop at the deepest common ancestor") {
        Neighborhood nb = explicit_peers(at, 1, {"xA00", "xA02"});
        PeerSubtree o = peer_subtree(at, nb);  // _S03 and _S01
        CHECK(names_of(o) == std::set<std::string>{"_S01", "_S03"});
        CHECK(tree->nodes[o.alpha] == "_S01");
    }
    SUBCASE("literal mode runs every chain to the root") {
        Neighborhood nb = explicit_peers(at, 1, {"xA00"});
        PeerSubtree lca_o = peer_subtree(at, nb, AlphaMode::lca);
        CHECK(names_of(lca_o) == std::set<std::string>{"_S03"});
        PeerSubtree lit = peer_subtree(at, nb, AlphaMode::literal);
        CHECK(names_of(lit) == std::set<std::string>{"_S00", "_S01", "_S03"});
        CHECK(tree->nodes[lit.alpha] == "_S00");
    }
    SUBCASE("empty peer set is a parameter error") {
        Neighborhood nb;
        nb.target = 0;
        CHECK(error_category([&] { peer_subtree(at, nb); }) ==
              ErrorCategory::parameter);
    }
    SUBCASE("nodes come back sorted ascending") {
        Neighborhood nb = explicit_peers(at, 4, {"xA00", "xA01", "xA02", "xA03"});
        PeerSubtree o = peer_subtree(at, nb);
        CHECK(std::is_sorted(o.nodes.begin(), o.nodes.end()));
        CHECK(names_of(o) == std::set<std::string>{"_S00", "_S01", "_S02",
                                                    "_S03", "_S04"});
    }
}

TEST_CASE("alpha mode strings") {
    CHECK(alpha_mode_from_string("lca") == AlphaMode::lca);
    CHECK(alpha_mode_from_string("literal") == AlphaMode::literal);
    CHECK(std::string(to_string(AlphaMode::lca)) == "lca");
    CHECK(std::string(to_string(AlphaMode::literal)) == "literal");
    CHECK(error_category([] { alpha_mode_from_string("root"); }) ==
          ErrorCategory::parameter);
}

TEST_CASE("attach_target: peer cohesion overrides the raw maximum") {
    AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                    chain_short_counts());
    Neighborhood nb = explicit_peers(at, 2, {"xA00", "xA01"});
    std::vector<std::int64_t> chi_row = {9, 0, 0, 6};
    TargetAttachment ta = attach_target(at, 2, chi_row, nb);

    CHECK(at.tree->nodes[ta.greedy] == "_S00");
    CHECK(ta.greedy_chi == 9);
    CHECK(at.tree->nodes[ta.chosen] == "_S03");
    CHECK(ta.chosen_chi == 6);
    CHECK(ta.chosen_weight == dissimilarity_weight(6, 16));
    // Exact dyadic arithmetic: cost(_S03) = 1 - (6/16)^2.
    CHECK(ta.chosen_cost == 0.859375);
    CHECK_FALSE(ta.greedy_fallback);
    CHECK_FALSE(ta.uninformative);

    REQUIRE(ta.cost.size() == 4);
    CHECK(ta.cost[0] == Approx(dissimilarity_weight(9, 16) + 3 * 0.75));
    CHECK(ta.cost[1] == Approx(1.0 + 2 * 0.75));
    CHECK(ta.cost[2] == Approx(1.0 + 0.75));
    CHECK(ta.cost[3] == 0.859375);

    // The chosen node lies inside O, so the connecting path is trivial.
    REQUIRE(ta.path.size() == 1);
    CHECK(ta.path.front() == ta.chosen);
    CHECK(ta.subtree.contains(ta.chosen));

    // Contraction agrees: shortest target-to-s* distance == chosen cost.
    std::vector<double> cand(4);
    for (std::size_t s = 0; s < 4; ++s)
        cand[s] = dissimilarity_weight(chi_row[s], 16);
    ContractedGraph g = contract(*at.tree, ta.subtree, cand, "xA02");
    CHECK(verify::dijkstra_to_star(g) == Approx(ta.chosen_cost).epsilon(1e-15));
    // n - |O| + 2 contracted names (survivors, s*, target).
    CHECK(g.names.size() == 4 - ta.subtree.nodes.size() + 2);
}

TEST_CASE("attach_target: adaptive cost ties break lexicographically") {
    // Chain _S00-_S01-_S02, peers on the middle node, symmetric target row.
    auto tree = make_tree(make_counts(signal_names(3), 3, 16,
                                      {{0, 1, 8}, {1, 2, 8}}));
    REQUIRE(tree->nodes[tree->root] == "_S01");
    CoOccurrence shortc = make_counts(mixed_names(3, 2), 3, 16, {});
    shortc.at(3, 1) = shortc.at(1, 3) = 9;  // peer on _S01
    AttachedTree at = attach_leaves(tree, shortc);
    Neighborhood nb = explicit_peers(at, 1, {"xA00"});
    std::vector<std::int64_t> chi_row = {14, 0, 14};
    TargetAttachment ta = attach_target(at, 1, chi_row, nb);
    // cost(_S00) = cost(_S02) = 1 - (14/16)^2 + 0.75 = 0.984375 < cost(_S01) = 1.
    CHECK(ta.cost[0] == 0.984375);
    CHECK(ta.cost[2] == 0.984375);
    CHECK(ta.cost[1] == 1.0);
    CHECK(at.tree->nodes[ta.chosen] == "_S00");
    CHECK(ta.chosen_cost == 0.984375);
}

TEST_CASE("attach_target: greedy reduction on empty peers and whole-tree O") {
    SUBCASE("empty peer set falls back to greedy") {
        AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                        chain_short_counts());
        Neighborhood nb;  // nothing configured
        nb.target = 2;
        nb.empty_flagged = true;
        std::vector<std::int64_t> chi_row = {9, 0, 0, 6};
        TargetAttachment ta = attach_target(at, 2, chi_row, nb);
        CHECK(ta.greedy_fallback);
        CHECK(ta.chosen == ta.greedy);
        CHECK(at.tree->nodes[ta.chosen] == "_S00");
        CHECK(ta.chosen_cost == ta.chosen_weight);
        CHECK(ta.cost.empty());
        CHECK(ta.subtree.nodes.empty());
    }
    SUBCASE("O spanning the whole tree reduces the argmin to the raw argmax") {
        // Star around _S00 with peers on all four spokes.
        auto tree = make_tree(make_counts(
            signal_names(5), 5, 16,
            {{0, 1, 8}, {0, 2, 8}, {0, 3, 8}, {0, 4, 8}}));
        REQUIRE(tree->nodes[tree->root] == "_S00");
        CoOccurrence shortc = make_counts(mixed_names(5, 5), 5, 16, {});
        for (std::size_t a = 0; a < 4; ++a) {
            shortc.at(5 + a, 1 + a) = 9;
            shortc.at(1 + a, 5 + a) = 9;
        }
        AttachedTree at = attach_leaves(tree, shortc);
        Neighborhood nb =
            explicit_peers(at, 4, {"xA00", "xA01", "xA02", "xA03"});
        std::vector<std::int64_t> chi_row = {2, 3, 5, 4, 1};
        TargetAttachment ta = attach_target(at, 4, chi_row, nb);
        CHECK(ta.subtree.nodes.size() == 5);  // whole tree
        CHECK(ta.chosen == ta.greedy);
        CHECK(at.tree->nodes[ta.chosen] == "_S02");
        CHECK_FALSE(ta.greedy_fallback);
        for (std::size_t s = 0; s < 5; ++s)
            CHECK(ta.cost[s] == dissimilarity_weight(chi_row[s], 16));
    }
    SUBCASE("all-zero target row is uninformative and falls back") {
        AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                        chain_short_counts());
        Neighborhood nb = explicit_peers(at, 2, {"xA00", "xA01"});
        std::vector<std::int64_t> chi_row = {0, 0, 0, 0};
        TargetAttachment ta = attach_target(at, 2, chi_row, nb);
        CHECK(ta.uninformative);
        CHECK(ta.greedy_fallback);
        CHECK(at.tree->nodes[ta.chosen] == "_S00");  // lex-smallest signal
        CHECK(ta.chosen_weight == 1.0);
    }
}

TEST_CASE("attach_target: validation") {
    AttachedTree at = attach_leaves(make_tree(chain_long_counts()),
                                    chain_short_counts());
    Neighborhood nb = explicit_peers(at, 2, {"xA00"});
    std::vector<std::int64_t> chi_row = {9, 0, 0, 6};
    CHECK(error_category([&] { attach_target(at, 9, chi_row, nb); }) ==
          ErrorCategory::parameter);
    std::vector<std::int64_t> bad_row = {9, 0};
    CHECK(error_category([&] { attach_target(at, 2, bad_row, nb); }) ==
          ErrorCategory::parameter);
    Neighborhood self;
    self.target = 0;
    self.members = {0};
    CHECK(error_category([&] { attach_target(at, 0, chi_row, self); }) ==
          ErrorCategory::parameter);
}

TEST_CASE("attach_target agrees with brute force and Dijkstra on random instances") {
    Rng rng(41);
    int nonfallback = 0;
    for (int it = 0; it < 60; ++it) {
        const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform_int(0, 4));
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_int(0, 2));
        CoOccurrence longc = testsup::random_counts(rng, n, 0, 64, 0.5);
        auto tree = make_tree(longc);
        CoOccurrence shortc = testsup::random_counts(rng, n, m, 16, 0.5);
        AttachedTree at = attach_leaves(tree, shortc);

        const std::uint32_t target =
            static_cast<std::uint32_t>(rng.uniform_int(0, m - 1));
        std::vector<std::string> peer_names;
        for (std::uint32_t l = 0; l < m; ++l)
            if (l != target && rng.bernoulli(0.7))
                peer_names.push_back(at.leaf_names[l]);
        Neighborhood nb;
        if (peer_names.empty()) {
            nb.target = target;
            nb.empty_flagged = true;
        } else {
            nb = explicit_peers(at, target, peer_names);
        }

        std::vector<std::int64_t> chi_row(n);
        for (std::size_t s = 0; s < n; ++s)
            chi_row[s] = shortc.at(n + target, s);

        TargetAttachment ta = attach_target(at, target, chi_row, nb);
        if (ta.greedy_fallback) {
            CHECK(ta.chosen == ta.greedy);
            continue;
        }
        ++nonfallback;

        double oracle_cost = 0.0;
        std::uint32_t oracle = verify::brute_force_choice(
            *tree, chi_row, 16, ta.subtree.nodes, &oracle_cost);
        CHECK(ta.chosen == oracle);
        CHECK(ta.chosen_cost == Approx(oracle_cost).epsilon(1e-12));

        std::vector<double> cand(n);
        for (std::size_t s = 0; s < n; ++s)
            cand[s] = dissimilarity_weight(chi_row[s], 16);
        ContractedGraph g = contract(*tree, ta.subtree, cand,
                                     at.leaf_names[target]);
        CHECK(verify::dijkstra_to_star(g) ==
              Approx(ta.chosen_cost).epsilon(1e-12));

        // Proposition-2 invariance: the union-of-edges cost is identical
        // for every attachment node inside O (exact dyadic arithmetic).
        const double w0 = ta.chosen_weight;
        const double ref = verify::union_path_cost(at, nb, w0,
                                                   ta.subtree.nodes.front());
        for (std::uint32_t node : ta.subtree.nodes)
            CHECK(verify::union_path_cost(at, nb, w0, node) == ref);

        // Path structure: starts at the chosen signal, ends inside O,
        // consecutive entries are parent/child pairs.
        REQUIRE(!ta.path.empty());
        CHECK(ta.path.front() == ta.chosen);
        CHECK(ta.subtree.contains(ta.path.back()));
        for (std::size_t i = 0; i + 1 < ta.path.size(); ++i) {
            const auto a = ta.path[i], b = ta.path[i + 1];
            const bool linked =
                at.tree->parent[a] == static_cast<std::int32_t>(b) ||
                at.tree->parent[b] == static_cast<std::int32_t>(a);
            CHECK(linked);
        }
    }
    CHECK(nonfallback > 20);  // the sweep must actually exercise the machinery
}
