#include "support.hpp"

#include "rdoe/errors.hpp"
#include "rdoe/scenarios.hpp"

using namespace rdoe;
using rdoe::test::vec;

TEST_CASE("three-level factorial ordering") {
    const ParameterBox box(vec({0.5, 0.1}), vec({1.5, 0.5}));
    const ScenarioSet s = sample_scenarios(box, ScenarioMode::full_factorial_3);
    REQUIRE(s.size() == 9);
    CHECK(s.realizations[0] == vec({0.5, 0.1}));
    CHECK(s.realizations[1] == vec({0.5, 0.3}));
    CHECK(s.realizations[2] == vec({0.5, 0.5}));
    CHECK(s.realizations[3] == vec({1.0, 0.1}));
    CHECK(s.realizations[4] == vec({1.0, 0.3}));
    CHECK(s.realizations[8] == vec({1.5, 0.5}));
    for (double w : s.weights) CHECK(w == doctest::Approx(1.0 / 9.0));
    CHECK(scenario_mean(s).isApprox(box.midpoint()));
}

TEST_CASE("corners plus centre ordering") {
    const ParameterBox box(vec({0.0, 10.0}), vec({1.0, 20.0}));
    const ScenarioSet s = sample_scenarios(box, ScenarioMode::corners_center);
    REQUIRE(s.size() == 5);
    CHECK(s.realizations[0] == vec({0.0, 10.0}));
    CHECK(s.realizations[1] == vec({0.0, 20.0}));
    CHECK(s.realizations[2] == vec({1.0, 10.0}));
    CHECK(s.realizations[3] == vec({1.0, 20.0}));
    CHECK(s.realizations[4] == vec({0.5, 15.0}));
    const ParameterBox one(vec({0.5}), vec({1.5}));
    const ScenarioSet s1 = sample_scenarios(one, ScenarioMode::full_factorial_3);
    REQUIRE(s1.size() == 3);
    CHECK(s1.realizations[1][0] == 1.0);
}

TEST_CASE("custom weights and weight validation") {
    const ParameterBox box(vec({0.5}), vec({1.5}));
    const ScenarioSet s = sample_scenarios(box, ScenarioMode::full_factorial_3, std::vector<double>{0.25, 0.5, 0.25});
    CHECK(s.weights[1] == 0.5);
    CHECK_THROWS_AS(sample_scenarios(box, ScenarioMode::full_factorial_3, std::vector<double>{0.5, 0.5}),
                    DomainError);
    CHECK_THROWS_AS(sample_scenarios(box, ScenarioMode::full_factorial_3, std::vector<double>{0.5, 0.5, 0.5}),
                    DomainError);
    CHECK_THROWS_AS(sample_scenarios(box, ScenarioMode::full_factorial_3, std::vector<double>{1.0, 0.0, 0.0}),
                    DomainError);
    CHECK_THROWS_AS(scenario_mode_from_string("latin"), ConfigError);
    CHECK(scenario_mode_from_string(to_string(ScenarioMode::corners_center)) == ScenarioMode::corners_center);
}

TEST_CASE("duplicate realizations merge their weights") {
    ScenarioSet s{{vec({1.0}), vec({2.0}), vec({1.0})}, {0.25, 0.25, 0.5}};
    const ScenarioSet m = merge_duplicates(s);
    REQUIRE(m.size() == 2);
    CHECK(m.weights[0] == 0.75);
    CHECK(m.realizations[1] == vec({2.0}));
}

TEST_CASE("two-stage tree structure") {
    const ScenarioSet s = ScenarioSet::uniform({vec({0.5}), vec({1.0}), vec({1.5})});
    const ScenarioTree t = ScenarioTree::two_stage(s, 1, 2);
    CHECK(t.nodes().size() == 7);
    CHECK(t.robust_stages() == 1);
    CHECK(t.terminal_stage() == 2);
    CHECK(t.block_size(1) == 1);
    CHECK(t.block_size(2) == 1);
    CHECK(t.leaves() == std::vector<int>{4, 5, 6});
    CHECK(t.path(5) == std::vector<int>{2, 5});
    CHECK(t.node(0).p[0] == doctest::Approx(1.0));
    CHECK(t.strictly_increasing());

    const StagedDesign d = StagedDesign::layout(t, 1);
    CHECK(d.blocks.size() == 4);  // one shared block plus three recourse blocks
    CHECK(d.node_block[1] == d.node_block[2]);
    CHECK(d.node_block[2] == d.node_block[3]);
    CHECK(d.decision_size() == 4);
    CHECK(ScenarioTree::two_stage(s, 0, 2).block_size(1) == 0);
    CHECK_FALSE(ScenarioTree::two_stage(s, 2, 2).strictly_increasing());
}

TEST_CASE("inconsistent trees are rejected") {
    const ScenarioSet s = ScenarioSet::uniform({vec({0.5}), vec({1.5})});
    CHECK_THROWS_AS(ScenarioTree::two_stage(s, 3, 2), InconsistentTree);
    CHECK_THROWS_AS(ScenarioTree::from_stage_sets(vec({1.0}), {s, s}, {2, 1}, 4), InconsistentTree);
    CHECK_THROWS_AS(ScenarioTree::from_stage_sets(vec({1.0}), {s}, {1, 2}, 4), InconsistentTree);

    std::vector<TreeNode> nodes{{0, -1, vec({1.0}), 1.0},
                                {1, 0, vec({0.5}), 0.5},
                                {1, 0, vec({1.5}), 0.4},
                                {2, 1, vec({0.5}), 0.5},
                                {2, 2, vec({1.5}), 0.4}};
    CHECK_THROWS_AS(ScenarioTree(nodes, {1}, 2), InconsistentTree);
    nodes[2].weight = nodes[4].weight = 0.5;
    CHECK_NOTHROW(ScenarioTree(nodes, {1}, 2));
    nodes[4].parent = 1;  // node 2 loses its only child
    CHECK_THROWS_AS(ScenarioTree(nodes, {1}, 2), InconsistentTree);
    nodes[4].parent = 2;
    nodes[3].stage = 1;
    CHECK_THROWS_AS(ScenarioTree(nodes, {1}, 2), InconsistentTree);
}

TEST_CASE("random multi-stage trees keep weights consistent and decisions non-anticipative") {
    Rng rng(404);
    for (int trial = 0; trial < 40; ++trial) {
        const int stages = 1 + static_cast<int>(rng.uniform() * 3);
        std::vector<ScenarioSet> sets;
        std::vector<int> alloc;
        int cum = 0;
        for (int i = 0; i < stages; ++i) {
            const int k = 1 + static_cast<int>(rng.uniform() * 3);
            std::vector<Vector> r;
            std::vector<double> w;
            double sum = 0.0;
            for (int j = 0; j < k; ++j) {
                r.push_back(vec({rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)}));
                w.push_back(0.1 + rng.uniform());
                sum += w.back();
            }
            for (double& x : w) x /= sum;
            sets.push_back({r, w});
            cum += 1 + static_cast<int>(rng.uniform() * 2);
            alloc.push_back(cum);
        }
        const int total = cum + 1;
        const ScenarioTree t = ScenarioTree::from_stage_sets(vec({1.0, 1.0}), sets, alloc, total);

        for (int s = 1; s <= t.terminal_stage(); ++s) {
            double w = 0.0;
            for (int k : t.nodes_at_stage(s)) w += t.node(k).weight;
            CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (int k = 0; k < static_cast<int>(t.nodes().size()); ++k) {
            const auto ch = t.children(k);
            if (ch.empty()) continue;
            double w = 0.0;
            for (int c : ch) w += t.node(c).weight;
            CHECK(w == doctest::Approx(t.node(k).weight).epsilon(1e-12));
        }

        StagedDesign d = StagedDesign::layout(t, 1);
        for (auto& b : d.blocks)
            for (Eigen::Index r = 0; r < b.controls.rows(); ++r) b.controls(r, 0) = rng.uniform();
        const auto leaves = t.leaves();
        for (int a : leaves) {
            CHECK(d.flatten(a).size() == total);
            for (int b : leaves) {
                const auto pa = t.path(a), pb = t.path(b);
                // Siblings share their stage block, so rows agree through the
                // stage after the last common node.
                int shared = 0;
                while (shared < stages && pa[static_cast<std::size_t>(shared)] == pb[static_cast<std::size_t>(shared)])
                    ++shared;
                const int common = alloc[static_cast<std::size_t>(std::min(shared, stages - 1))];
                CHECK(d.flatten(a).controls.topRows(common) == d.flatten(b).controls.topRows(common));
            }
        }
    }
}
