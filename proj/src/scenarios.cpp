#include "rdoe/scenarios.hpp"

#include "rdoe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace rdoe {

namespace {

constexpr double kWeightTol = 1e-9;

}  // namespace

void ScenarioSet::validate() const {
    if (realizations.empty()) throw DomainError("scenario set is empty");
    if (weights.size() != realizations.size()) throw DomainError("scenario weights do not match realizations");
    const auto n = realizations.front().size();
    double total = 0.0;
    for (std::size_t s = 0; s < realizations.size(); ++s) {
        if (realizations[s].size() != n) throw DomainError("scenario realizations have mixed dimensions");
        if (!realizations[s].allFinite()) throw DomainError("scenario realization is not finite");
        if (!(weights[s] > 0.0) || !std::isfinite(weights[s])) throw DomainError("scenario weights must be positive");
        total += weights[s];
    }
    if (std::abs(total - 1.0) > kWeightTol) throw DomainError("scenario weights must sum to one");
}

ScenarioSet ScenarioSet::uniform(std::vector<Vector> realizations) {
    ScenarioSet set;
    const double w = realizations.empty() ? 0.0 : 1.0 / static_cast<double>(realizations.size());
    set.weights.assign(realizations.size(), w);
    set.realizations = std::move(realizations);
    return set;
}

std::string_view to_string(ScenarioMode mode) {
    return mode == ScenarioMode::corners_center ? "corners_center" : "full_factorial_3";
}

ScenarioMode scenario_mode_from_string(std::string_view name) {
    if (name == "corners_center") return ScenarioMode::corners_center;
    if (name == "full_factorial_3") return ScenarioMode::full_factorial_3;
    throw ConfigError("unknown scenario mode '" + std::string(name) + "'");
}

ScenarioSet sample_scenarios(const ParameterBox& box, ScenarioMode mode,
                             const std::optional<std::vector<double>>& custom_weights) {
    const int n = box.dim();
    if (n < 1) throw DomainError("parameter box is empty");
    std::vector<Vector> pts;
    if (mode == ScenarioMode::full_factorial_3) {
        const Vector mid = box.midpoint();
        long count = 1;
        for (int i = 0; i < n; ++i) count *= 3;
        for (long k = 0; k < count; ++k) {
            Vector p(n);
            long rest = k;
            for (int i = n - 1; i >= 0; --i) {
                const long digit = rest % 3;
                rest /= 3;
                p[i] = digit == 0 ? box.lower()[i] : digit == 1 ? mid[i] : box.upper()[i];
            }
            pts.push_back(std::move(p));
        }
    } else {
        const long count = 1L << n;
        for (long k = 0; k < count; ++k) {
            Vector p(n);
            for (int i = 0; i < n; ++i) {
                const bool high = ((k >> (n - 1 - i)) & 1L) != 0;
                p[i] = high ? box.upper()[i] : box.lower()[i];
            }
            pts.push_back(std::move(p));
        }
        pts.push_back(box.midpoint());
    }
    ScenarioSet set = ScenarioSet::uniform(std::move(pts));
    if (custom_weights) {
        if (custom_weights->size() != set.realizations.size())
            throw DomainError("expected " + std::to_string(set.realizations.size()) + " scenario weights");
        set.weights = *custom_weights;
    }
    set.validate();
    return set;
}

ScenarioSet merge_duplicates(const ScenarioSet& set) {
    ScenarioSet out;
    for (std::size_t s = 0; s < set.realizations.size(); ++s) {
        bool merged = false;
        for (std::size_t k = 0; k < out.realizations.size(); ++k) {
            if (out.realizations[k] == set.realizations[s]) {
                out.weights[k] += set.weights[s];
                merged = true;
                break;
            }
        }
        if (!merged) {
            out.realizations.push_back(set.realizations[s]);
            out.weights.push_back(set.weights[s]);
        }
    }
    return out;
}

Vector scenario_mean(const ScenarioSet& set) {
    set.validate();
    Vector m = Vector::Zero(set.realizations.front().size());
    for (std::size_t s = 0; s < set.realizations.size(); ++s) m += set.weights[s] * set.realizations[s];
    return m;
}

ScenarioTree::ScenarioTree(std::vector<TreeNode> nodes, std::vector<int> allocations, int total)
    : nodes_(std::move(nodes)), allocations_(std::move(allocations)), total_(total) {
    if (nodes_.empty()) throw InconsistentTree("tree has no nodes");
    const TreeNode& root = nodes_.front();
    if (root.stage != 0 || root.parent != -1) throw InconsistentTree("node 0 must be the stage-0 root");
    if (std::abs(root.weight - 1.0) > kWeightTol) throw InconsistentTree("root weight must be one");
    if (total_ < 0) throw InconsistentTree("total experiment count is negative");
    int prev = 0;
    for (int a : allocations_) {
        if (a < prev || a > total_) throw InconsistentTree("stage allocations must be non-decreasing and <= N");
        prev = a;
    }
    const int terminal = terminal_stage();
    const auto dim = root.p.size();
    std::vector<double> stage_sum(static_cast<std::size_t>(terminal + 1), 0.0);
    std::vector<double> child_sum(nodes_.size(), 0.0);
    std::vector<int> child_count(nodes_.size(), 0);
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
        const TreeNode& nd = nodes_[k];
        const std::string where = "node " + std::to_string(k);
        if (nd.stage < 1 || nd.stage > terminal) throw InconsistentTree(where + " has an invalid stage");
        if (nd.parent < 0 || static_cast<std::size_t>(nd.parent) >= k)
            throw InconsistentTree(where + " must have exactly one earlier parent");
        if (nodes_[static_cast<std::size_t>(nd.parent)].stage != nd.stage - 1)
            throw InconsistentTree(where + " is not one stage below its parent");
        if (nd.p.size() != dim || !nd.p.allFinite()) throw InconsistentTree(where + " has an invalid realization");
        if (!(nd.weight > 0.0)) throw InconsistentTree(where + " has a non-positive weight");
        stage_sum[static_cast<std::size_t>(nd.stage)] += nd.weight;
        child_sum[static_cast<std::size_t>(nd.parent)] += nd.weight;
        ++child_count[static_cast<std::size_t>(nd.parent)];
    }
    for (int s = 1; s <= terminal; ++s) {
        if (std::abs(stage_sum[static_cast<std::size_t>(s)] - 1.0) > kWeightTol)
            throw InconsistentTree("weights at stage " + std::to_string(s) + " do not sum to one");
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (nodes_[k].stage == terminal) continue;
        if (child_count[k] == 0) throw InconsistentTree("node " + std::to_string(k) + " has no children");
        if (std::abs(child_sum[k] - nodes_[k].weight) > kWeightTol)
            throw InconsistentTree("weight of node " + std::to_string(k) + " differs from the sum of its children");
    }
}

ScenarioTree ScenarioTree::two_stage(const ScenarioSet& scenarios, int n_e, int total) {
    scenarios.validate();
    std::vector<TreeNode> nodes;
    nodes.push_back({0, -1, scenario_mean(scenarios), 1.0});
    const int s_count = scenarios.size();
    for (int s = 0; s < s_count; ++s)
        nodes.push_back({1, 0, scenarios.realizations[static_cast<std::size_t>(s)],
                         scenarios.weights[static_cast<std::size_t>(s)]});
    for (int s = 0; s < s_count; ++s)
        nodes.push_back({2, 1 + s, scenarios.realizations[static_cast<std::size_t>(s)],
                         scenarios.weights[static_cast<std::size_t>(s)]});
    return ScenarioTree(std::move(nodes), {n_e}, total);
}

ScenarioTree ScenarioTree::from_stage_sets(const Vector& root, const std::vector<ScenarioSet>& stage_sets,
                                           std::vector<int> allocations, int total) {
    if (stage_sets.size() != allocations.size())
        throw InconsistentTree("need one scenario set per robust stage");
    std::vector<TreeNode> nodes;
    nodes.push_back({0, -1, root, 1.0});
    std::vector<int> frontier{0};
    for (std::size_t i = 0; i < stage_sets.size(); ++i) {
        stage_sets[i].validate();
        std::vector<int> next;
        for (int parent : frontier) {
            const double pw = nodes[static_cast<std::size_t>(parent)].weight;
            for (int s = 0; s < stage_sets[i].size(); ++s) {
                nodes.push_back({static_cast<int>(i) + 1, parent, stage_sets[i].realizations[static_cast<std::size_t>(s)],
                                 pw * stage_sets[i].weights[static_cast<std::size_t>(s)]});
                next.push_back(static_cast<int>(nodes.size()) - 1);
            }
        }
        frontier = std::move(next);
    }
    const int terminal = static_cast<int>(stage_sets.size()) + 1;
    for (int leaf : frontier) {
        const TreeNode copy = nodes[static_cast<std::size_t>(leaf)];
        nodes.push_back({terminal, leaf, copy.p, copy.weight});
    }
    return ScenarioTree(std::move(nodes), std::move(allocations), total);
}

std::vector<int> ScenarioTree::nodes_at_stage(int stage) const {
    std::vector<int> out;
    for (std::size_t k = 0; k < nodes_.size(); ++k)
        if (nodes_[k].stage == stage) out.push_back(static_cast<int>(k));
    return out;
}

std::vector<int> ScenarioTree::children(int node) const {
    std::vector<int> out;
    for (std::size_t k = 1; k < nodes_.size(); ++k)
        if (nodes_[k].parent == node) out.push_back(static_cast<int>(k));
    return out;
}

std::vector<int> ScenarioTree::path(int node) const {
    std::vector<int> out;
    for (int k = node; k > 0; k = nodes_[static_cast<std::size_t>(k)].parent) out.push_back(k);
    std::reverse(out.begin(), out.end());
    return out;
}

int ScenarioTree::block_size(int stage) const {
    if (stage < 1 || stage > terminal_stage()) throw DomainError("stage out of range");
    const int begin = stage == 1 ? 0 : allocations_[static_cast<std::size_t>(stage - 2)];
    const int end = stage == terminal_stage() ? total_ : allocations_[static_cast<std::size_t>(stage - 1)];
    return end - begin;
}

bool ScenarioTree::strictly_increasing() const {
    int prev = 0;
    for (int a : allocations_) {
        if (a <= prev) return false;
        prev = a;
    }
    return prev < total_;
}

StagedDesign StagedDesign::layout(const ScenarioTree& tree, int n_u) {
    StagedDesign sd;
    sd.tree = tree;
    sd.node_block.assign(tree.nodes().size(), -1);
    const int terminal = tree.terminal_stage();
    std::map<int, int> group_of_parent;
    for (std::size_t k = 1; k < tree.nodes().size(); ++k) {
        const TreeNode& nd = tree.nodes()[k];
        const int rows = tree.block_size(nd.stage);
        if (nd.stage < terminal) {
            auto it = group_of_parent.find(nd.parent);
            if (it != group_of_parent.end()) {
                sd.blocks[static_cast<std::size_t>(it->second)].nodes.push_back(static_cast<int>(k));
                sd.node_block[k] = it->second;
                continue;
            }
            group_of_parent[nd.parent] = static_cast<int>(sd.blocks.size());
        }
        sd.node_block[k] = static_cast<int>(sd.blocks.size());
        sd.blocks.push_back({nd.stage, {static_cast<int>(k)}, Matrix::Zero(rows, n_u)});
    }
    return sd;
}

Matrix StagedDesign::path_controls(int node) const {
    Matrix out;
    for (int k : tree.path(node)) {
        const auto& blk = blocks[static_cast<std::size_t>(node_block[static_cast<std::size_t>(k)])];
        out = stack_rows(out, blk.controls);
    }
    return out;
}

Design StagedDesign::flatten(int leaf) const {
    if (tree.node(leaf).stage != tree.terminal_stage()) throw DomainError("flatten expects a terminal node");
    return Design(path_controls(leaf), tree.allocations());
}

int StagedDesign::decision_size() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.controls.size());
    return n;
}

}  // namespace rdoe
