#pragma once

#include "rdoe/design_types.hpp"
#include "rdoe/models.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdoe {

/// Discrete parameter realizations with probability weights.
struct ScenarioSet {
    std::vector<Vector> realizations;
    std::vector<double> weights;

    int size() const { return static_cast<int>(realizations.size()); }

    /// Throws DomainError unless weights are positive and sum to one.
    void validate() const;

    static ScenarioSet uniform(std::vector<Vector> realizations);
    static ScenarioSet single(const Vector& p) { return uniform({p}); }
};

enum class ScenarioMode { corners_center, full_factorial_3 };

std::string_view to_string(ScenarioMode mode);
ScenarioMode scenario_mode_from_string(std::string_view name);

/// full_factorial_3: every coordinate in {lower, mid, upper}, first coordinate
/// varying slowest. corners_center: the 2^n corners in binary order, then the
/// midpoint. Weights are uniform unless `custom_weights` is given.
ScenarioSet sample_scenarios(const ParameterBox& box, ScenarioMode mode,
                             const std::optional<std::vector<double>>& custom_weights = std::nullopt);

/// Merges identical realizations, summing their weights.
ScenarioSet merge_duplicates(const ScenarioSet& set);

/// Weighted mean of the realizations.
Vector scenario_mean(const ScenarioSet& set);

/// Node of a scenario tree. Node 0 is the root (stage 0, the a-priori
/// estimate); stages 1..n_r branch, stage n_r + 1 is terminal.
struct TreeNode {
    int stage = 0;
    int parent = -1;
    Vector p;
    double weight = 1.0;
};

class ScenarioTree {
public:
    ScenarioTree() = default;

    /// `allocations` are the cumulative experiment counts N_e^1 <= ... <= N_e^{n_r} <= N.
    /// Throws InconsistentTree when structure or weights are inconsistent.
    ScenarioTree(std::vector<TreeNode> nodes, std::vector<int> allocations, int total);

    /// Root -> one stage-1 node per scenario -> one terminal node per scenario.
    static ScenarioTree two_stage(const ScenarioSet& scenarios, int n_e, int total);

    /// Every node at stage i branches into the realizations of stage_sets[i-1],
    /// child weight = parent weight * set weight. Leaves continue unchanged
    /// into the terminal stage.
    static ScenarioTree from_stage_sets(const Vector& root, const std::vector<ScenarioSet>& stage_sets,
                                        std::vector<int> allocations, int total);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& allocations() const { return allocations_; }
    int total_experiments() const { return total_; }
    int robust_stages() const { return static_cast<int>(allocations_.size()); }
    int terminal_stage() const { return robust_stages() + 1; }

    std::vector<int> nodes_at_stage(int stage) const;
    std::vector<int> children(int node) const;
    std::vector<int> leaves() const { return nodes_at_stage(terminal_stage()); }
    /// Stage-1 .. node path (root excluded).
    std::vector<int> path(int node) const;
    /// Experiments allocated to a stage.
    int block_size(int stage) const;
    bool strictly_increasing() const;

private:
    std::vector<TreeNode> nodes_;
    std::vector<int> allocations_;
    int total_ = 0;
};

/// Controls shared by `nodes` (siblings at one stage).
struct ControlBlock {
    int stage = 0;
    std::vector<int> nodes;
    Matrix controls;
};

/// One control block per group of siblings at robust stages and one per
/// terminal node. Non-anticipativity holds by construction.
struct StagedDesign {
    ScenarioTree tree;
    std::vector<ControlBlock> blocks;
    std::vector<int> node_block;  ///< block index per node, -1 for the root

    /// Layout of blocks for a tree: siblings at robust stages share a block.
    static StagedDesign layout(const ScenarioTree& tree, int n_u);

    /// Concatenates the blocks along the root-to-leaf path of `leaf`;
    /// stage_marks are the tree allocations.
    Design flatten(int leaf) const;
    /// Controls along the path of `node` up to and including its own stage.
    Matrix path_controls(int node) const;
    int decision_size() const;
};

}  // namespace rdoe
