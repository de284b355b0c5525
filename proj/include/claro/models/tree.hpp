#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "claro/models/predictor.hpp"
#include "claro/tabular/dataset.hpp"

namespace claro::models {

/// One node of a fitted regression tree, stored in a flat array.
///
/// Internal nodes route on a single feature: numeric rows go left when
/// x <= threshold; categorical rows go left when their level index is in
/// left_levels. Leaves carry the weighted mean response of their rows.
struct TreeNode {
    bool is_leaf = true;
    double value = 0.0;  // leaf prediction (weighted mean of y)

    std::size_t feature = 0;
    double threshold = 0.0;                 // numeric splits
    std::vector<std::int32_t> left_levels;  // categorical splits, sorted
    std::size_t left = 0;                   // child indices into the node array
    std::size_t right = 0;
};

struct TreeFitOptions {
    int max_depth = 4;
    std::size_t min_leaf_size = 1;
};

/// Binary regression tree fit by greedy weighted-variance reduction.
class TreeModel final : public Predictor {
public:
    TreeModel(tabular::Schema schema, std::vector<TreeNode> nodes, TreeFitOptions options);

    const tabular::Schema& schema() const override { return schema_; }
    std::string type_name() const override { return "tree"; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeFitOptions& options() const { return options_; }

    /// Length of the longest root-to-leaf path, 0 for a stump.
    int depth() const;
    std::size_t n_leaves() const;
    /// True when some split in the tree routes on feature j.
    bool uses_feature(std::size_t j) const;
    /// Index of the leaf node row i of ds falls into.
    std::size_t leaf_index(const tabular::Dataset& ds, std::size_t i) const;

    nlohmann::json to_json() const override;
    static TreeModel from_json(const nlohmann::json& j);

protected:
    double eval_row(const tabular::Dataset& ds, std::size_t i) const override;

private:
    tabular::Schema schema_;
    std::vector<TreeNode> nodes_;  // nodes_[0] is the root
    TreeFitOptions options_;
};

/// Grows a tree by greedily picking the split with the largest reduction in
/// weighted squared error. Numeric candidates are midpoints between adjacent
/// distinct values; categorical candidates come from ordering levels by their
/// weighted mean response and scanning prefixes of that order. Splitting
/// stops at max_depth, when a side would fall under min_leaf_size, or when no
/// split reduces the error.
TreeModel fit_tree(const tabular::Dataset& ds, const TreeFitOptions& options = {});

}  // namespace claro::models
