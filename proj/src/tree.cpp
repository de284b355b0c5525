#include "claro/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "claro/error.hpp"

namespace claro::models {

namespace {

struct WeightedStats {
    double weight = 0.0;
    double mean = 0.0;
    double sum_sq = 0.0;  // sum of w*(y - mean)^2, Welford-style

    void add(double y, double w) {
        weight += w;
        const double delta = y - mean;
        mean += delta * w / weight;
        sum_sq += w * delta * (y - mean);
    }
};

WeightedStats stats_over(const tabular::Dataset& ds, const std::vector<std::size_t>& rows) {
    WeightedStats s;
    for (std::size_t i : rows) s.add(ds.response()[i], ds.weights()[i]);
    return s;
}

struct SplitCandidate {
    bool found = false;
    double score = 0.0;  // reduction in weighted squared error
    std::size_t feature = 0;
    double threshold = 0.0;
    std::vector<std::int32_t> left_levels;
};

// Best threshold split of `rows` on numeric feature j, by scanning the rows
// in sorted feature order and keeping running stats of both sides.
void best_numeric_split(const tabular::Dataset& ds, std::vector<std::size_t>& rows,
                        std::size_t j, double parent_sq, std::size_t min_leaf,
                        SplitCandidate& best) {
    const auto& x = ds.numeric(j);
    std::sort(rows.begin(), rows.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    WeightedStats left;
    WeightedStats right = stats_over(ds, rows);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const std::size_t i = rows[k];
        const double y = ds.response()[i];
        const double w = ds.weights()[i];
        left.add(y, w);
        right.weight -= w;
        const double delta = y - right.mean;
        right.mean -= delta * w / right.weight;
        right.sum_sq -= w * delta * (y - right.mean);

        if (x[rows[k]] == x[rows[k + 1]]) continue;  // not a boundary
        if (k + 1 < min_leaf || rows.size() - k - 1 < min_leaf) continue;
        const double score = parent_sq - left.sum_sq - std::max(right.sum_sq, 0.0);
        if (score > best.score || !best.found) {
            if (score <= 0.0) continue;
            best.found = true;
            best.score = score;
            best.feature = j;
            best.threshold = x[rows[k]] + (x[rows[k + 1]] - x[rows[k]]) / 2.0;
            best.left_levels.clear();
        }
    }
}

// Best subset split of `rows` on categorical feature j. Levels are ordered
// by weighted mean response; prefixes of that order are the candidates,
// which is exact for squared error.
void best_categorical_split(const tabular::Dataset& ds, const std::vector<std::size_t>& rows,
                            std::size_t j, double parent_sq, std::size_t min_leaf,
                            SplitCandidate& best) {
    const auto& x = ds.categorical(j);
    const std::size_t n_levels = ds.schema().feature(j).kind.levels().size();

    std::vector<WeightedStats> per_level(n_levels);
    std::vector<std::size_t> counts(n_levels, 0);
    for (std::size_t i : rows) {
        per_level[static_cast<std::size_t>(x[i])].add(ds.response()[i], ds.weights()[i]);
        ++counts[static_cast<std::size_t>(x[i])];
    }

    std::vector<std::int32_t> present;
    for (std::size_t l = 0; l < n_levels; ++l)
        if (counts[l] > 0) present.push_back(static_cast<std::int32_t>(l));
    if (present.size() < 2) return;
    std::sort(present.begin(), present.end(), [&](std::int32_t a, std::int32_t b) {
        const double ma = per_level[static_cast<std::size_t>(a)].mean;
        const double mb = per_level[static_cast<std::size_t>(b)].mean;
        return ma < mb || (ma == mb && a < b);
    });

    WeightedStats left;
    WeightedStats right = stats_over(ds, rows);
    std::size_t left_count = 0;
    for (std::size_t p = 0; p + 1 < present.size(); ++p) {
        const auto& ls = per_level[static_cast<std::size_t>(present[p])];
        // Merge the level's aggregate into the left side (parallel-axis form).
        const double combined = left.weight + ls.weight;
        const double delta = ls.mean - left.mean;
        left.sum_sq += ls.sum_sq + delta * delta * left.weight * ls.weight / combined;
        left.mean += delta * ls.weight / combined;
        left.weight = combined;
        right.weight -= ls.weight;
        left_count += counts[static_cast<std::size_t>(present[p])];

        if (left_count < min_leaf || rows.size() - left_count < min_leaf) continue;
        // Recompute the right side exactly from the complement's levels.
        WeightedStats rs;
        double rsum_sq = 0.0;
        for (std::size_t q = p + 1; q < present.size(); ++q) {
            const auto& s = per_level[static_cast<std::size_t>(present[q])];
            const double c = rs.weight + s.weight;
            const double d = s.mean - rs.mean;
            rsum_sq += s.sum_sq + d * d * rs.weight * s.weight / c;
            rs.mean += d * s.weight / c;
            rs.weight = c;
        }
        const double score = parent_sq - left.sum_sq - rsum_sq;
        if ((score > best.score || !best.found) && score > 0.0) {
            best.found = true;
            best.score = score;
            best.feature = j;
            best.left_levels.assign(present.begin(), present.begin() + p + 1);
            std::sort(best.left_levels.begin(), best.left_levels.end());
        }
    }
}

struct Builder {
    const tabular::Dataset& ds;
    const TreeFitOptions& options;
    std::vector<TreeNode> nodes;

    std::size_t grow(std::vector<std::size_t> rows, int depth) {
        const WeightedStats stats = stats_over(ds, rows);
        const std::size_t index = nodes.size();
        nodes.emplace_back();
        nodes[index].value = stats.mean;

        if (depth >= options.max_depth || rows.size() < 2 * options.min_leaf_size ||
            stats.sum_sq <= 0.0)
            return index;

        SplitCandidate best;
        for (std::size_t j = 0; j < ds.schema().features().size(); ++j) {
            if (ds.schema().feature(j).kind.is_numeric()) {
                std::vector<std::size_t> sorted_rows = rows;
                best_numeric_split(ds, sorted_rows, j, stats.sum_sq, options.min_leaf_size,
                                   best);
            } else {
                best_categorical_split(ds, rows, j, stats.sum_sq, options.min_leaf_size, best);
            }
        }
        if (!best.found) return index;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        if (best.left_levels.empty()) {
            const auto& x = ds.numeric(best.feature);
            for (std::size_t i : rows)
                (x[i] <= best.threshold ? left_rows : right_rows).push_back(i);
        } else {
            const auto& x = ds.categorical(best.feature);
            for (std::size_t i : rows) {
                const bool goes_left =
                    std::binary_search(best.left_levels.begin(), best.left_levels.end(), x[i]);
                (goes_left ? left_rows : right_rows).push_back(i);
            }
        }

        nodes[index].is_leaf = false;
        nodes[index].feature = best.feature;
        nodes[index].threshold = best.threshold;
        nodes[index].left_levels = std::move(best.left_levels);
        const std::size_t left = grow(std::move(left_rows), depth + 1);
        const std::size_t right = grow(std::move(right_rows), depth + 1);
        nodes[index].left = left;
        nodes[index].right = right;
        return index;
    }
};

}  // namespace

TreeModel::TreeModel(tabular::Schema schema, std::vector<TreeNode> nodes, TreeFitOptions options)
    : schema_(std::move(schema)), nodes_(std::move(nodes)), options_(options) {
    if (nodes_.empty()) throw ValidationError("tree must have at least one node");
    for (const auto& node : nodes_) {
        if (node.is_leaf) continue;
        if (node.feature >= schema_.features().size() || node.left >= nodes_.size() ||
            node.right >= nodes_.size())
            throw ValidationError("tree node references are out of range");
    }
}

std::size_t TreeModel::leaf_index(const tabular::Dataset& ds, std::size_t i) const {
    std::size_t at = 0;
    while (!nodes_[at].is_leaf) {
        const TreeNode& node = nodes_[at];
        bool goes_left;
        if (node.left_levels.empty()) {
            goes_left = ds.numeric(node.feature)[i] <= node.threshold;
        } else {
            goes_left = std::binary_search(node.left_levels.begin(), node.left_levels.end(),
                                           ds.categorical(node.feature)[i]);
        }
        at = goes_left ? node.left : node.right;
    }
    return at;
}

double TreeModel::eval_row(const tabular::Dataset& ds, std::size_t i) const {
    return nodes_[leaf_index(ds, i)].value;
}

int TreeModel::depth() const {
    // Iterative depth over the flat array; children always follow parents.
    std::vector<int> node_depth(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (nodes_[k].is_leaf) {
            deepest = std::max(deepest, node_depth[k]);
        } else {
            node_depth[nodes_[k].left] = node_depth[k] + 1;
            node_depth[nodes_[k].right] = node_depth[k] + 1;
        }
    }
    return deepest;
}

std::size_t TreeModel::n_leaves() const {
    std::size_t count = 0;
    for (const auto& node : nodes_)
        if (node.is_leaf) ++count;
    return count;
}

bool TreeModel::uses_feature(std::size_t j) const {
    for (const auto& node : nodes_)
        if (!node.is_leaf && node.feature == j) return true;
    return false;
}

TreeModel fit_tree(const tabular::Dataset& ds, const TreeFitOptions& options) {
    if (options.max_depth < 0) throw ValidationError("max_depth must be non-negative");
    if (options.min_leaf_size < 1) throw ValidationError("min_leaf_size must be at least 1");
    if (ds.n_rows() == 0) throw ValidationError("cannot fit a tree on an empty dataset");

    std::vector<std::size_t> rows(ds.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Builder builder{ds, options, {}};
    builder.grow(std::move(rows), 0);
    return TreeModel(ds.schema(), std::move(builder.nodes), options);
}

nlohmann::json TreeModel::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : nodes_) {
        if (node.is_leaf) {
            nodes.push_back({{"leaf", true}, {"value", node.value}});
        } else {
            nlohmann::json n{{"leaf", false},
                             {"value", node.value},
                             {"feature", node.feature},
                             {"left", node.left},
                             {"right", node.right}};
            if (node.left_levels.empty())
                n["threshold"] = node.threshold;
            else
                n["left_levels"] = node.left_levels;
            nodes.push_back(std::move(n));
        }
    }
    return nlohmann::json{{"format", "claro-model"},
                          {"version", 1},
                          {"type", "tree"},
                          {"schema", schema_.to_json()},
                          {"max_depth", options_.max_depth},
                          {"min_leaf_size", options_.min_leaf_size},
                          {"nodes", std::move(nodes)}};
}

TreeModel TreeModel::from_json(const nlohmann::json& j) {
    try {
        tabular::Schema schema = tabular::Schema::from_json(j.at("schema"));
        TreeFitOptions options;
        options.max_depth = j.at("max_depth").get<int>();
        options.min_leaf_size = j.at("min_leaf_size").get<std::size_t>();
        std::vector<TreeNode> nodes;
        for (const auto& jn : j.at("nodes")) {
            TreeNode node;
            node.is_leaf = jn.at("leaf").get<bool>();
            node.value = jn.at("value").get<double>();
            if (!node.is_leaf) {
                node.feature = jn.at("feature").get<std::size_t>();
                node.left = jn.at("left").get<std::size_t>();
                node.right = jn.at("right").get<std::size_t>();
                if (jn.contains("left_levels"))
                    node.left_levels = jn.at("left_levels").get<std::vector<std::int32_t>>();
                else
                    node.threshold = jn.at("threshold").get<double>();
            }
            nodes.push_back(std::move(node));
        }
        return TreeModel(std::move(schema), std::move(nodes), options);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tree model json: ") + e.what());
    }
}

}  // namespace claro::models
