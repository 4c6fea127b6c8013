#pragma once

// Exhaustive axis-aligned split search and depth-first tree growth, shared by
// every tree learner in the library. A learner supplies a criterion that turns
// additive per-row statistics into a node score; the machinery here finds the
// split maximizing score(left) + score(right).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sptlab/matrix.hpp"

namespace sptlab {

inline constexpr int kUnboundedDepth = std::numeric_limits<int>::max();

/// Termination rules for greedy tree growth.
struct FitConfig {
    int max_depth = 3;          ///< k; kUnboundedDepth for minsplit-only runs
    std::size_t minsplit = 2;   ///< nodes with fewer rows are not split
    std::size_t min_leaf = 1;   ///< each child needs at least this many rows
    /// false grows to full width: splits that merely tie the parent are
    /// taken too, so only max_depth / minsplit / min_leaf stop growth.
    bool require_gain = true;

    void validate() const {
        if (max_depth < 0) throw std::invalid_argument("FitConfig: max_depth must be >= 0");
        if (min_leaf < 1) throw std::invalid_argument("FitConfig: min_leaf must be >= 1");
        if (minsplit < 2) throw std::invalid_argument("FitConfig: minsplit must be >= 2");
        if (minsplit < 2 * min_leaf)
            throw std::invalid_argument("FitConfig: minsplit (" + std::to_string(minsplit) +
                                        ") must be >= 2 * min_leaf (" + std::to_string(min_leaf) + ")");
    }
};

struct SplitCandidate {
    std::size_t feature_index = 0;
    double threshold = 0.0;
    double combined_revenue = 0.0;  ///< score(left) + score(right)
    std::size_t left_count = 0;
    std::size_t right_count = 0;
};

/// Additive node statistics plus a score over them. `score` may return -inf to
/// mark a child as inadmissible (e.g. a causal leaf without controls).
template <class C>
concept SplitCriterion = requires(const C& c, std::span<double> s, std::span<const double> cs,
                                  std::size_t row) {
    { c.stat_width() } -> std::convertible_to<std::size_t>;
    c.accumulate(s, row);
    { c.score(cs) } -> std::convertible_to<double>;
};

/// Gains below this (relative to the parent score) are treated as rounding
/// noise, so splits whose children pick the same action are never accepted.
inline bool strictly_improves(double combined, double parent) noexcept {
    return combined > parent + 1e-12 * std::max(1.0, std::abs(parent));
}

template <SplitCriterion C>
std::vector<double> node_stats(const C& crit, std::span<const std::size_t> rows) {
    std::vector<double> s(crit.stat_width(), 0.0);
    for (auto i : rows) crit.accumulate(s, i);
    return s;
}

/// Best split of `rows` over all features, thresholds at observed values
/// ("x_j <= s" goes left). Ties go to the lowest feature, then the lowest
/// threshold. Returns nothing when no admissible split strictly beats
/// `parent_score` (or, with require_gain off, when none reaches it).
template <SplitCriterion C>
std::optional<SplitCandidate> find_best_split(const Matrix& features, std::span<const std::size_t> rows,
                                              const C& crit, std::size_t min_leaf,
                                              std::span<const double> total, double parent_score,
                                              bool require_gain = true) {
    const std::size_t n = rows.size();
    const std::size_t width = crit.stat_width();
    if (n < 2) return std::nullopt;

    std::optional<SplitCandidate> best;
    std::vector<std::size_t> order(rows.begin(), rows.end());
    std::vector<double> left(width), right(width);

    for (std::size_t j = 0; j < features.cols(); ++j) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double xa = features(a, j), xb = features(b, j);
            return xa < xb || (xa == xb && a < b);
        });
        std::fill(left.begin(), left.end(), 0.0);
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            crit.accumulate(left, order[pos]);
            const double xv = features(order[pos], j);
            if (xv == features(order[pos + 1], j)) continue;
            const std::size_t lc = pos + 1, rc = n - lc;
            if (lc < min_leaf) continue;
            if (rc < min_leaf) break;
            for (std::size_t w = 0; w < width; ++w) right[w] = total[w] - left[w];
            const double s = crit.score(left) + crit.score(right);
            if (!std::isfinite(s)) continue;
            if (!best || s > best->combined_revenue) best = SplitCandidate{j, xv, s, lc, rc};
        }
    }
    if (!best) return std::nullopt;
    if (strictly_improves(best->combined_revenue, parent_score)) return best;
    if (!require_gain && !strictly_improves(parent_score, best->combined_revenue)) return best;
    return std::nullopt;
}

/// Node of a tree produced by grow_tree. Leaves keep their statistics so the
/// caller can decide what a leaf prescribes.
struct GrownNode {
    bool is_leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    int depth = 0;
    std::size_t count = 0;
    std::vector<double> stats;
};

/// Greedy top-down growth: a node becomes a leaf when it sits at max_depth,
/// holds fewer than minsplit rows, or has no strictly improving split (any
/// admissible split when config.require_gain is off). Nodes
/// are numbered in preorder; the root is node 0.
template <SplitCriterion C>
std::vector<GrownNode> grow_tree(const Matrix& features, std::vector<std::size_t> rows, const C& crit,
                                 const FitConfig& config) {
    config.validate();
    std::vector<GrownNode> nodes;

    auto build = [&](auto&& self, std::vector<std::size_t> node_rows, int depth) -> std::size_t {
        const std::size_t id = nodes.size();
        nodes.push_back({});
        auto stats = node_stats(crit, node_rows);
        const double score = crit.score(stats);

        std::optional<SplitCandidate> split;
        if (depth < config.max_depth && node_rows.size() >= config.minsplit && std::isfinite(score))
            split = find_best_split(features, node_rows, crit, config.min_leaf, stats, score, config.require_gain);

        nodes[id].depth = depth;
        nodes[id].count = node_rows.size();
        nodes[id].stats = std::move(stats);
        if (!split) return id;

        std::vector<std::size_t> lrows, rrows;
        lrows.reserve(split->left_count);
        rrows.reserve(split->right_count);
        for (auto i : node_rows)
            (features(i, split->feature_index) <= split->threshold ? lrows : rrows).push_back(i);
        node_rows.clear();
        node_rows.shrink_to_fit();

        const auto l = self(self, std::move(lrows), depth + 1);
        const auto r = self(self, std::move(rrows), depth + 1);
        auto& node = nodes[id];
        node.is_leaf = false;
        node.feature = split->feature_index;
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return id;
    };
    build(build, std::move(rows), 0);
    return nodes;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace sptlab
