#pragma once

// Student prescriptive tree: greedy recursive partitioning that maximizes the
// teacher-predicted revenue of pricing each segment at its best grid price.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sptlab/partition.hpp"
#include "sptlab/policy_tree.hpp"
#include "sptlab/teacher.hpp"

namespace sptlab {

struct LeafRevenue {
    std::size_t price_index = 0;
    double revenue_sum = 0.0;
};

/// Best column of summed revenues; ties go to the lowest price.
inline LeafRevenue best_column(std::span<const double> column_sums) {
    LeafRevenue best{0, column_sums[0]};
    for (std::size_t k = 1; k < column_sums.size(); ++k)
        if (column_sums[k] > best.revenue_sum) best = {k, column_sums[k]};
    return best;
}

/// Node score max_k sum_{i in node} r(i,k), accumulated column by column.
struct RevenueCriterion {
    const Matrix& revenue;

    [[nodiscard]] std::size_t stat_width() const noexcept { return revenue.cols(); }
    void accumulate(std::span<double> s, std::size_t i) const noexcept {
        auto r = revenue.row(i);
        for (std::size_t k = 0; k < s.size(); ++k) s[k] += r[k];
    }
    [[nodiscard]] double score(std::span<const double> s) const noexcept { return best_column(s).revenue_sum; }
};

inline LeafRevenue leaf_revenue(const RevenueMatrix& revmat, std::span<const std::size_t> rows) {
    if (rows.empty()) throw std::invalid_argument("leaf_revenue: empty row set");
    RevenueCriterion crit{revmat.values};
    return best_column(node_stats(crit, rows));
}

inline std::optional<SplitCandidate> best_split(const RevenueMatrix& revmat, const Matrix& features,
                                                std::span<const std::size_t> rows, const FitConfig& config) {
    RevenueCriterion crit{revmat.values};
    auto total = node_stats(crit, rows);
    return find_best_split(features, rows, crit, config.min_leaf, total, crit.score(total));
}

namespace detail {

/// Converts grown nodes to a policy, asking `leaf` for (price, revenue_sum).
template <class LeafFn>
PolicyTree to_policy(const std::vector<GrownNode>& grown, const PriceGrid& grid,
                     std::vector<std::string> feature_names, LeafFn&& leaf) {
    std::vector<PolicyNode> nodes;
    nodes.reserve(grown.size());
    for (const auto& g : grown) {
        if (g.is_leaf) {
            auto [price, revenue] = leaf(g);
            nodes.push_back(PolicyNode::make_leaf(price, revenue, g.count));
        } else {
            nodes.push_back(PolicyNode::make_split(g.feature, g.threshold, g.left, g.right));
        }
    }
    return PolicyTree(std::move(nodes), 0, grid, std::move(feature_names));
}

}  // namespace detail

/// Greedy depth-first fit. A node stops splitting at max_depth, below
/// minsplit rows, or when no split strictly raises the predicted revenue.
inline PolicyTree fit_spt(const Matrix& features, const RevenueMatrix& revmat, const FitConfig& config,
                          std::vector<std::string> feature_names = {}) {
    if (features.rows() == 0) throw std::invalid_argument("fit_spt: no training rows");
    if (features.rows() != revmat.rows())
        throw std::invalid_argument("fit_spt: features have " + std::to_string(features.rows()) +
                                    " rows but the revenue matrix has " + std::to_string(revmat.rows()));
    RevenueCriterion crit{revmat.values};
    auto grown = grow_tree(features, all_rows(features.rows()), crit, config);
    return detail::to_policy(grown, revmat.grid, std::move(feature_names), [&](const GrownNode& g) {
        auto best = best_column(g.stats);
        return std::pair{revmat.grid[best.price_index], best.revenue_sum};
    });
}

}  // namespace sptlab
