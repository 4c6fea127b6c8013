#pragma once

// Comparator policies: personalization tree, one-vs-all causal trees, naive
// distill-then-optimize, price regression, constant and historical pricing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sptlab/dataset.hpp"
#include "sptlab/partition.hpp"
#include "sptlab/policy_tree.hpp"
#include "sptlab/random.hpp"
#include "sptlab/spt.hpp"
#include "sptlab/teacher.hpp"

namespace sptlab {

/// Treatment index per row: the observed price snapped to the nearest grid
/// price, midpoints going down.
struct TreatmentAssignment {
    std::vector<std::size_t> index;
};

inline TreatmentAssignment assign_treatments(std::span<const double> prices, const PriceGrid& grid) {
    TreatmentAssignment a;
    a.index.reserve(prices.size());
    for (double p : prices) a.index.push_back(grid.nearest(p));
    return a;
}

// ---------------------------------------------------------------------------
// Personalization tree
// ---------------------------------------------------------------------------

/// Node score max_t (sum of observed revenue p*y under t) / (count under t),
/// over treatments observed in the node. Stats: [revenue_0, count_0, ...].
struct PersonalizationCriterion {
    std::span<const double> revenue;  // p_i * y_i
    std::span<const std::size_t> treatment;
    std::size_t n_treatments;

    [[nodiscard]] std::size_t stat_width() const noexcept { return 2 * n_treatments; }
    void accumulate(std::span<double> s, std::size_t i) const noexcept {
        s[2 * treatment[i]] += revenue[i];
        s[2 * treatment[i] + 1] += 1.0;
    }
    [[nodiscard]] LeafRevenue best(std::span<const double> s) const noexcept {
        LeafRevenue b{0, -std::numeric_limits<double>::infinity()};
        for (std::size_t t = 0; t < n_treatments; ++t) {
            const double c = s[2 * t + 1];
            if (c < 0.5) continue;
            const double avg = s[2 * t] / c;
            if (avg > b.revenue_sum) b = {t, avg};
        }
        return b;
    }
    [[nodiscard]] double score(std::span<const double> s) const noexcept { return best(s).revenue_sum; }
};

namespace detail {
inline void check_assignment(const Dataset& data, const PriceGrid& grid, const TreatmentAssignment& assign) {
    if (assign.index.size() != data.size())
        throw std::invalid_argument("treatment assignment length does not match the dataset");
    for (auto t : assign.index)
        if (t >= grid.size()) throw std::invalid_argument("treatment index outside the price grid");
}
inline std::vector<double> observed_revenue(const Dataset& data) {
    std::vector<double> r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) r[i] = data.prices()[i] * data.outcomes()[i];
    return r;
}
}  // namespace detail

/// Treatment and impurity value a personalization-tree leaf would take.
inline LeafRevenue pt_impurity(const Dataset& data, const PriceGrid& grid, const TreatmentAssignment& assign,
                               std::span<const std::size_t> rows) {
    detail::check_assignment(data, grid, assign);
    if (rows.empty()) throw std::invalid_argument("pt_impurity: empty row set");
    const auto revenue = detail::observed_revenue(data);
    PersonalizationCriterion crit{revenue, assign.index, grid.size()};
    return crit.best(node_stats(crit, rows));
}

/// Leaves store revenue_sum = impurity * n_train (the leaf's observed
/// average revenue at its treatment, scaled to the leaf).
inline PolicyTree fit_pt(const Dataset& data, const PriceGrid& grid, const TreatmentAssignment& assign,
                         const FitConfig& config) {
    detail::check_assignment(data, grid, assign);
    const auto revenue = detail::observed_revenue(data);
    PersonalizationCriterion crit{revenue, assign.index, grid.size()};
    auto grown = grow_tree(data.features(), all_rows(data.size()), crit, config);
    return detail::to_policy(grown, grid, data.feature_names(), [&](const GrownNode& g) {
        auto b = crit.best(g.stats);
        return std::pair{grid[b.price_index], b.revenue_sum * static_cast<double>(g.count)};
    });
}

// ---------------------------------------------------------------------------
// One-vs-all causal trees
// ---------------------------------------------------------------------------

/// Smallest treated and control group a causal leaf may hold in the
/// structure sample.
inline constexpr std::size_t kCausalMinGroup = 2;

/// Adaptive causal-tree criterion: a node scores n * (mean_t - mean_c)^2,
/// so a split maximizes the spread of leaf effect estimates.
/// Stats: [n_treated, sum_y_treated, n_control, sum_y_control].
struct CausalCriterion {
    std::span<const double> outcome;
    std::span<const std::uint8_t> treated;

    [[nodiscard]] std::size_t stat_width() const noexcept { return 4; }
    void accumulate(std::span<double> s, std::size_t i) const noexcept {
        const std::size_t o = treated[i] ? 0 : 2;
        s[o] += 1.0;
        s[o + 1] += outcome[i];
    }
    [[nodiscard]] double score(std::span<const double> s) const noexcept {
        if (s[0] < kCausalMinGroup || s[2] < kCausalMinGroup) return -std::numeric_limits<double>::infinity();
        const double effect = s[1] / s[0] - s[3] / s[2];
        return (s[0] + s[2]) * effect * effect;
    }
};

struct EffectNode {
    bool is_leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double treated_mean = 0.0;
    double control_mean = 0.0;
    std::size_t n_treated = 0;  ///< estimation rows behind the means
    std::size_t n_control = 0;

    [[nodiscard]] double effect() const noexcept { return treated_mean - control_mean; }
    friend bool operator==(const EffectNode&, const EffectNode&) = default;
};

/// Treatment-effect tree for one price against all others.
struct EffectTree {
    std::size_t treatment = 0;
    std::vector<EffectNode> nodes;  // root is node 0

    [[nodiscard]] const EffectNode& leaf_of(std::span<const double> x) const {
        std::size_t id = 0;
        while (!nodes[id].is_leaf) id = x[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
        return nodes[id];
    }
    [[nodiscard]] std::size_t n_leaves() const noexcept {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](auto& n) { return n.is_leaf; }));
    }
    friend bool operator==(const EffectTree&, const EffectTree&) = default;
};

/// One effect tree per grid price. An item is offered the price with the
/// largest p_t * E[Y | P = t, leaf_t(x)], ties to the lowest price.
class OneVsAllPolicy {
public:
    OneVsAllPolicy(std::vector<EffectTree> trees, PriceGrid grid, std::vector<std::string> feature_names = {})
        : trees_(std::move(trees)), grid_(std::move(grid)), feature_names_(std::move(feature_names)) {
        if (trees_.size() != grid_.size())
            throw std::invalid_argument("OneVsAllPolicy: need one tree per grid price");
    }

    [[nodiscard]] std::size_t predict_index(std::span<const double> x) const {
        std::size_t best = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            const double v = grid_[t] * trees_[t].leaf_of(x).treated_mean;
            if (v > best_value) {
                best_value = v;
                best = t;
            }
        }
        return best;
    }
    [[nodiscard]] double predict_price(std::span<const double> x) const { return grid_[predict_index(x)]; }

    [[nodiscard]] const std::vector<EffectTree>& trees() const noexcept { return trees_; }
    [[nodiscard]] const PriceGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    /// Leaves summed over all per-price trees.
    [[nodiscard]] std::size_t n_leaves() const noexcept {
        std::size_t s = 0;
        for (const auto& t : trees_) s += t.n_leaves();
        return s;
    }

    friend bool operator==(const OneVsAllPolicy&, const OneVsAllPolicy&) = default;

private:
    std::vector<EffectTree> trees_;
    PriceGrid grid_;
    std::vector<std::string> feature_names_;
};

namespace detail {

/// Fills leaf and internal means from the estimation rows; a node whose
/// treated or control group is empty inherits its parent's estimate.
inline void honest_estimates(EffectTree& tree, const Matrix& x, std::span<const double> y,
                             std::span<const std::uint8_t> treated, std::span<const std::size_t> est_rows,
                             const std::array<double, 4>& fallback) {
    std::vector<std::array<double, 4>> acc(tree.nodes.size(), {0, 0, 0, 0});
    for (auto i : est_rows) {
        std::size_t id = 0;
        while (true) {
            auto& a = acc[id];
            const std::size_t o = treated[i] ? 0 : 2;
            a[o] += 1.0;
            a[o + 1] += y[i];
            const auto& n = tree.nodes[id];
            if (n.is_leaf) break;
            id = x(i, n.feature) <= n.threshold ? n.left : n.right;
        }
    }
    auto assign = [&](auto&& self, std::size_t id, const std::array<double, 4>& parent) -> void {
        const auto& a = acc[id];
        const auto& use = (a[0] > 0 && a[2] > 0) ? a : parent;
        auto& n = tree.nodes[id];
        n.treated_mean = use[1] / use[0];
        n.control_mean = use[3] / use[2];
        n.n_treated = static_cast<std::size_t>(use[0]);
        n.n_control = static_cast<std::size_t>(use[2]);
        if (!n.is_leaf) {
            self(self, n.left, use);
            self(self, n.right, use);
        }
    };
    assign(assign, 0, fallback);
}

}  // namespace detail

/// Fits one honest effect tree per price. Rows are split once (by seed) into
/// a structure half, which chooses the splits, and an estimation half, which
/// supplies the leaf means; the same split serves every treatment.
inline OneVsAllPolicy fit_ct_one_vs_all(const Dataset& data, const PriceGrid& grid, const TreatmentAssignment& assign,
                                        const FitConfig& config, std::uint64_t seed) {
    detail::check_assignment(data, grid, assign);
    if (data.size() < 2) throw std::invalid_argument("fit_ct_one_vs_all: need at least 2 rows");
    CounterRng rng(seed, 0xCA05A1);
    auto perm = random_permutation(data.size(), rng);
    const std::size_t half = (data.size() + 1) / 2;
    std::vector<std::size_t> structure(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> estimation(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
    std::sort(structure.begin(), structure.end());
    std::sort(estimation.begin(), estimation.end());

    const auto& y = data.outcomes();
    std::vector<EffectTree> trees;
    std::vector<std::uint8_t> treated(data.size());
    for (std::size_t t = 0; t < grid.size(); ++t) {
        std::array<double, 4> overall{0, 0, 0, 0};
        for (std::size_t i = 0; i < data.size(); ++i) {
            treated[i] = assign.index[i] == t;
            const std::size_t o = treated[i] ? 0 : 2;
            overall[o] += 1.0;
            overall[o + 1] += y[i];
        }
        if (overall[0] == 0 || overall[2] == 0)
            throw std::invalid_argument("fit_ct_one_vs_all: price index " + std::to_string(t) +
                                        " has an empty treated or control group");

        CausalCriterion crit{y, treated};
        auto grown = grow_tree(data.features(), structure, crit, config);
        EffectTree tree;
        tree.treatment = t;
        for (const auto& g : grown) {
            EffectNode n;
            n.is_leaf = g.is_leaf;
            n.feature = g.feature;
            n.threshold = g.threshold;
            n.left = g.left;
            n.right = g.right;
            tree.nodes.push_back(n);
        }
        detail::honest_estimates(tree, data.features(), y, treated, estimation, overall);
        trees.push_back(std::move(tree));
    }
    return OneVsAllPolicy(std::move(trees), grid, data.feature_names());
}

inline nlohmann::json one_vs_all_to_json(const OneVsAllPolicy& policy) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : policy.trees()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (std::size_t id = 0; id < t.nodes.size(); ++id) {
            const auto& n = t.nodes[id];
            if (n.is_leaf)
                nodes.push_back({{"id", id}, {"kind", "leaf"}, {"treated_mean", n.treated_mean},
                                 {"control_mean", n.control_mean}, {"effect", n.effect()},
                                 {"n_treated", n.n_treated}, {"n_control", n.n_control}});
            else
                nodes.push_back({{"id", id}, {"kind", "split"}, {"feature", n.feature}, {"threshold", n.threshold},
                                 {"left", n.left}, {"right", n.right}, {"treated_mean", n.treated_mean},
                                 {"control_mean", n.control_mean}, {"n_treated", n.n_treated},
                                 {"n_control", n.n_control}});
        }
        trees.push_back({{"treatment", t.treatment}, {"price", policy.grid()[t.treatment]}, {"root", 0},
                         {"nodes", std::move(nodes)}});
    }
    return {{"kind", "one_vs_all"},
            {"feature_names", policy.feature_names()},
            {"price_grid", policy.grid().values()},
            {"trees", std::move(trees)}};
}

inline OneVsAllPolicy one_vs_all_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "one_vs_all")
            throw std::invalid_argument("one-vs-all JSON: wrong kind");
        std::vector<EffectTree> trees;
        for (const auto& jt : j.at("trees")) {
            EffectTree t;
            t.treatment = jt.at("treatment").get<std::size_t>();
            const auto& jn = jt.at("nodes");
            t.nodes.resize(jn.size());
            for (const auto& e : jn) {
                const auto id = e.at("id").get<std::size_t>();
                if (id >= t.nodes.size()) throw std::invalid_argument("one-vs-all JSON: node id out of range");
                EffectNode n;
                n.is_leaf = e.at("kind").get<std::string>() == "leaf";
                if (!n.is_leaf) {
                    n.feature = e.at("feature").get<std::size_t>();
                    n.threshold = e.at("threshold").get<double>();
                    n.left = e.at("left").get<std::size_t>();
                    n.right = e.at("right").get<std::size_t>();
                    if (n.left >= jn.size() || n.right >= jn.size() || n.left <= id || n.right <= id)
                        throw std::invalid_argument("one-vs-all JSON: bad child reference");
                }
                n.treated_mean = e.at("treated_mean").get<double>();
                n.control_mean = e.at("control_mean").get<double>();
                n.n_treated = e.at("n_treated").get<std::size_t>();
                n.n_control = e.at("n_control").get<std::size_t>();
                t.nodes[id] = n;
            }
            if (t.nodes.empty()) throw std::invalid_argument("one-vs-all JSON: empty tree");
            trees.push_back(std::move(t));
        }
        return OneVsAllPolicy(std::move(trees), PriceGrid(j.at("price_grid").get<std::vector<double>>()),
                              j.value("feature_names", std::vector<std::string>{}));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("one-vs-all JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Naive distillation: predict the teacher, then optimize
// ---------------------------------------------------------------------------

/// n x m teacher probabilities f(x_i, p_k): the regression target of the
/// naive student.
inline Matrix distill_targets(const TeacherModel& teacher, const Matrix& features, const PriceGrid& grid) {
    Matrix t(features.rows(), grid.size());
    for (std::size_t i = 0; i < features.rows(); ++i)
        for (std::size_t k = 0; k < grid.size(); ++k) t(i, k) = teacher.predict_row(i, features.row(i), grid[k]);
    return t;
}

/// Multi-output squared error; the node score is minus the node SSE.
/// Stats: [sum_0..sum_{m-1}, sum of squares, count].
struct MultiOutputMseCriterion {
    const Matrix& targets;

    [[nodiscard]] std::size_t stat_width() const noexcept { return targets.cols() + 2; }
    void accumulate(std::span<double> s, std::size_t i) const noexcept {
        const std::size_t m = targets.cols();
        auto r = targets.row(i);
        double sq = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            s[k] += r[k];
            sq += r[k] * r[k];
        }
        s[m] += sq;
        s[m + 1] += 1.0;
    }
    [[nodiscard]] double score(std::span<const double> s) const noexcept {
        const std::size_t m = targets.cols();
        const double n = s[m + 1];
        if (n < 0.5) return 0.0;
        double explained = 0.0;
        for (std::size_t k = 0; k < m; ++k) explained += s[k] * s[k];
        return -(s[m] - explained / n);
    }
};

/// Regression tree on x approximating the teacher's demand vector; each leaf
/// then prices at argmax_k p_k * mean f(., p_k).
inline PolicyTree fit_naive_distill(const TeacherModel& teacher, const Matrix& features, const PriceGrid& grid,
                                    const FitConfig& config, std::vector<std::string> feature_names = {}) {
    if (features.rows() == 0) throw std::invalid_argument("fit_naive_distill: no rows");
    const Matrix targets = distill_targets(teacher, features, grid);
    MultiOutputMseCriterion crit{targets};
    auto grown = grow_tree(features, all_rows(features.rows()), crit, config);
    return detail::to_policy(grown, grid, std::move(feature_names), [&](const GrownNode& g) {
        std::vector<double> revenue(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) revenue[k] = grid[k] * g.stats[k];
        auto best = best_column(revenue);
        return std::pair{grid[best.price_index], best.revenue_sum};
    });
}

/// Mean over rows and outputs of (target - leaf mean)^2 for the partition the
/// tree induces on `features`.
inline double multi_output_mse(const PolicyTree& tree, const Matrix& features, const Matrix& targets) {
    const std::size_t n = features.rows(), m = targets.cols();
    std::vector<std::size_t> leaf(n);
    std::vector<std::vector<double>> sums(tree.nodes().size(), std::vector<double>(m, 0.0));
    std::vector<double> counts(tree.nodes().size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        leaf[i] = tree.leaf_of(features.row(i));
        counts[leaf[i]] += 1.0;
        for (std::size_t k = 0; k < m; ++k) sums[leaf[i]][k] += targets(i, k);
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            const double e = targets(i, k) - sums[leaf[i]][k] / counts[leaf[i]];
            sse += e * e;
        }
    return sse / static_cast<double>(n * m);
}

// ---------------------------------------------------------------------------
// Price regression: regress the teacher-optimal price directly
// ---------------------------------------------------------------------------

struct ScalarMseCriterion {
    std::span<const double> target;

    [[nodiscard]] std::size_t stat_width() const noexcept { return 3; }
    void accumulate(std::span<double> s, std::size_t i) const noexcept {
        s[0] += target[i];
        s[1] += target[i] * target[i];
        s[2] += 1.0;
    }
    [[nodiscard]] double score(std::span<const double> s) const noexcept {
        return s[2] < 0.5 ? 0.0 : -(s[1] - s[0] * s[0] / s[2]);
    }
};

/// Least-squares regression tree on each item's teacher-optimal grid price;
/// leaves prescribe the mean target price, which generally lies off the
/// teacher grid. The returned tree's grid is the set of its leaf prices.
inline PolicyTree fit_price_regression(const TeacherModel& teacher, const Matrix& features, const PriceGrid& grid,
                                       const FitConfig& config, std::vector<std::string> feature_names = {}) {
    const std::size_t n = features.rows();
    if (n == 0) throw std::invalid_argument("fit_price_regression: no rows");
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best_rev = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double r = grid[k] * teacher.predict_row(i, features.row(i), grid[k]);
            if (r > best_rev) {
                best_rev = r;
                target[i] = grid[k];
            }
        }
    }
    ScalarMseCriterion crit{target};
    auto grown = grow_tree(features, all_rows(n), crit, config);
    std::vector<double> leaf_prices;
    for (const auto& g : grown)
        if (g.is_leaf) leaf_prices.push_back(g.stats[0] / g.stats[2]);
    std::sort(leaf_prices.begin(), leaf_prices.end());
    leaf_prices.erase(std::unique(leaf_prices.begin(), leaf_prices.end()), leaf_prices.end());
    return detail::to_policy(grown, PriceGrid(leaf_prices), std::move(feature_names), [](const GrownNode& g) {
        return std::pair{g.stats[0] / g.stats[2], g.stats[0]};
    });
}

// ---------------------------------------------------------------------------
// Demand student: a regression tree over (x, p) imitating the teacher, then
// priced by optimizing against the student itself
// ---------------------------------------------------------------------------

/// Student demand model over the augmented input (x, p), with p as feature
/// `dim`. Prices are chosen by maximizing p * student(x, p) over
/// [price_lo, price_hi]. The student is piecewise constant in p, so the
/// maximum sits at a right interval end: a p-threshold or price_hi.
class DemandStudentPolicy {
public:
    DemandStudentPolicy(std::size_t dim, RegressionTree tree, double price_lo, double price_hi)
        : dim_(dim), tree_(std::move(tree)), lo_(price_lo), hi_(price_hi) {
        if (!(lo_ <= hi_)) throw std::invalid_argument("DemandStudentPolicy: empty price range");
        for (const auto& n : tree_.nodes)
            if (n.feature == static_cast<int>(dim_) && n.threshold >= lo_ && n.threshold < hi_)
                candidates_.push_back(n.threshold);
        candidates_.push_back(hi_);
        std::sort(candidates_.begin(), candidates_.end());
        candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const RegressionTree& tree() const noexcept { return tree_; }
    [[nodiscard]] std::size_t n_leaves() const {
        return static_cast<std::size_t>(std::count_if(tree_.nodes.begin(), tree_.nodes.end(),
                                                      [](const RegressionNode& n) { return n.feature < 0; }));
    }

    [[nodiscard]] double demand(std::span<const double> x, double price) const {
        if (x.size() < dim_) throw std::invalid_argument("DemandStudentPolicy: feature vector too short");
        return tree_.eval([&](std::size_t f) { return f < dim_ ? x[f] : price; });
    }

    [[nodiscard]] double predict_price(std::span<const double> x) const {
        double best_price = candidates_.front(), best = -std::numeric_limits<double>::infinity();
        for (double p : candidates_) {
            const double r = p * demand(x, p);
            if (r > best) {
                best = r;
                best_price = p;
            }
        }
        return best_price;
    }

private:
    std::size_t dim_;
    RegressionTree tree_;
    double lo_, hi_;
    std::vector<double> candidates_;
};

/// Least-squares tree on rows (x_i, p_k) for every item i and grid price k,
/// target f_hat(x_i, p_k). Price range defaults to the grid's span.
inline DemandStudentPolicy fit_demand_student(const TeacherModel& teacher, const Matrix& features,
                                              const PriceGrid& grid, const FitConfig& config, double price_lo,
                                              double price_hi) {
    const std::size_t n = features.rows(), d = features.cols(), m = grid.size();
    if (n == 0) throw std::invalid_argument("fit_demand_student: no rows");
    Matrix z(n * m, d + 1);
    std::vector<double> target(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t r = i * m + k;
            for (std::size_t j = 0; j < d; ++j) z(r, j) = features(i, j);
            z(r, d) = grid[k];
            target[r] = teacher.predict_row(i, features.row(i), grid[k]);
        }
    ScalarMseCriterion crit{target};
    const auto grown = grow_tree(z, all_rows(n * m), crit, config);
    RegressionTree tree;
    tree.nodes.reserve(grown.size());
    for (const auto& g : grown) {
        RegressionNode node;
        if (g.is_leaf) {
            node.value = g.stats[0] / g.stats[2];
        } else {
            node.feature = static_cast<int>(g.feature);
            node.threshold = g.threshold;
            node.left = g.left;
            node.right = g.right;
        }
        tree.nodes.push_back(node);
    }
    return DemandStudentPolicy(d, std::move(tree), price_lo, price_hi);
}

inline DemandStudentPolicy fit_demand_student(const TeacherModel& teacher, const Matrix& features,
                                              const PriceGrid& grid, const FitConfig& config) {
    return fit_demand_student(teacher, features, grid, config, grid[0], grid[grid.size() - 1]);
}

// ---------------------------------------------------------------------------
// Constant and historical pricing
// ---------------------------------------------------------------------------

/// Single leaf at the grid-wide best price.
inline PolicyTree constant_price_policy(const RevenueMatrix& revmat) {
    if (revmat.rows() == 0) throw std::invalid_argument("constant_price_policy: empty revenue matrix");
    auto best = leaf_revenue(revmat, all_rows(revmat.rows()));
    return PolicyTree({PolicyNode::make_leaf(revmat.grid[best.price_index], best.revenue_sum, revmat.rows())}, 0,
                      revmat.grid);
}

/// Mean of p_i * f(x_i, p_i) at the prices actually charged.
inline double historical_policy_revenue(const Dataset& data, const TeacherModel& truth) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        s += data.prices()[i] * truth.predict_row(i, data.features().row(i), data.prices()[i]);
    return s / static_cast<double>(data.size());
}

}  // namespace sptlab
