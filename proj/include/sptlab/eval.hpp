#pragma once

// Counterfactual policy evaluation and the constructive regret-bound check.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sptlab/dataset.hpp"
#include "sptlab/policy_tree.hpp"
#include "sptlab/random.hpp"
#include "sptlab/spt.hpp"
#include "sptlab/synth.hpp"
#include "sptlab/teacher.hpp"

namespace sptlab {

template <class P>
concept PricingPolicy = requires(const P& p, std::span<const double> x) {
    { p.predict_price(x) } -> std::convertible_to<double>;
};

/// Fully personalized policy: each item gets the grid price that maximizes
/// the model's predicted revenue.
class ModelPolicy {
public:
    ModelPolicy(const TeacherModel& model, PriceGrid grid) : model_(&model), grid_(std::move(grid)) {}
    [[nodiscard]] double predict_price(std::span<const double> x) const {
        return optimal_price(*model_, x, grid_).price;
    }

private:
    const TeacherModel* model_;
    PriceGrid grid_;
};

/// Mean over rows of tau(x_i) * f(x_i, tau(x_i)) under `truth`.
template <PricingPolicy Policy>
double expected_revenue(const Policy& policy, const Matrix& features, const TeacherModel& truth) {
    if (features.rows() == 0) throw std::invalid_argument("expected_revenue: no rows");
    double s = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto x = features.row(i);
        const double price = policy.predict_price(x);
        s += price * truth.predict_row(i, x, price);
    }
    return s / static_cast<double>(features.rows());
}

/// Mean squared difference of prescribed prices.
template <PricingPolicy A, PricingPolicy B>
double policy_mse(const A& a, const B& b, const Matrix& features) {
    if (features.rows() == 0) throw std::invalid_argument("policy_mse: no rows");
    double s = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const double diff = a.predict_price(features.row(i)) - b.predict_price(features.row(i));
        s += diff * diff;
    }
    return s / static_cast<double>(features.rows());
}

// ---------------------------------------------------------------------------
// Regret bound
// ---------------------------------------------------------------------------

struct RegretBoundParams {
    double lipschitz = 0.0;      ///< L for p * f(x, p) in x (L2 norm)
    std::size_t dim = 1;         ///< d
    int depth = 0;               ///< k
    double teacher_error = 0.0;  ///< uniform bound on |f - f_hat|

    void validate() const {
        if (!(lipschitz >= 0.0)) throw std::invalid_argument("RegretBoundParams: L must be >= 0");
        if (!(teacher_error >= 0.0)) throw std::invalid_argument("RegretBoundParams: teacher error must be >= 0");
        if (dim < 1) throw std::invalid_argument("RegretBoundParams: d must be >= 1");
        if (depth < 0) throw std::invalid_argument("RegretBoundParams: k must be >= 0");
    }
};

/// 2^(1 - k/d) * L * sqrt(d) + 2 * K(n)
inline double regret_bound(const RegretBoundParams& p) {
    p.validate();
    const double d = static_cast<double>(p.dim);
    return std::exp2(1.0 - static_cast<double>(p.depth) / d) * p.lipschitz * std::sqrt(d) + 2.0 * p.teacher_error;
}

/// Policy on [0,1]^d made of m^d equal hypercubes, each priced from the probe
/// rows that fall inside it. Predicting into a cube without probes throws.
class HypercubePolicy {
public:
    HypercubePolicy(PolicyTree tree, std::vector<bool> empty_leaf, std::size_t cells_per_axis)
        : tree_(std::move(tree)), empty_(std::move(empty_leaf)), cells_per_axis_(cells_per_axis) {}

    [[nodiscard]] double predict_price(std::span<const double> x) const {
        const auto leaf = tree_.leaf_of(x);
        if (empty_[leaf])
            throw std::runtime_error("HypercubePolicy: query falls in a hypercube with no probe rows (leaf " +
                                     std::to_string(leaf) + ")");
        return tree_.nodes()[leaf].price;
    }
    [[nodiscard]] const PolicyTree& tree() const noexcept { return tree_; }
    [[nodiscard]] std::size_t cells_per_axis() const noexcept { return cells_per_axis_; }
    /// Depth the cube partition actually uses, d * log2(m).
    [[nodiscard]] int effective_depth() const noexcept { return tree_.max_depth_used(); }
    [[nodiscard]] std::size_t empty_cells() const noexcept {
        return static_cast<std::size_t>(std::count(empty_.begin(), empty_.end(), true));
    }

private:
    PolicyTree tree_;
    std::vector<bool> empty_;
    std::size_t cells_per_axis_;
};

/// Cells per axis: the largest power of two m with m^d <= 2^k, so the
/// bisection tree has depth d*log2(m) <= k.
inline std::size_t hypercube_cells_per_axis(int depth, std::size_t dim) {
    if (depth < 0 || dim < 1) throw std::invalid_argument("hypercube: need k >= 0 and d >= 1");
    return std::size_t{1} << (static_cast<std::size_t>(depth) / dim);
}

inline HypercubePolicy hypercube_policy(const TeacherModel& teacher, const PriceGrid& grid, int depth, std::size_t dim,
                                        const Matrix& probes) {
    if (probes.cols() != dim) throw std::invalid_argument("hypercube_policy: probe dimension mismatch");
    for (double v : probes.data())
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("hypercube_policy: probes must lie in [0,1]^d");
    const std::size_t m = hypercube_cells_per_axis(depth, dim);
    std::size_t levels = 0;
    while ((std::size_t{1} << levels) < m) ++levels;

    const RevenueMatrix revmat = revenue_matrix(teacher, probes, grid);
    std::vector<PolicyNode> nodes;
    std::vector<bool> empty;

    // Bisect axis 0 `levels` times, then axis 1, and so on.
    auto build = [&](auto&& self, std::vector<std::size_t> rows, std::vector<double> lo, std::vector<double> hi,
                     std::size_t axis, std::size_t level) -> std::size_t {
        const std::size_t id = nodes.size();
        nodes.push_back({});
        empty.push_back(false);
        if (axis == dim || levels == 0) {
            if (rows.empty()) {
                nodes[id] = PolicyNode::make_leaf(grid[0], 0.0, 0);
                empty[id] = true;
            } else {
                auto best = leaf_revenue(revmat, rows);
                nodes[id] = PolicyNode::make_leaf(grid[best.price_index], best.revenue_sum, rows.size());
            }
            return id;
        }
        const double mid = 0.5 * (lo[axis] + hi[axis]);
        std::vector<std::size_t> lrows, rrows;
        for (auto i : rows) (probes(i, axis) <= mid ? lrows : rrows).push_back(i);
        const std::size_t next_axis = level + 1 == levels ? axis + 1 : axis;
        const std::size_t next_level = level + 1 == levels ? 0 : level + 1;
        auto lhi = hi;
        lhi[axis] = mid;
        auto rlo = lo;
        rlo[axis] = mid;
        const auto l = self(self, std::move(lrows), lo, lhi, next_axis, next_level);
        const auto r = self(self, std::move(rrows), rlo, hi, next_axis, next_level);
        nodes[id] = PolicyNode::make_split(axis, mid, l, r);
        return id;
    };
    build(build, all_rows(probes.rows()), std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0), 0, 0);
    return HypercubePolicy(PolicyTree(std::move(nodes), 0, grid), std::move(empty), m);
}

/// Largest gradient norm of p * f(x, p) in x found by central differences
/// on a lattice over [0,1]^d and a subsample of the grid prices.
inline double lipschitz_estimate(const TeacherModel& truth, const PriceGrid& grid, std::size_t dim,
                                 std::size_t lattice = 41, std::size_t price_samples = 100) {
    const double h = 1e-6;
    std::size_t cells = 1;
    for (std::size_t j = 0; j < dim; ++j) cells *= lattice;
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / price_samples);
    std::vector<double> x(dim), xp(dim), xm(dim);
    double best = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        std::size_t rem = c;
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = static_cast<double>(rem % lattice) / static_cast<double>(lattice - 1);
            rem /= lattice;
        }
        for (std::size_t k = 0; k < grid.size(); k += stride) {
            const double p = grid[k];
            double norm2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                xp = x;
                xm = x;
                xp[j] += h;
                xm[j] -= h;
                const double g = p * (truth.predict_proba(xp, p) - truth.predict_proba(xm, p)) / (2 * h);
                norm2 += g * g;
            }
            best = std::max(best, std::sqrt(norm2));
        }
    }
    return best;
}

struct RegretCheck {
    double max_observed_regret = 0.0;
    double bound = 0.0;
    double slack = 0.0;
    double lipschitz = 0.0;
    int effective_depth = 0;
    [[nodiscard]] bool passed() const noexcept { return max_observed_regret <= bound + slack; }
};

/// Builds the hypercube policy from `n_probe` uniform probes (teacher = truth,
/// so the teacher error term is zero) and measures pointwise regret against
/// a 1000-point fine-grid optimum at `n_test` uniform points.
///
/// slack = (fine grid spacing) * max |d(p f)/dp| over the test points, the
/// most the fine-grid optimum can fall short of the continuous one.
inline RegretCheck verify_regret_bound(const TeacherModel& truth, double lipschitz, const PriceGrid& grid, int depth,
                                       std::size_t n_probe, std::size_t n_test, std::uint64_t seed) {
    const std::size_t d = truth.dim();
    CounterRng rng(seed, 0x4E6E7);
    Matrix probes(n_probe, d), tests(n_test, d);
    for (double& v : probes.data()) v = rng.uniform();
    for (double& v : tests.data()) v = rng.uniform();

    const auto policy = hypercube_policy(truth, grid, depth, d, probes);
    const PriceGrid fine = fine_grid(grid.values().front(), grid.values().back(), 1000);
    const double spacing = fine[1] - fine[0];

    RegretCheck out;
    out.lipschitz = lipschitz;
    out.effective_depth = policy.effective_depth();
    out.bound = regret_bound({lipschitz, d, out.effective_depth, 0.0});
    double max_slope = 0.0;
    for (std::size_t i = 0; i < n_test; ++i) {
        const auto x = tests.row(i);
        const auto star = optimal_price(truth, x, fine);
        const double chosen = policy.predict_price(x);
        out.max_observed_regret = std::max(out.max_observed_regret, star.revenue - chosen * truth.predict_proba(x, chosen));
        for (std::size_t k = 0; k + 1 < fine.size(); ++k) {
            const double a = fine[k] * truth.predict_proba(x, fine[k]);
            const double b = fine[k + 1] * truth.predict_proba(x, fine[k + 1]);
            max_slope = std::max(max_slope, std::abs(b - a) / spacing);
        }
    }
    out.slack = spacing * max_slope;
    return out;
}

/// f(x, p) = Phi(x_0 - p) on [0,1]^2: a smooth truth with a computable
/// Lipschitz constant, used to exercise the regret bound.
inline OracleTeacher designed_regret_truth() {
    return OracleTeacher(2, [](std::span<const double> x, double p) { return standard_normal_cdf(x[0] - p); });
}

}  // namespace sptlab
