#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sptlab/dataset.hpp"
#include "sptlab/partition.hpp"
#include "sptlab/random.hpp"

namespace sptlab {

/// Estimator of the probability that an item with features x sells at price p.
///
/// `predict_row` lets row-aligned teachers (precomputed tables) answer queries
/// about a known training row; model-based teachers ignore the row index.
class TeacherModel {
public:
    enum class Variant { gradient_boosted, oracle, table };

    virtual ~TeacherModel() = default;
    [[nodiscard]] virtual Variant variant() const noexcept = 0;
    [[nodiscard]] virtual std::size_t dim() const noexcept = 0;
    [[nodiscard]] virtual double predict_proba(std::span<const double> x, double price) const = 0;
    [[nodiscard]] virtual double predict_row(std::size_t /*row*/, std::span<const double> x, double price) const {
        return predict_proba(x, price);
    }

protected:
    void check_dim(std::span<const double> x) const {
        if (x.size() != dim())
            throw std::invalid_argument("teacher expects " + std::to_string(dim()) + " features, got " +
                                        std::to_string(x.size()));
    }
};

/// Exact response function, typically the ground truth of a synthetic world.
class OracleTeacher final : public TeacherModel {
public:
    using Fn = std::function<double(std::span<const double>, double)>;

    OracleTeacher(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

    [[nodiscard]] Variant variant() const noexcept override { return Variant::oracle; }
    [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
    [[nodiscard]] double predict_proba(std::span<const double> x, double price) const override {
        check_dim(x);
        return std::clamp(fn_(x, price), 0.0, 1.0);
    }

private:
    std::size_t dim_;
    Fn fn_;
};

/// Precomputed n x m probabilities aligned with a price grid; answers only
/// (row, grid price) queries.
class TableTeacher final : public TeacherModel {
public:
    TableTeacher(Matrix probabilities, PriceGrid grid) : probs_(std::move(probabilities)), grid_(std::move(grid)) {
        if (probs_.cols() != grid_.size())
            throw std::invalid_argument("TableTeacher: table has " + std::to_string(probs_.cols()) +
                                        " columns but the grid has " + std::to_string(grid_.size()) + " prices");
        for (std::size_t i = 0; i < probs_.rows(); ++i)
            for (std::size_t k = 0; k < probs_.cols(); ++k) {
                const double v = probs_(i, k);
                if (!(v >= 0.0 && v <= 1.0))
                    throw std::invalid_argument("TableTeacher: entry (" + std::to_string(i) + "," + std::to_string(k) +
                                                ") = " + detail::format_double(v) + " is not a probability");
            }
    }

    [[nodiscard]] Variant variant() const noexcept override { return Variant::table; }
    /// Feature vectors are not consulted; any length is accepted.
    [[nodiscard]] std::size_t dim() const noexcept override { return 0; }
    [[nodiscard]] std::size_t rows() const noexcept { return probs_.rows(); }
    [[nodiscard]] const PriceGrid& grid() const noexcept { return grid_; }

    [[nodiscard]] double predict_proba(std::span<const double>, double) const override {
        throw std::logic_error("TableTeacher answers only row-indexed queries");
    }
    [[nodiscard]] double predict_row(std::size_t row, std::span<const double>, double price) const override {
        if (row >= probs_.rows())
            throw std::out_of_range("TableTeacher: row " + std::to_string(row) + " out of range (" +
                                    std::to_string(probs_.rows()) + " rows)");
        const auto k = grid_.find(price);
        if (k == PriceGrid::npos)
            throw std::invalid_argument("TableTeacher: price " + detail::format_double(price) + " is not on its grid");
        return probs_(row, k);
    }

private:
    Matrix probs_;
    PriceGrid grid_;
};

/// Reads a header-less CSV of probabilities, one row per item, one column per
/// grid price.
inline TableTeacher read_table_teacher(std::istream& in, const PriceGrid& grid, const std::string& name = "<stream>") {
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_commas(line);
        if (rows == 0) cols = cells.size();
        if (cells.size() != cols)
            throw ParseError(name + ":" + std::to_string(line_no) + ": row has " + std::to_string(cells.size()) +
                             " entries, expected " + std::to_string(cols));
        for (auto c : cells) {
            double v;
            if (!detail::parse_number(c, v))
                throw ParseError(name + ":" + std::to_string(line_no) + ": not a number: '" +
                                 std::string(detail::trim(c)) + "'");
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError(name + ": empty probability table");
    return TableTeacher(Matrix(rows, cols, std::move(values)), grid);
}

inline TableTeacher load_table_teacher(const std::string& path, const PriceGrid& grid) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    return read_table_teacher(in, grid, path);
}

// ---------------------------------------------------------------------------
// Gradient boosted trees with logistic loss
// ---------------------------------------------------------------------------

struct GbtConfig {
    int rounds = 50;
    double learning_rate = 0.1;
    std::size_t max_leaves = 31;
    std::size_t min_child_samples = 20;
    std::uint64_t seed = 0;
    double bagging_fraction = 1.0;  ///< per-round row subsample; 1 disables sampling
    double l2_regularization = 0.0;
    double min_child_hessian = 1e-3;

    void validate() const {
        if (rounds < 1) throw std::invalid_argument("GbtConfig: rounds must be >= 1");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0))
            throw std::invalid_argument("GbtConfig: learning_rate must lie in (0,1]");
        if (max_leaves < 2) throw std::invalid_argument("GbtConfig: max_leaves must be >= 2");
        if (min_child_samples < 1) throw std::invalid_argument("GbtConfig: min_child_samples must be >= 1");
        if (!(bagging_fraction > 0.0 && bagging_fraction <= 1.0))
            throw std::invalid_argument("GbtConfig: bagging_fraction must lie in (0,1]");
        if (l2_regularization < 0.0) throw std::invalid_argument("GbtConfig: l2_regularization must be >= 0");
    }
};

struct RegressionNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double value = 0.0;
    friend bool operator==(const RegressionNode&, const RegressionNode&) = default;
};

struct RegressionTree {
    std::vector<RegressionNode> nodes;  // root is node 0

    template <class FeatureAt>
    [[nodiscard]] double eval(FeatureAt&& at) const {
        std::size_t id = 0;
        while (nodes[id].feature >= 0) {
            const auto& n = nodes[id];
            id = at(static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
        }
        return nodes[id].value;
    }
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

inline double sigmoid(double z) noexcept {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Boosted ensemble over the augmented input (x, p): price is feature d.
/// Probability = sigmoid(base_score + learning_rate * sum_t tree_t(x, p)).
class GradientBoostedTeacher final : public TeacherModel {
public:
    GradientBoostedTeacher(std::size_t dim, double base_score, double learning_rate, std::vector<RegressionTree> trees)
        : dim_(dim), base_score_(base_score), learning_rate_(learning_rate), trees_(std::move(trees)) {}

    [[nodiscard]] Variant variant() const noexcept override { return Variant::gradient_boosted; }
    [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
    [[nodiscard]] double base_score() const noexcept { return base_score_; }
    [[nodiscard]] double learning_rate() const noexcept { return learning_rate_; }
    [[nodiscard]] const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

    [[nodiscard]] double raw_score(std::span<const double> x, double price) const {
        check_dim(x);
        auto at = [&](std::size_t f) { return f < dim_ ? x[f] : price; };
        double s = 0.0;
        for (const auto& t : trees_) s += t.eval(at);
        return base_score_ + learning_rate_ * s;
    }

    [[nodiscard]] double predict_proba(std::span<const double> x, double price) const override {
        return sigmoid(raw_score(x, price));
    }

    friend bool operator==(const GradientBoostedTeacher& a, const GradientBoostedTeacher& b) {
        return a.dim_ == b.dim_ && a.base_score_ == b.base_score_ && a.learning_rate_ == b.learning_rate_ &&
               a.trees_ == b.trees_;
    }

private:
    std::size_t dim_;
    double base_score_;
    double learning_rate_;
    std::vector<RegressionTree> trees_;
};

namespace detail {

/// Second-order logistic-loss criterion: stats are (sum g, sum h) and a node
/// scores G^2 / (H + lambda).
struct NewtonCriterion {
    std::span<const double> grad;
    std::span<const double> hess;
    double lambda;
    double min_hessian;

    [[nodiscard]] std::size_t stat_width() const noexcept { return 2; }
    void accumulate(std::span<double> s, std::size_t i) const noexcept {
        s[0] += grad[i];
        s[1] += hess[i];
    }
    [[nodiscard]] double score(std::span<const double> s) const noexcept {
        if (s[1] < min_hessian) return -std::numeric_limits<double>::infinity();
        return s[0] * s[0] / (s[1] + lambda);
    }
    [[nodiscard]] double leaf_value(std::span<const double> s) const noexcept { return -s[0] / (s[1] + lambda); }
};

/// Leaf-wise growth: repeatedly split the leaf with the largest gain until
/// max_leaves is reached or no leaf has a positive-gain split.
inline RegressionTree grow_leafwise(const Matrix& z, std::vector<std::size_t> rows, const NewtonCriterion& crit,
                                    std::size_t max_leaves, std::size_t min_child) {
    struct Open {
        std::size_t node;
        std::vector<std::size_t> rows;
        std::vector<double> stats;
        std::optional<SplitCandidate> split;
        double gain;
    };
    RegressionTree tree;
    std::vector<Open> open;

    auto make_open = [&](std::size_t node, std::vector<std::size_t> r) {
        Open o{node, std::move(r), {}, std::nullopt, 0.0};
        o.stats = node_stats(crit, o.rows);
        tree.nodes[node].value = crit.leaf_value(o.stats);
        const double parent = crit.score(o.stats);
        if (o.rows.size() >= 2 * min_child && std::isfinite(parent)) {
            o.split = find_best_split(z, o.rows, crit, min_child, o.stats, parent);
            if (o.split) o.gain = o.split->combined_revenue - parent;
        }
        return o;
    };

    tree.nodes.push_back({});
    open.push_back(make_open(0, std::move(rows)));
    std::size_t leaves = 1;
    while (leaves < max_leaves) {
        std::size_t pick = open.size();
        for (std::size_t k = 0; k < open.size(); ++k)
            if (open[k].split && (pick == open.size() || open[k].gain > open[pick].gain)) pick = k;
        if (pick == open.size()) break;

        Open cur = std::move(open[pick]);
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        std::vector<std::size_t> lrows, rrows;
        for (auto i : cur.rows) (z(i, cur.split->feature_index) <= cur.split->threshold ? lrows : rrows).push_back(i);

        const std::size_t l = tree.nodes.size();
        tree.nodes.push_back({});
        const std::size_t r = tree.nodes.size();
        tree.nodes.push_back({});
        auto& node = tree.nodes[cur.node];
        node.feature = static_cast<int>(cur.split->feature_index);
        node.threshold = cur.split->threshold;
        node.left = l;
        node.right = r;
        node.value = 0.0;
        open.push_back(make_open(l, std::move(lrows)));
        open.push_back(make_open(r, std::move(rrows)));
        ++leaves;
    }
    return tree;
}

}  // namespace detail

/// Fits the boosted teacher on (x, p) -> sold with logistic loss, starting
/// from the log-odds of the base rate.
inline GradientBoostedTeacher fit_gbt(const Dataset& train, const GbtConfig& config = {}) {
    config.validate();
    const std::size_t n = train.size(), d = train.dim();
    if (n < 2) throw std::invalid_argument("fit_gbt: need at least 2 training rows");
    const double rate = train.positive_rate();
    if (rate == 0.0 || rate == 1.0) throw std::invalid_argument("fit_gbt: training data contains a single class");

    Matrix z(n, d + 1);
    for (std::size_t i = 0; i < n; ++i) {
        auto src = train.features().row(i);
        std::copy(src.begin(), src.end(), z.row(i).begin());
        z(i, d) = train.prices()[i];
    }
    const auto& y = train.outcomes();
    const double base = std::log(rate / (1.0 - rate));

    std::vector<double> raw(n, base), grad(n), hess(n);
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(config.rounds));
    const detail::NewtonCriterion crit{grad, hess, config.l2_regularization, config.min_child_hessian};

    for (int round = 0; round < config.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        std::vector<std::size_t> rows;
        if (config.bagging_fraction < 1.0) {
            CounterRng rng(config.seed, 0xB0057 + static_cast<std::uint64_t>(round));
            for (std::size_t i = 0; i < n; ++i)
                if (rng.uniform() < config.bagging_fraction) rows.push_back(i);
            if (rows.empty()) rows.push_back(static_cast<std::size_t>(rng.below(n)));
        } else {
            rows = all_rows(n);
        }
        auto tree = detail::grow_leafwise(z, std::move(rows), crit, config.max_leaves, config.min_child_samples);
        for (std::size_t i = 0; i < n; ++i)
            raw[i] += config.learning_rate * tree.eval([&](std::size_t f) { return z(i, f); });
        trees.push_back(std::move(tree));
    }
    return GradientBoostedTeacher(d, base, config.learning_rate, std::move(trees));
}

// Model text format, one token group per line:
//
//   sptlab-gbt 1
//   dim <d>                       (price is input feature d)
//   base_score <v>
//   learning_rate <v>
//   trees <T>
//   tree <t> <node count>
//   <id> <feature> <threshold> <left> <right> <leaf value>     (feature -1 = leaf)
//
// Reals use shortest round-trip decimal text.
inline void save_gbt(std::ostream& out, const GradientBoostedTeacher& model) {
    using detail::format_double;
    out << "sptlab-gbt 1\n"
        << "dim " << model.dim() << '\n'
        << "base_score " << format_double(model.base_score()) << '\n'
        << "learning_rate " << format_double(model.learning_rate()) << '\n'
        << "trees " << model.trees().size() << '\n';
    for (std::size_t t = 0; t < model.trees().size(); ++t) {
        const auto& nodes = model.trees()[t].nodes;
        out << "tree " << t << ' ' << nodes.size() << '\n';
        for (std::size_t id = 0; id < nodes.size(); ++id) {
            const auto& nd = nodes[id];
            out << id << ' ' << nd.feature << ' ' << format_double(nd.threshold) << ' ' << nd.left << ' ' << nd.right
                << ' ' << format_double(nd.value) << '\n';
        }
    }
}

inline GradientBoostedTeacher load_gbt(std::istream& in) {
    auto fail = [](const std::string& what) -> GradientBoostedTeacher { throw ParseError("gbt model: " + what); };
    auto expect = [&](const char* key) {
        std::string tok;
        if (!(in >> tok) || tok != key) fail(std::string("expected '") + key + "'");
    };
    auto read_double = [&]() {
        std::string tok;
        double v;
        if (!(in >> tok) || !detail::parse_number(tok, v)) fail("bad number '" + tok + "'");
        return v;
    };
    expect("sptlab-gbt");
    int version = 0;
    if (!(in >> version) || version != 1) fail("unsupported version");
    std::size_t dim = 0, n_trees = 0;
    expect("dim");
    if (!(in >> dim)) fail("bad dim");
    expect("base_score");
    const double base = read_double();
    expect("learning_rate");
    const double lr = read_double();
    expect("trees");
    if (!(in >> n_trees)) fail("bad tree count");
    std::vector<RegressionTree> trees(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::size_t idx = 0, count = 0;
        expect("tree");
        if (!(in >> idx >> count) || idx != t || count == 0) fail("bad tree header");
        trees[t].nodes.resize(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::size_t id;
            RegressionNode nd;
            if (!(in >> id >> nd.feature) || id >= count) fail("bad node line");
            nd.threshold = read_double();
            if (!(in >> nd.left >> nd.right)) fail("bad node children");
            nd.value = read_double();
            if (nd.feature >= 0 &&
                (nd.left >= count || nd.right >= count || static_cast<std::size_t>(nd.feature) > dim))
                fail("node reference out of range");
            trees[t].nodes[id] = nd;
        }
    }
    return GradientBoostedTeacher(dim, base, lr, std::move(trees));
}

// ---------------------------------------------------------------------------
// Revenue matrix and diagnostics
// ---------------------------------------------------------------------------

/// Estimated revenue r(i,k) = p_k * f(x_i, p_k) for every item and grid price.
struct RevenueMatrix {
    Matrix values;
    PriceGrid grid;

    [[nodiscard]] std::size_t rows() const noexcept { return values.rows(); }
    [[nodiscard]] std::size_t prices() const noexcept { return values.cols(); }
};

inline RevenueMatrix revenue_matrix(const TeacherModel& teacher, const Matrix& features, const PriceGrid& grid) {
    if (grid.size() == 0) throw std::invalid_argument("revenue_matrix: empty price grid");
    RevenueMatrix out{Matrix(features.rows(), grid.size()), grid};
    for (std::size_t i = 0; i < features.rows(); ++i)
        for (std::size_t k = 0; k < grid.size(); ++k)
            out.values(i, k) = grid[k] * teacher.predict_row(i, features.row(i), grid[k]);
    return out;
}

/// Mann-Whitney AUC of scores against binary labels; tied scores count 1/2.
inline double auc_from_scores(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
    std::vector<std::size_t> order = all_rows(scores.size());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos = 0, neg = 0, rank_sum = 0;
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start;
        while (end < order.size() && scores[order[end]] == scores[order[start]]) ++end;
        const double avg_rank = 0.5 * static_cast<double>(start + 1 + end);  // mean of ranks start+1..end
        for (std::size_t k = start; k < end; ++k)
            if (labels[order[k]] == 1.0) rank_sum += avg_rank;
        start = end;
    }
    for (double l : labels) (l == 1.0 ? pos : neg) += 1;
    if (pos == 0 || neg == 0) throw std::invalid_argument("auc: both classes must be present");
    return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

inline double auc(const TeacherModel& model, const Dataset& test) {
    std::vector<double> scores(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
        scores[i] = model.predict_row(i, test.features().row(i), test.prices()[i]);
    return auc_from_scores(scores, test.outcomes());
}

/// Mean binary cross-entropy of the teacher on a dataset.
inline double log_loss(const TeacherModel& model, const Dataset& data) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = std::clamp(model.predict_row(i, data.features().row(i), data.prices()[i]), 1e-15, 1 - 1e-15);
        s -= data.outcomes()[i] == 1.0 ? std::log(p) : std::log1p(-p);
    }
    return s / static_cast<double>(data.size());
}

}  // namespace sptlab
