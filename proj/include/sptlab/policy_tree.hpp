#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sptlab/dataset.hpp"

namespace sptlab {

struct PolicyNode {
    enum class Kind { split, leaf };
    Kind kind = Kind::leaf;
    // split
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    // leaf
    double price = 0.0;
    double revenue_sum = 0.0;
    std::size_t n_train = 0;

    [[nodiscard]] bool is_leaf() const noexcept { return kind == Kind::leaf; }

    static PolicyNode make_leaf(double price, double revenue_sum, std::size_t n_train) {
        PolicyNode n;
        n.price = price;
        n.revenue_sum = revenue_sum;
        n.n_train = n_train;
        return n;
    }
    static PolicyNode make_split(std::size_t feature, double threshold, std::size_t left, std::size_t right) {
        PolicyNode n;
        n.kind = Kind::split;
        n.feature = feature;
        n.threshold = threshold;
        n.left = left;
        n.right = right;
        return n;
    }

    friend bool operator==(const PolicyNode&, const PolicyNode&) = default;
};

/// Axis-aligned binary pricing policy: an item goes left at a split iff
/// x[feature] <= threshold, and every leaf names one price from the grid.
class PolicyTree {
public:
    PolicyTree(std::vector<PolicyNode> nodes, std::size_t root, PriceGrid grid,
               std::vector<std::string> feature_names = {})
        : nodes_(std::move(nodes)), root_(root), grid_(std::move(grid)), feature_names_(std::move(feature_names)) {
        validate();
    }

    [[nodiscard]] const std::vector<PolicyNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t root() const noexcept { return root_; }
    [[nodiscard]] const PriceGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    [[nodiscard]] int max_depth_used() const noexcept { return depth_; }
    [[nodiscard]] std::size_t n_leaves() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(nodes_.begin(), nodes_.end(), [](const PolicyNode& n) { return n.is_leaf(); }));
    }
    /// Smallest feature vector length the tree can route.
    [[nodiscard]] std::size_t required_dim() const noexcept { return required_dim_; }

    [[nodiscard]] std::size_t leaf_of(std::span<const double> x) const {
        if (x.size() < required_dim_)
            throw std::invalid_argument("PolicyTree: feature vector has " + std::to_string(x.size()) +
                                        " entries, tree needs " + std::to_string(required_dim_));
        std::size_t id = root_;
        while (!nodes_[id].is_leaf()) {
            const auto& n = nodes_[id];
            id = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return id;
    }

    [[nodiscard]] double predict_price(std::span<const double> x) const { return nodes_[leaf_of(x)].price; }

    /// Sum over leaves of the stored training revenue.
    [[nodiscard]] double total_revenue_sum() const noexcept {
        double s = 0.0;
        for (const auto& n : nodes_)
            if (n.is_leaf()) s += n.revenue_sum;
        return s;
    }

    [[nodiscard]] std::string feature_name(std::size_t j) const {
        return j < feature_names_.size() ? feature_names_[j] : "x" + std::to_string(j);
    }

    friend bool operator==(const PolicyTree& a, const PolicyTree& b) {
        return a.nodes_ == b.nodes_ && a.root_ == b.root_ && a.grid_ == b.grid_ &&
               a.feature_names_ == b.feature_names_;
    }

private:
    void validate() {
        if (nodes_.empty()) throw std::invalid_argument("PolicyTree: no nodes");
        if (root_ >= nodes_.size()) throw std::invalid_argument("PolicyTree: root out of range");
        std::vector<int> seen(nodes_.size(), 0);
        std::vector<std::pair<std::size_t, int>> stack{{root_, 0}};
        depth_ = 0;
        required_dim_ = 0;
        while (!stack.empty()) {
            auto [id, depth] = stack.back();
            stack.pop_back();
            if (seen[id]++) throw std::invalid_argument("PolicyTree: node " + std::to_string(id) + " reached twice");
            depth_ = std::max(depth_, depth);
            const auto& n = nodes_[id];
            if (n.is_leaf()) {
                if (grid_.find(n.price) == PriceGrid::npos)
                    throw std::invalid_argument("PolicyTree: leaf " + std::to_string(id) + " price " +
                                                detail::format_double(n.price) + " is not on the price grid");
                continue;
            }
            if (n.left >= nodes_.size() || n.right >= nodes_.size())
                throw std::invalid_argument("PolicyTree: child of node " + std::to_string(id) + " out of range");
            if (!std::isfinite(n.threshold)) throw std::invalid_argument("PolicyTree: non-finite threshold");
            required_dim_ = std::max(required_dim_, n.feature + 1);
            stack.push_back({n.right, depth + 1});
            stack.push_back({n.left, depth + 1});
        }
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (!seen[i]) throw std::invalid_argument("PolicyTree: node " + std::to_string(i) + " unreachable");
    }

    std::vector<PolicyNode> nodes_;
    std::size_t root_ = 0;
    PriceGrid grid_;
    std::vector<std::string> feature_names_;
    int depth_ = 0;
    std::size_t required_dim_ = 0;
};

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json tree_to_json(const PolicyTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
        const auto& n = tree.nodes()[id];
        if (n.is_leaf())
            nodes.push_back({{"id", id}, {"kind", "leaf"}, {"price", n.price}, {"revenue_sum", n.revenue_sum},
                             {"n_train", n.n_train}});
        else
            nodes.push_back({{"id", id}, {"kind", "split"}, {"feature", n.feature}, {"threshold", n.threshold},
                             {"left", n.left}, {"right", n.right}});
    }
    return {{"feature_names", tree.feature_names()},
            {"price_grid", tree.grid().values()},
            {"nodes", std::move(nodes)},
            {"root", tree.root()}};
}

inline PolicyTree tree_from_json(const nlohmann::json& j) {
    try {
        const auto& jn = j.at("nodes");
        std::vector<PolicyNode> nodes(jn.size());
        std::vector<bool> filled(jn.size(), false);
        for (const auto& e : jn) {
            const auto id = e.at("id").get<std::size_t>();
            if (id >= nodes.size() || filled[id])
                throw std::invalid_argument("tree JSON: bad or duplicate node id " + std::to_string(id));
            filled[id] = true;
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "leaf")
                nodes[id] = PolicyNode::make_leaf(e.at("price").get<double>(), e.at("revenue_sum").get<double>(),
                                                  e.at("n_train").get<std::size_t>());
            else if (kind == "split")
                nodes[id] = PolicyNode::make_split(e.at("feature").get<std::size_t>(), e.at("threshold").get<double>(),
                                                   e.at("left").get<std::size_t>(), e.at("right").get<std::size_t>());
            else
                throw std::invalid_argument("tree JSON: unknown node kind '" + kind + "'");
        }
        return PolicyTree(std::move(nodes), j.at("root").get<std::size_t>(),
                          PriceGrid(j.at("price_grid").get<std::vector<double>>()),
                          j.value("feature_names", std::vector<std::string>{}));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("tree JSON: ") + e.what());
    }
}

inline std::string export_json(const PolicyTree& tree) { return tree_to_json(tree).dump(2); }

namespace detail {
inline std::string dot_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}
}  // namespace detail

/// Graphviz rendering: splits read "name ≤ s", leaves show the price and the
/// expected revenue per item; edges are labeled yes/no.
inline std::string export_dot(const PolicyTree& tree) {
    std::ostringstream os;
    os << "digraph policy {\n  node [shape=box, fontname=\"Helvetica\"];\n";
    for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
        const auto& n = tree.nodes()[id];
        if (n.is_leaf()) {
            const double per_item = n.n_train ? n.revenue_sum / static_cast<double>(n.n_train) : 0.0;
            os << "  n" << id << " [shape=ellipse, label=\"price " << detail::dot_number(n.price)
               << "\\nexpected revenue " << detail::dot_number(per_item) << "\"];\n";
        } else {
            os << "  n" << id << " [label=\"" << tree.feature_name(n.feature) << " ≤ "
               << detail::dot_number(n.threshold) << "\"];\n";
        }
    }
    for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
        const auto& n = tree.nodes()[id];
        if (n.is_leaf()) continue;
        os << "  n" << id << " -> n" << n.left << " [label=\"yes\"];\n";
        os << "  n" << id << " -> n" << n.right << " [label=\"no\"];\n";
    }
    os << "}\n";
    return os.str();
}

enum class ExportFormat { json, dot };

inline std::string export_tree(const PolicyTree& tree, ExportFormat format) {
    return format == ExportFormat::json ? export_json(tree) : export_dot(tree);
}

inline PolicyTree import_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("tree JSON: ") + e.what());
    }
    return tree_from_json(j);
}

}  // namespace sptlab
