#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sptlab/matrix.hpp"
#include "sptlab/random.hpp"

namespace sptlab {

/// Raised for malformed input files; the message carries the file location.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Observational pricing data: one row per item offered at a price.
class Dataset {
public:
    Dataset(Matrix features, std::vector<double> prices, std::vector<double> outcomes,
            std::vector<std::string> feature_names = {})
        : features_(std::move(features)),
          prices_(std::move(prices)),
          outcomes_(std::move(outcomes)),
          feature_names_(std::move(feature_names)) {
        if (feature_names_.empty()) {
            for (std::size_t j = 0; j < features_.cols(); ++j)
                feature_names_.push_back("x" + std::to_string(j));
        }
        validate();
    }

    [[nodiscard]] std::size_t size() const noexcept { return prices_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return features_.cols(); }
    [[nodiscard]] const Matrix& features() const noexcept { return features_; }
    [[nodiscard]] const std::vector<double>& prices() const noexcept { return prices_; }
    [[nodiscard]] const std::vector<double>& outcomes() const noexcept { return outcomes_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept {
        return feature_names_;
    }

    [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const {
        std::vector<double> p, y;
        p.reserve(rows.size());
        y.reserve(rows.size());
        for (auto i : rows) {
            p.push_back(prices_[i]);
            y.push_back(outcomes_[i]);
        }
        return Dataset(features_.select_rows(rows), std::move(p), std::move(y), feature_names_);
    }

    [[nodiscard]] double positive_rate() const noexcept {
        double s = 0.0;
        for (double v : outcomes_) s += v;
        return s / static_cast<double>(size());
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    void validate() const {
        const std::size_t n = prices_.size();
        if (n == 0) throw std::invalid_argument("Dataset: at least one row is required");
        if (features_.rows() != n || outcomes_.size() != n)
            throw std::invalid_argument("Dataset: features, prices and outcomes differ in row count");
        if (feature_names_.size() != features_.cols())
            throw std::invalid_argument("Dataset: feature_names length does not match feature columns");
        for (double v : features_.data())
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature value");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(prices_[i]))
                throw std::invalid_argument("Dataset: non-finite price at row " + std::to_string(i));
            if (outcomes_[i] != 0.0 && outcomes_[i] != 1.0)
                throw std::invalid_argument("Dataset: outcome at row " + std::to_string(i) +
                                            " is not 0 or 1");
        }
    }

    Matrix features_;
    std::vector<double> prices_;
    std::vector<double> outcomes_;
    std::vector<std::string> feature_names_;
};

/// Ordered set of candidate prices.
class PriceGrid {
public:
    PriceGrid() = default;
    explicit PriceGrid(std::vector<double> prices) : prices_(std::move(prices)) {
        if (prices_.empty()) throw std::invalid_argument("PriceGrid: at least one price is required");
        for (std::size_t k = 0; k < prices_.size(); ++k) {
            if (!std::isfinite(prices_[k])) throw std::invalid_argument("PriceGrid: non-finite price");
            if (k > 0 && !(prices_[k - 1] < prices_[k]))
                throw std::invalid_argument("PriceGrid: prices must be strictly ascending");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return prices_.size(); }
    [[nodiscard]] double operator[](std::size_t k) const noexcept { return prices_[k]; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return prices_; }
    [[nodiscard]] auto begin() const noexcept { return prices_.begin(); }
    [[nodiscard]] auto end() const noexcept { return prices_.end(); }

    /// Index of an exact grid member, or npos.
    [[nodiscard]] std::size_t find(double price) const noexcept {
        auto it = std::lower_bound(prices_.begin(), prices_.end(), price);
        if (it != prices_.end() && *it == price) return static_cast<std::size_t>(it - prices_.begin());
        return npos;
    }

    /// Nearest grid index; exact midpoints go to the lower price.
    [[nodiscard]] std::size_t nearest(double price) const noexcept {
        auto it = std::lower_bound(prices_.begin(), prices_.end(), price);
        if (it == prices_.begin()) return 0;
        if (it == prices_.end()) return prices_.size() - 1;
        const auto hi = static_cast<std::size_t>(it - prices_.begin());
        return (price - prices_[hi - 1] <= prices_[hi] - price) ? hi - 1 : hi;
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    friend bool operator==(const PriceGrid&, const PriceGrid&) = default;

private:
    std::vector<double> prices_;
};

struct SaleRecord {
    std::int64_t timestamp = 0;
    std::int64_t store_id = 0;
    double price = 0.0;
    friend bool operator==(const SaleRecord&, const SaleRecord&) = default;
};

/// Time-ordered sales of a single product.
class SaleHistory {
public:
    SaleHistory() = default;
    explicit SaleHistory(std::vector<SaleRecord> records) : records_(std::move(records)) {
        for (std::size_t i = 1; i < records_.size(); ++i)
            if (records_[i].timestamp < records_[i - 1].timestamp)
                throw std::invalid_argument("SaleHistory: timestamps must be non-decreasing (record " +
                                            std::to_string(i) + ")");
    }

    [[nodiscard]] const std::vector<SaleRecord>& records() const noexcept { return records_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }

    friend bool operator==(const SaleHistory&, const SaleHistory&) = default;

private:
    std::vector<SaleRecord> records_;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string location(const std::string& path, std::size_t line, std::string_view column) {
    return path + ":" + std::to_string(line) + " column '" + std::string(column) + "'";
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Reads a dataset CSV. The header must contain `price` and `sold`; every other
/// column is a numeric feature, kept in file order.
inline Dataset read_csv(std::istream& in, const std::string& name = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(name + ": empty file");
    auto header = detail::split_commas(line);
    std::vector<std::string> columns;
    for (auto h : header) columns.emplace_back(detail::trim(h));

    std::size_t price_col = columns.size(), sold_col = columns.size();
    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == "price") price_col = c;
        else if (columns[c] == "sold") sold_col = c;
        else {
            feature_cols.push_back(c);
            feature_names.push_back(columns[c]);
        }
    }
    if (price_col == columns.size()) throw ParseError(name + ": missing required column 'price'");
    if (sold_col == columns.size()) throw ParseError(name + ": missing required column 'sold'");

    std::vector<double> feats, prices, sold;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_commas(line);
        if (cells.size() != columns.size())
            throw ParseError(name + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(columns.size()) + " cells, found " +
                             std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v;
            if (!detail::parse_number(cells[c], v) || !std::isfinite(v))
                throw ParseError(detail::location(name, line_no, columns[c]) + ": not a finite number: '" +
                                 std::string(detail::trim(cells[c])) + "'");
            if (c == sold_col && v != 0.0 && v != 1.0)
                throw ParseError(detail::location(name, line_no, columns[c]) +
                                 ": sold must be 0 or 1, found '" + std::string(detail::trim(cells[c])) + "'");
        }
        for (auto c : feature_cols) {
            double v;
            detail::parse_number(cells[c], v);
            feats.push_back(v);
        }
        double p, y;
        detail::parse_number(cells[price_col], p);
        detail::parse_number(cells[sold_col], y);
        prices.push_back(p);
        sold.push_back(y);
    }
    if (prices.empty()) throw ParseError(name + ": no data rows");
    const std::size_t n = prices.size();
    return Dataset(Matrix(n, feature_cols.size(), std::move(feats)), std::move(prices), std::move(sold),
                   std::move(feature_names));
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    return read_csv(in, path);
}

/// Writes features first, then `price,sold`. Numbers use the shortest
/// round-trip representation, so load_csv(write_csv(d)) == d.
inline void write_csv(std::ostream& out, const Dataset& data) {
    for (const auto& name : data.feature_names()) out << name << ',';
    out << "price,sold\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.features().row(i)) out << detail::format_double(v) << ',';
        out << detail::format_double(data.prices()[i]) << ',' << (data.outcomes()[i] == 1.0 ? '1' : '0')
            << '\n';
    }
}

inline void write_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    write_csv(out, data);
    if (!out) throw std::runtime_error(path + ": write failed");
}

/// Random partition into halves of size ceil(n/2) and floor(n/2). Rows keep
/// their original relative order inside each half.
inline std::pair<Dataset, Dataset> split_halves(const Dataset& data, std::uint64_t seed) {
    const std::size_t n = data.size();
    if (n < 2) throw std::invalid_argument("split_halves: need at least 2 rows");
    CounterRng rng(seed, /*stream_id=*/0x5E11);
    auto perm = random_permutation(n, rng);
    const std::size_t first = (n + 1) / 2;
    std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(first));
    std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(first), perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {data.subset(a), data.subset(b)};
}

/// 10th..90th nearest-rank percentiles (value at 1-based index ceil(p*n/100)
/// of the sorted sample), deduplicated.
inline PriceGrid percentile_grid(std::span<const double> prices) {
    const std::size_t n = prices.size();
    if (n < 9) throw std::invalid_argument("percentile_grid: need at least 9 observations, got " +
                                           std::to_string(n));
    std::vector<double> sorted(prices.begin(), prices.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> grid;
    for (std::size_t pct = 10; pct <= 90; pct += 10) {
        const std::size_t rank = (pct * n + 99) / 100;
        const double v = sorted[rank - 1];
        if (grid.empty() || grid.back() != v) grid.push_back(v);
    }
    return PriceGrid(std::move(grid));
}

/// Fixed price ladder, e.g. a retail shelf-price list.
inline PriceGrid explicit_grid(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("explicit_grid: empty price list");
    std::sort(values.begin(), values.end());
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] == values[k - 1])
            throw std::invalid_argument("explicit_grid: duplicate price " + detail::format_double(values[k]));
    return PriceGrid(std::move(values));
}

/// Most frequent price among the last k records; ties go to the most recent of
/// the tied prices.
inline double impute_mode_of_last_k(const SaleHistory& history, std::size_t k) {
    if (history.empty()) throw std::invalid_argument("impute_mode_of_last_k: empty history");
    if (k == 0) throw std::invalid_argument("impute_mode_of_last_k: k must be >= 1");
    const auto& recs = history.records();
    const std::size_t take = std::min(k, recs.size());
    std::map<double, std::size_t> counts;
    for (std::size_t i = recs.size() - take; i < recs.size(); ++i) ++counts[recs[i].price];
    double best = recs.back().price;
    std::size_t best_count = 0;
    // newest first, so the first price reaching the maximum count is the most recent
    for (std::size_t i = recs.size(); i-- > recs.size() - take;) {
        const auto c = counts[recs[i].price];
        if (c > best_count) {
            best_count = c;
            best = recs[i].price;
        }
    }
    return best;
}

inline double impute_last_at_store(const SaleHistory& history, std::int64_t store_id) {
    const auto& recs = history.records();
    for (auto it = recs.rbegin(); it != recs.rend(); ++it)
        if (it->store_id == store_id) return it->price;
    throw std::invalid_argument("impute_last_at_store: no sale recorded at store " + std::to_string(store_id));
}

inline SaleHistory filter_stores_min_sales(const SaleHistory& history, std::size_t min_sales) {
    if (min_sales == 0) throw std::invalid_argument("filter_stores_min_sales: min_sales must be >= 1");
    std::map<std::int64_t, std::size_t> counts;
    for (const auto& r : history.records()) ++counts[r.store_id];
    std::vector<SaleRecord> kept;
    for (const auto& r : history.records())
        if (counts[r.store_id] >= min_sales) kept.push_back(r);
    return SaleHistory(std::move(kept));
}

/// Reads a `timestamp,store_id,price` CSV.
inline SaleHistory read_sale_history(std::istream& in, const std::string& name = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(name + ": empty file");
    auto header = detail::split_commas(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < header.size(); ++c) col[std::string(detail::trim(header[c]))] = c;
    for (const char* required : {"timestamp", "store_id", "price"})
        if (!col.count(required)) throw ParseError(name + ": missing required column '" + required + "'");

    std::vector<SaleRecord> recs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_commas(line);
        if (cells.size() != header.size())
            throw ParseError(name + ":" + std::to_string(line_no) + ": wrong number of cells");
        SaleRecord r;
        if (!detail::parse_number(cells[col["timestamp"]], r.timestamp))
            throw ParseError(detail::location(name, line_no, "timestamp") + ": not an integer");
        if (!detail::parse_number(cells[col["store_id"]], r.store_id))
            throw ParseError(detail::location(name, line_no, "store_id") + ": not an integer");
        if (!detail::parse_number(cells[col["price"]], r.price) || !std::isfinite(r.price))
            throw ParseError(detail::location(name, line_no, "price") + ": not a finite number");
        recs.push_back(r);
    }
    return SaleHistory(std::move(recs));
}

inline SaleHistory load_sale_history(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    return read_sale_history(in, path);
}

}  // namespace sptlab
