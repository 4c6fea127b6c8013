#pragma once

// Shared fixtures for the test suites and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "sptlab/sptlab.hpp"

namespace sptlab::testing {

/// Small random instance. Revenue entries are multiples of 1/8 so every sum
/// is exact in double precision and orderings do not depend on summation
/// order. Features come from a coarse lattice so ties between rows occur.
struct Instance {
    Matrix features;
    RevenueMatrix revmat;
};

inline Instance random_instance(std::uint64_t seed, std::size_t max_n = 200, std::size_t max_d = 5,
                                std::size_t max_m = 5) {
    CounterRng rng(seed, 0x7E57);
    const std::size_t n = 2 + rng.below(max_n - 1);
    const std::size_t d = 1 + rng.below(max_d);
    const std::size_t m = 1 + rng.below(max_m);
    const std::uint64_t levels = 2 + rng.below(30);
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = static_cast<double>(rng.below(levels)) / 4.0;
    std::vector<double> g;
    for (std::size_t k = 0; k < m; ++k) g.push_back(1.0 + static_cast<double>(k));
    Matrix r(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) r(i, k) = static_cast<double>(rng.below(321)) / 8.0;
    return {x, RevenueMatrix{r, PriceGrid(g)}};
}

/// Depth-1 optimum by enumerating every (feature, threshold, left price,
/// right price), plus the unsplit tree with every single price.
struct BruteForceDepthOne {
    double best = -std::numeric_limits<double>::infinity();
    bool split = false;
    std::size_t feature = 0;
    double threshold = 0.0;
};

inline BruteForceDepthOne brute_force_depth_one(const Instance& inst, std::size_t min_leaf = 1) {
    const auto& x = inst.features;
    const auto& r = inst.revmat.values;
    const std::size_t n = x.rows(), m = r.cols();
    BruteForceDepthOne out;
    for (std::size_t k = 0; k < m; ++k) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += r(i, k);
        out.best = std::max(out.best, s);
    }
    const double unsplit = out.best;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        std::set<double> values;
        for (std::size_t i = 0; i < n; ++i) values.insert(x(i, j));
        for (double s : values) {
            std::size_t lc = 0;
            for (std::size_t i = 0; i < n; ++i) lc += x(i, j) <= s;
            if (lc < min_leaf || n - lc < min_leaf || lc == n) continue;
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) {
                    double total = 0;
                    for (std::size_t i = 0; i < n; ++i) total += x(i, j) <= s ? r(i, a) : r(i, b);
                    // strict improvement over both the unsplit tree and earlier candidates
                    if (total > unsplit && total > (out.split ? out.best : unsplit)) {
                        out.best = total;
                        out.split = true;
                        out.feature = j;
                        out.threshold = s;
                    }
                }
        }
    }
    return out;
}

/// The two-type fixture: type A at x = 0 (valuation 10), type B at x = 1
/// (valuation 12), grid {10, 12}.
inline Matrix toy_features() { return Matrix(2, 1, std::vector<double>{0.0, 1.0}); }
inline PriceGrid toy_grid() { return PriceGrid({10.0, 12.0}); }

}  // namespace sptlab::testing
