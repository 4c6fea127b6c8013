#pragma once

// Synthetic pricing worlds from a latent probit model:
//   Y* = g(X) + h(X) P + eps,  eps ~ N(0,1),  Y = 1{Y* > 0}
// so the true sale probability is Phi(g(x) + h(x) p).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sptlab/dataset.hpp"
#include "sptlab/normal.hpp"
#include "sptlab/random.hpp"
#include "sptlab/teacher.hpp"

namespace sptlab {

struct SyntheticSpec {
    int id = 1;
    std::size_t dim = 2;
    std::vector<double> beta;  // world 2 only: 20 coefficients, entries 5..19 are zero

    /// Baseline utility.
    [[nodiscard]] double g(std::span<const double> x) const {
        switch (id) {
            case 1:
            case 5: return x[0];
            case 2:
            case 3:
            case 4: return 5.0;
            case 6: return 4.0 * std::abs(x[0] + x[1]);
        }
        throw std::logic_error("SyntheticSpec: bad id");
    }

    /// Price sensitivity.
    [[nodiscard]] double h(std::span<const double> x) const {
        switch (id) {
            case 1:
            case 5: return -1.0;
            case 2: {
                double s = 0.0;
                for (std::size_t j = 0; j < beta.size(); ++j) s += x[j] * beta[j];
                return -1.5 * s;
            }
            case 3: {
                const double x0 = x[0];
                if (x0 < -1.0) return -1.2;
                if (x0 < 0.0) return -1.1;
                if (x0 < 1.0) return -0.9;
                return -0.8;
            }
            case 4: {
                const double x0 = x[0];
                double v = x0 < -1.0 ? -1.25 : x0 < 0.0 ? -1.1 : x0 < 1.0 ? -0.9 : -0.75;
                return v + (x[1] < 0.0 ? -0.1 : 0.1);
            }
            case 6: return -std::abs(x[0] + x[1]);
        }
        throw std::logic_error("SyntheticSpec: bad id");
    }
};

/// World `id` in 1..6. World 2 draws its coefficient vector from `seed`, so
/// every consumer built from the same (id, seed) sees the same world.
inline SyntheticSpec make_spec(int id, std::uint64_t seed = 0) {
    if (id < 1 || id > 6) throw std::invalid_argument("unknown synthetic spec id " + std::to_string(id) + " (expected 1-6)");
    SyntheticSpec spec;
    spec.id = id;
    spec.dim = id == 2 ? 20 : 2;
    if (id == 2) {
        CounterRng rng(seed, 0xBE7A);
        spec.beta.assign(20, 0.0);
        for (std::size_t j = 0; j < 5; ++j) spec.beta[j] = rng.normal();
    }
    return spec;
}

inline double true_probability(const SyntheticSpec& spec, std::span<const double> x, double price) {
    if (x.size() != spec.dim)
        throw std::invalid_argument("true_probability: spec " + std::to_string(spec.id) + " has dimension " +
                                    std::to_string(spec.dim) + ", got " + std::to_string(x.size()));
    return standard_normal_cdf(spec.g(x) + spec.h(x) * price);
}

/// Draws n i.i.d. rows. Normal laws are N(mean, variance). Per row the stream
/// yields the features in order, then the price, then the latent noise.
inline Dataset generate(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("generate: n must be >= 1");
    CounterRng rng(seed, 0xDA7A0000ULL + static_cast<std::uint64_t>(spec.id));
    const std::size_t d = spec.dim;
    Matrix x(n, d);
    std::vector<double> prices(n), sold(n);
    const double feature_mean = (spec.id == 1 || spec.id == 5) ? 5.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = rng.normal(feature_mean, 1.0);
        double p;
        switch (spec.id) {
            case 1: p = rng.normal(5.0, 1.0); break;
            case 2: p = rng.normal(0.0, 2.0); break;
            case 5: p = rng.normal(row[0], 2.0); break;
            default: p = rng.normal(row[0] + 5.0, 2.0); break;
        }
        const double eps = rng.normal();
        prices[i] = p;
        sold[i] = spec.g(row) + spec.h(row) * p + eps > 0.0 ? 1.0 : 0.0;
    }
    return Dataset(std::move(x), std::move(prices), std::move(sold));
}

inline OracleTeacher oracle_teacher(const SyntheticSpec& spec) {
    return OracleTeacher(spec.dim, [spec](std::span<const double> x, double p) { return true_probability(spec, x, p); });
}

/// Two customer types on one feature (x <= 0.5 is type A): both buy with
/// certainty up to their valuation, 10 for A and 12 for B, and never above.
inline OracleTeacher toy_truth() {
    return OracleTeacher(1, [](std::span<const double> x, double p) {
        const double valuation = x[0] <= 0.5 ? 10.0 : 12.0;
        return p <= valuation ? 1.0 : 0.0;
    });
}

struct OptimalPrice {
    double price = 0.0;
    double revenue = 0.0;
};

/// argmax over the grid of p * f(x, p); ties go to the lowest price.
inline OptimalPrice optimal_price(const TeacherModel& truth, std::span<const double> x, const PriceGrid& grid) {
    OptimalPrice best{grid[0], grid[0] * truth.predict_proba(x, grid[0])};
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double r = grid[k] * truth.predict_proba(x, grid[k]);
        if (r > best.revenue) best = {grid[k], r};
    }
    return best;
}

inline OptimalPrice oracle_optimal(const SyntheticSpec& spec, std::span<const double> x, const PriceGrid& grid) {
    if (grid.size() == 0) throw std::invalid_argument("oracle_optimal: empty grid");
    OptimalPrice best{grid[0], grid[0] * true_probability(spec, x, grid[0])};
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double r = grid[k] * true_probability(spec, x, grid[k]);
        if (r > best.revenue) best = {grid[k], r};
    }
    return best;
}

/// `points` equispaced prices over [lo, hi], used to approximate the
/// continuous optimum.
inline PriceGrid fine_grid(double lo, double hi, std::size_t points = 1000) {
    if (points < 2 || !(lo < hi)) throw std::invalid_argument("fine_grid: need lo < hi and at least 2 points");
    std::vector<double> v(points);
    for (std::size_t k = 0; k < points; ++k)
        v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    v.back() = hi;
    return PriceGrid(std::move(v));
}

}  // namespace sptlab
