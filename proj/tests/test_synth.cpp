#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

#include "support.hpp"

using namespace sptlab;

namespace {

// Phi(z) = 1/2 + integral_0^z pdf, by composite Simpson with many panels.
double phi_by_quadrature(double z) {
    const int panels = 20000;
    const double h = z / panels;
    double s = standard_normal_pdf(0.0) + standard_normal_pdf(z);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * standard_normal_pdf(i * h);
    return 0.5 + s * h / 3.0;
}

}  // namespace

TEST(Normal, ReferenceValues) {
    EXPECT_EQ(standard_normal_cdf(0.0), 0.5);
    EXPECT_NEAR(standard_normal_cdf(1.959963985), 0.975, 1e-9);
    EXPECT_NEAR(standard_normal_cdf(1.0), 0.8413447460685429, 1e-15);
    EXPECT_LT(standard_normal_cdf(-8.0), 1e-15);
    EXPECT_GT(standard_normal_cdf(-8.0), 0.0);
    for (double z : {-3.7, -1.2, -0.3, 0.4, 1.1, 2.5, 5.0}) {
        EXPECT_NEAR(standard_normal_cdf(z), phi_by_quadrature(z), 1e-12) << z;
        EXPECT_NEAR(standard_normal_cdf(-z), 1.0 - standard_normal_cdf(z), 1e-16) << z;
    }
}

TEST(Normal, QuantileInvertsCdf) {
    for (double u : {1e-12, 1e-6, 0.01, 0.02425, 0.3, 0.5, 0.77, 0.99, 1 - 1e-9})
        EXPECT_NEAR(standard_normal_cdf(standard_normal_quantile(u)), u, 1e-14 + 1e-12 * u) << u;
}

TEST(Rng, MatchesSplitMix64Sequence) {
    // reference outputs of SplitMix64 started from state 0
    EXPECT_EQ(CounterRng::mix(CounterRng::kGamma), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(CounterRng::mix(2 * CounterRng::kGamma), 0x6E789E6AA1B965F4ULL);
    EXPECT_EQ(CounterRng::mix(3 * CounterRng::kGamma), 0x06C45D188009454FULL);
}

TEST(Rng, AddressableAndDeterministic) {
    CounterRng a(42, 3), b(42, 3), c(42, 4);
    std::vector<std::uint64_t> seq;
    for (int i = 0; i < 10; ++i) seq.push_back(a.next_u64());
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(b.next_u64(), seq[static_cast<std::size_t>(i)]);
        EXPECT_EQ(a.at(static_cast<std::uint64_t>(i)), seq[static_cast<std::size_t>(i)]);
    }
    EXPECT_NE(c.next_u64(), seq[0]);
}

TEST(Rng, MomentsAndPermutations) {
    CounterRng rng(7, 0);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(1.0, 4.0);
        s += z;
        s2 += z * z;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 1.0, 4 * 2.0 / std::sqrt(n));
    EXPECT_NEAR(var, 4.0, 0.05);

    auto perm = random_permutation(50, rng);
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Specs, DimensionsAndBeta) {
    for (int id = 1; id <= 6; ++id) EXPECT_EQ(make_spec(id).dim, id == 2 ? 20u : 2u);
    auto s2 = make_spec(2, 5);
    ASSERT_EQ(s2.beta.size(), 20u);
    for (std::size_t j = 5; j < 20; ++j) EXPECT_EQ(s2.beta[j], 0.0);
    EXPECT_EQ(make_spec(2, 5).beta, s2.beta);
    EXPECT_NE(make_spec(2, 6).beta, s2.beta);
    EXPECT_THROW(make_spec(0), std::invalid_argument);
    EXPECT_THROW(make_spec(7), std::invalid_argument);
}

TEST(Specs, StepFunctions) {
    auto s3 = make_spec(3);
    EXPECT_EQ(s3.h(std::vector<double>{-2.0, 0.0}), -1.2);
    EXPECT_EQ(s3.h(std::vector<double>{-0.5, 0.0}), -1.1);
    EXPECT_EQ(s3.h(std::vector<double>{0.5, 0.0}), -0.9);
    EXPECT_EQ(s3.h(std::vector<double>{1.0, 0.0}), -0.8);
    auto s4 = make_spec(4);
    EXPECT_DOUBLE_EQ(s4.h(std::vector<double>{1.5, -0.5}), -0.85);
    EXPECT_DOUBLE_EQ(s4.h(std::vector<double>{-1.5, 0.5}), -1.15);
    EXPECT_EQ(s4.g(std::vector<double>{-1.5, 0.5}), 5.0);
}

TEST(TrueProbability, Examples) {
    auto s1 = make_spec(1);
    EXPECT_EQ(true_probability(s1, std::vector<double>{5.0, 0.0}, 5.0), 0.5);
    EXPECT_NEAR(true_probability(s1, std::vector<double>{5.0, 0.0}, 4.0), 0.841345, 5e-7);
    EXPECT_LT(true_probability(s1, std::vector<double>{5.0, 0.0}, 1e6), 1e-300);
    auto s6 = make_spec(6);
    for (double p : {-3.0, 0.0, 2.0, 100.0}) EXPECT_EQ(true_probability(s6, std::vector<double>{0.0, 0.0}, p), 0.5);
    EXPECT_THROW(true_probability(s1, std::vector<double>{5.0}, 1.0), std::invalid_argument);
}

TEST(OracleOptimal, Examples) {
    auto s1 = make_spec(1);
    std::vector<double> x{5.0, 0.0};
    auto best = oracle_optimal(s1, x, PriceGrid({4.0, 5.0, 6.0}));
    EXPECT_EQ(best.price, 4.0);
    // 4 * Phi(1) = 3.36538
    EXPECT_NEAR(best.revenue, 4.0 * 0.8413447460685429, 1e-14);
    EXPECT_EQ(oracle_optimal(s1, x, PriceGrid({7.5})).price, 7.5);

    auto s6 = make_spec(6);  // h = 0 at the origin: revenue rises with price
    EXPECT_EQ(oracle_optimal(s6, std::vector<double>{0.0, 0.0}, PriceGrid({1.0, 2.0, 3.0})).price, 3.0);
}

TEST(OracleOptimal, DominatesEveryGridPrice) {
    for (int id = 1; id <= 6; ++id) {
        auto spec = make_spec(id, 1);
        auto d = generate(spec, 200, 1);
        auto grid = percentile_grid(d.prices());
        for (std::size_t i = 0; i < d.size(); ++i) {
            auto x = d.features().row(i);
            auto best = oracle_optimal(spec, x, grid);
            EXPECT_NE(grid.find(best.price), PriceGrid::npos);
            for (double p : grid) EXPECT_GE(best.revenue, p * true_probability(spec, x, p));
            auto via_teacher = optimal_price(oracle_teacher(spec), x, grid);
            EXPECT_EQ(via_teacher.price, best.price);
        }
    }
}

TEST(FineGrid, Endpoints) {
    auto g = fine_grid(2.0, 8.0);
    EXPECT_EQ(g.size(), 1000u);
    EXPECT_EQ(g[0], 2.0);
    EXPECT_EQ(g[999], 8.0);
    EXPECT_THROW(fine_grid(1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(fine_grid(0.0, 1.0, 1), std::invalid_argument);
}

TEST(Generate, DeterministicAndSeedSensitive) {
    auto a = generate(make_spec(4), 300, 9);
    auto b = generate(make_spec(4), 300, 9);
    auto c = generate(make_spec(4), 300, 10);
    EXPECT_EQ(a.features(), b.features());
    EXPECT_EQ(a.prices(), b.prices());
    EXPECT_EQ(a.outcomes(), b.outcomes());
    EXPECT_NE(a.prices(), c.prices());
    EXPECT_THROW(generate(make_spec(1), 0, 0), std::invalid_argument);
}

TEST(Generate, FeatureAndPriceLaws) {
    struct Law {
        int id;
        double x_mean, p_mean, p_var;
    };
    // world 5 prices are centred on x0, whose mean is 5
    for (const Law& law : {Law{1, 5, 5, 1}, Law{2, 0, 0, 2}, Law{3, 0, 5, 3}, Law{4, 0, 5, 3}, Law{5, 5, 5, 3},
                           Law{6, 0, 5, 3}}) {
        auto d = generate(make_spec(law.id), 40000, 2);
        double xs = 0, ps = 0, ps2 = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            xs += d.features()(i, 0);
            ps += d.prices()[i];
            ps2 += d.prices()[i] * d.prices()[i];
        }
        const double n = static_cast<double>(d.size());
        const double pm = ps / n;
        EXPECT_NEAR(xs / n, law.x_mean, 0.03) << law.id;
        EXPECT_NEAR(pm, law.p_mean, 0.04) << law.id;
        EXPECT_NEAR(ps2 / n - pm * pm, law.p_var, 0.1) << law.id;  // Var(x0 + e) = 1 + 2 where prices follow x0
    }
}

TEST(Generate, CalibratedAgainstTrueProbability) {
    // Bin rows by latent index z = g + h p; within each bin the sale rate must
    // match the bin's mean Phi(z) to within 3 binomial standard errors.
    for (int id = 1; id <= 6; ++id) {
        auto spec = make_spec(id, 0);
        auto d = generate(spec, 100000, 100 + static_cast<std::uint64_t>(id));
        std::map<long, std::array<double, 3>> bins;  // sold, sum Phi, count
        for (std::size_t i = 0; i < d.size(); ++i) {
            auto x = d.features().row(i);
            const double z = spec.g(x) + spec.h(x) * d.prices()[i];
            auto& b = bins[std::lround(std::floor(z / 0.25))];
            b[0] += d.outcomes()[i];
            b[1] += standard_normal_cdf(z);
            b[2] += 1;
        }
        int checked = 0;
        for (const auto& [key, b] : bins) {
            if (b[2] < 500) continue;
            const double expect = b[1] / b[2];
            const double se = std::sqrt(std::max(expect * (1 - expect), 1e-4) / b[2]);
            EXPECT_NEAR(b[0] / b[2], expect, 3 * se) << "spec " << id << " bin " << key;
            ++checked;
        }
        EXPECT_GT(checked, 5) << id;
    }
}

TEST(Generate, WorldTwoIgnoresTrailingFeatures) {
    auto spec = make_spec(2, 3);
    auto d = generate(spec, 100, 3);
    CounterRng rng(1, 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<double> x(d.features().row(i).begin(), d.features().row(i).end());
        const double before = true_probability(spec, x, d.prices()[i]);
        for (std::size_t j = 5; j < 20; ++j) x[j] = rng.normal(0, 25);
        std::reverse(x.begin() + 5, x.end());
        EXPECT_EQ(true_probability(spec, x, d.prices()[i]), before);
    }
}

TEST(ToyTruth, Valuations) {
    auto t = toy_truth();
    EXPECT_EQ(t.predict_proba(std::vector<double>{0.0}, 10.0), 1.0);
    EXPECT_EQ(t.predict_proba(std::vector<double>{0.0}, 12.0), 0.0);
    EXPECT_EQ(t.predict_proba(std::vector<double>{1.0}, 12.0), 1.0);
    EXPECT_EQ(t.predict_proba(std::vector<double>{1.0}, 12.01), 0.0);
}
