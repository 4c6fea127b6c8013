#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sptlab/synth.hpp"
#include "sptlab/teacher.hpp"

using namespace sptlab;

namespace {

// Reference values of the standard normal CDF (tabulated, 16 digits).
constexpr double kPhi1 = 0.8413447460685429;
constexpr double kPhiMinus1 = 0.15865525393145707;

OracleTeacher constant_teacher(std::size_t dim, double v) {
    return OracleTeacher(dim, [v](std::span<const double>, double) { return v; });
}

// sold iff price < 5, one noise feature
Dataset separable(std::size_t n) {
    Matrix x(n, 1);
    std::vector<double> p(n), y(n);
    CounterRng rng(1, 77);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        p[i] = 10.0 * rng.uniform();
        y[i] = p[i] < 5.0 ? 1.0 : 0.0;
    }
    return Dataset(x, p, y);
}

double base_rate_log_loss(const Dataset& train, const Dataset& test) {
    const double r = train.positive_rate();
    double s = 0;
    for (double y : test.outcomes()) s -= y == 1.0 ? std::log(r) : std::log(1 - r);
    return s / static_cast<double>(test.size());
}

// Brute-force AUC over all positive/negative pairs.
double pair_auc(const std::vector<double>& s, const std::vector<double>& y) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                den += 1;
                num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return num / den;
}

}  // namespace

TEST(OracleTeacherTest, ProbitValues) {
    auto t = oracle_teacher(make_spec(1));
    const std::vector<double> x{5.0, 5.0};
    EXPECT_DOUBLE_EQ(t.predict_proba(x, 5.0), 0.5);
    EXPECT_LT(t.predict_proba(x, 60.0), 1e-300);
    EXPECT_THROW((void)t.predict_proba(std::vector<double>{5.0}, 5.0), std::invalid_argument);
    EXPECT_EQ(t.variant(), TeacherModel::Variant::oracle);
}

TEST(OracleTeacherTest, MatchesTrueProbabilityEverywhere) {
    for (int id = 1; id <= 6; ++id) {
        auto spec = make_spec(id, 5);
        auto t = oracle_teacher(spec);
        auto d = generate(spec, 200, 5);
        for (std::size_t i = 0; i < d.size(); ++i)
            EXPECT_EQ(t.predict_proba(d.features().row(i), d.prices()[i]),
                      true_probability(spec, d.features().row(i), d.prices()[i]));
    }
}

TEST(TableTeacherTest, LookupAndValidation) {
    std::istringstream ok("0.3\n0.7\n");
    auto t = read_table_teacher(ok, PriceGrid({5.0}));
    EXPECT_EQ(t.predict_row(0, {}, 5.0), 0.3);
    EXPECT_EQ(t.predict_row(1, {}, 5.0), 0.7);
    EXPECT_THROW((void)t.predict_row(2, {}, 5.0), std::out_of_range);
    EXPECT_THROW((void)t.predict_row(0, {}, 4.0), std::invalid_argument);
    EXPECT_THROW((void)t.predict_proba(std::vector<double>{1.0}, 5.0), std::logic_error);

    std::istringstream wide("0.1,0.2,0.25\n0.4,0.5,0.6\n");
    auto t3 = read_table_teacher(wide, PriceGrid({1.0, 2.0, 3.0}));
    EXPECT_EQ(t3.predict_row(0, {}, 3.0), 0.25);

    std::istringstream too_big("0.3\n1.2\n");
    EXPECT_THROW(read_table_teacher(too_big, PriceGrid({5.0})), std::invalid_argument);
    std::istringstream shape("0.1,0.2,0.3\n0.1,0.2,0.3\n");
    EXPECT_THROW(read_table_teacher(shape, PriceGrid({1.0, 2.0})), std::invalid_argument);
    std::istringstream ragged("0.1,0.2\n0.1\n");
    EXPECT_THROW(read_table_teacher(ragged, PriceGrid({1.0, 2.0})), ParseError);
}

TEST(RevenueMatrixTest, ConstantTeachers) {
    Matrix x(3, 2, 1.0);
    auto half = revenue_matrix(constant_teacher(2, 0.5), x, PriceGrid({4.0}));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(half.values(i, 0), 2.0);
    auto zero = revenue_matrix(constant_teacher(2, 0.0), x, PriceGrid({1.0, 2.0}));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(zero.values(i, k), 0.0);
}

TEST(RevenueMatrixTest, WorldOneAtCenter) {
    Matrix x(1, 2, 5.0);
    auto r = revenue_matrix(oracle_teacher(make_spec(1)), x, PriceGrid({4.0, 5.0, 6.0}));
    EXPECT_NEAR(r.values(0, 0), 4 * kPhi1, 1e-12);
    EXPECT_NEAR(r.values(0, 1), 2.5, 1e-15);
    EXPECT_NEAR(r.values(0, 2), 6 * kPhiMinus1, 1e-12);
    EXPECT_NEAR(r.values(0, 0), 3.3654, 5e-5);
    EXPECT_NEAR(r.values(0, 2), 0.9519, 5e-5);
}

TEST(RevenueMatrixTest, RecomputationIsBitIdentical) {
    auto d = generate(make_spec(3), 300, 2);
    auto model = fit_gbt(d, GbtConfig{.rounds = 10});
    auto grid = percentile_grid(d.prices());
    auto a = revenue_matrix(model, d.features(), grid);
    auto b = revenue_matrix(model, d.features(), grid);
    EXPECT_EQ(a.values, b.values);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.prices(); ++k) {
            const double p = grid[k];
            EXPECT_GE(a.values(i, k), std::min(0.0, p));
            EXPECT_LE(a.values(i, k), std::max(0.0, p));
        }
}

TEST(Gbt, SeparableDataFitsExactly) {
    auto d = separable(400);
    auto m = fit_gbt(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double p = m.predict_proba(d.features().row(i), d.prices()[i]);
        EXPECT_EQ(p > 0.5 ? 1.0 : 0.0, d.outcomes()[i]) << "row " << i;
    }
}

TEST(Gbt, TinyStepStaysAtBaseRate) {
    auto d = generate(make_spec(1), 500, 1);
    auto m = fit_gbt(d, GbtConfig{.rounds = 1, .learning_rate = 1e-9});
    for (std::size_t i = 0; i < 50; ++i)
        EXPECT_NEAR(m.predict_proba(d.features().row(i), d.prices()[i]), d.positive_rate(), 1e-7);
}

TEST(Gbt, BeatsBaseRateOutOfSample) {
    auto spec = make_spec(1);
    auto train = generate(spec, 5000, 0);
    auto test = generate(spec, 5000, 99);
    auto m = fit_gbt(train);
    EXPECT_LT(log_loss(m, test), base_rate_log_loss(train, test));
    EXPECT_GT(auc(m, test), 0.75);
}

TEST(Gbt, PredictionIsSigmoidOfAdditiveScore) {
    auto d = generate(make_spec(4), 400, 3);
    auto m = fit_gbt(d, GbtConfig{.rounds = 7});
    ASSERT_EQ(m.trees().size(), 7u);
    for (std::size_t i = 0; i < 20; ++i) {
        auto x = d.features().row(i);
        const double p = d.prices()[i];
        double s = m.base_score();
        for (const auto& t : m.trees()) {
            std::size_t id = 0;
            while (t.nodes[id].feature >= 0) {
                const auto f = static_cast<std::size_t>(t.nodes[id].feature);
                const double v = f < 2 ? x[f] : p;
                id = v <= t.nodes[id].threshold ? t.nodes[id].left : t.nodes[id].right;
            }
            s += m.learning_rate() * t.nodes[id].value;
        }
        EXPECT_NEAR(m.predict_proba(x, p), 1.0 / (1.0 + std::exp(-s)), 1e-14);
    }
}

TEST(Gbt, PrefixStability) {
    auto d = generate(make_spec(5), 600, 8);
    auto short_model = fit_gbt(d, GbtConfig{.rounds = 5, .seed = 3});
    auto long_model = fit_gbt(d, GbtConfig{.rounds = 12, .seed = 3});
    for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(short_model.trees()[t], long_model.trees()[t]);
}

TEST(Gbt, BaggedFitsAreSeedDeterministic) {
    auto d = generate(make_spec(5), 600, 8);
    GbtConfig cfg{.rounds = 4, .seed = 21, .bagging_fraction = 0.7};
    EXPECT_TRUE(fit_gbt(d, cfg) == fit_gbt(d, cfg));
    cfg.seed = 22;
    EXPECT_FALSE(fit_gbt(d, cfg) == fit_gbt(d, GbtConfig{.rounds = 4, .seed = 21, .bagging_fraction = 0.7}));
}

TEST(Gbt, LeafCountAndChildSizeLimits) {
    auto d = generate(make_spec(6), 2000, 4);
    auto m = fit_gbt(d, GbtConfig{.rounds = 3, .max_leaves = 5, .min_child_samples = 100});
    for (const auto& t : m.trees()) {
        std::size_t leaves = 0;
        for (const auto& n : t.nodes) leaves += n.feature < 0;
        EXPECT_LE(leaves, 5u);
    }
}

TEST(Gbt, SaveLoadRoundTrip) {
    auto d = generate(make_spec(2, 1), 500, 1);
    auto m = fit_gbt(d, GbtConfig{.rounds = 6});
    std::stringstream ss;
    save_gbt(ss, m);
    auto back = load_gbt(ss);
    EXPECT_TRUE(back == m);
    for (std::size_t i = 0; i < 20; ++i)
        EXPECT_EQ(back.predict_proba(d.features().row(i), d.prices()[i]),
                  m.predict_proba(d.features().row(i), d.prices()[i]));
    std::istringstream junk("sptlab-gbt 2\n");
    EXPECT_THROW(load_gbt(junk), ParseError);
}

TEST(Gbt, RejectsBadInput) {
    Matrix x(4, 1);
    Dataset one_class(x, {1, 2, 3, 4}, {1, 1, 1, 1});
    EXPECT_THROW(fit_gbt(one_class), std::invalid_argument);
    EXPECT_THROW(GbtConfig{.rounds = 0}.validate(), std::invalid_argument);
    EXPECT_THROW(GbtConfig{.learning_rate = 1.5}.validate(), std::invalid_argument);
    EXPECT_THROW(GbtConfig{.max_leaves = 1}.validate(), std::invalid_argument);
    auto m = fit_gbt(separable(100), GbtConfig{.rounds = 2});
    EXPECT_THROW((void)m.predict_proba(std::vector<double>{1.0, 2.0}, 3.0), std::invalid_argument);
}

TEST(Auc, SpecCases) {
    EXPECT_EQ(auc_from_scores(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<double>{0, 0, 1, 1}), 1.0);
    EXPECT_EQ(auc_from_scores(std::vector<double>{0.4, 0.4, 0.4}, std::vector<double>{0, 1, 1}), 0.5);
    EXPECT_EQ(auc_from_scores(std::vector<double>{0.9, 0.8, 0.3}, std::vector<double>{1, 0, 1}), 0.5);
    EXPECT_THROW(auc_from_scores(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), std::invalid_argument);
}

TEST(Auc, MatchesPairCountingAndIgnoresMonotoneMaps) {
    CounterRng rng(5, 5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s, y;
        for (int i = 0; i < 40; ++i) {
            s.push_back(std::round(rng.uniform() * 10) / 10);  // plenty of ties
            y.push_back(i % 3 == 0 ? 1.0 : 0.0);
        }
        const double a = auc_from_scores(s, y);
        EXPECT_NEAR(a, pair_auc(s, y), 1e-12);
        std::vector<double> t;
        for (double v : s) t.push_back(std::exp(3 * v) - 7);
        EXPECT_NEAR(auc_from_scores(t, y), a, 1e-12);
    }
}
