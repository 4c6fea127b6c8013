// Acceptance runner: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace sptlab;
using namespace sptlab::testing;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// mean revenue over rows matching (spec, policy, depth)
double mean_of(const std::vector<ResultRow>& rows, int spec, const std::string& policy, std::optional<int> depth = {}) {
    double s = 0;
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.spec == spec && r.policy == policy && (!depth || r.depth == *depth)) {
            s += r.mean_revenue;
            ++k;
        }
    if (k == 0) throw std::logic_error("no rows for " + policy);
    return s / static_cast<double>(k);
}

double mean_leaves(const std::vector<ResultRow>& rows, const std::string& policy, std::size_t minsplit) {
    double s = 0;
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.policy == policy && r.minsplit == minsplit) {
            s += static_cast<double>(r.n_leaves);
            ++k;
        }
    return s / static_cast<double>(k);
}

double mean_revenue_at(const std::vector<ResultRow>& rows, const std::string& policy, std::size_t minsplit) {
    double s = 0;
    std::size_t k = 0;
    for (const auto& r : rows)
        if (r.policy == policy && r.minsplit == minsplit) {
            s += r.mean_revenue;
            ++k;
        }
    return s / static_cast<double>(k);
}

ExperimentPlan base_plan(std::vector<int> specs, std::size_t reps) {
    ExperimentPlan p;
    p.specs = std::move(specs);
    for (std::uint64_t s = 0; s < reps; ++s) p.seeds.push_back(s);
    p.n_train = {5000};
    return p;
}

// 1. two-type fixture
Verdict toy_example() {
    auto truth = toy_truth();
    auto x = toy_features();
    auto revmat = revenue_matrix(truth, x, toy_grid());
    auto single = fit_spt(x, revmat, FitConfig{0, 2, 1});
    auto regression = fit_price_regression(truth, x, toy_grid(), FitConfig{0, 2, 1});
    auto depth1 = fit_spt(x, revmat, FitConfig{1, 2, 1});
    const double r_single = expected_revenue(single, x, truth);
    const double r_reg = expected_revenue(regression, x, truth);
    const double r_d1 = expected_revenue(depth1, x, truth);
    const double p_single = single.nodes()[0].price, p_reg = regression.nodes()[0].price;
    const bool ok = std::abs(p_single - 10) <= 1e-12 && std::abs(r_single - 10) <= 1e-12 && std::abs(p_reg - 11) <= 1e-12 &&
                    std::abs(r_reg - 5.5) <= 1e-12 && std::abs(r_d1 - 11) <= 1e-12;
    return {ok, "single price " + fmt(p_single, 2) + " earns " + fmt(r_single, 4) + "; regression price " +
                    fmt(p_reg, 2) + " earns " + fmt(r_reg, 4) + "; depth 1 earns " + fmt(r_d1, 4)};
}

// 2. optimal column, fine grid over the observed price range
Verdict optimal_column() {
    auto plan = base_plan({1, 4}, 10);
    plan.depths = {1};
    plan.teacher = "oracle";
    plan.policies = {"optimal", "optimal_grid"};
    const auto rows = run_experiment(plan, default_thread_count());
    const double s1 = mean_of(rows, 1, "optimal"), s4 = mean_of(rows, 4, "optimal");
    const double g1 = mean_of(rows, 1, "optimal_grid"), g4 = mean_of(rows, 4, "optimal_grid");
    const bool ok = std::abs(s1 - 3.28) <= 0.10 && std::abs(s4 - 3.49) <= 0.10;
    return {ok, "fine-grid optimum: spec 1 " + fmt(s1) + " (target 3.28 +/- 0.10), spec 4 " + fmt(s4) +
                    " (target 3.49 +/- 0.10); 9-price grid optimum for reference: spec 1 " + fmt(g1) + ", spec 4 " +
                    fmt(g4)};
}

// 3. ordering on specs 2, 4, 6, pooled over depths 1..5
Verdict table_one_ordering() {
    auto plan = base_plan({2, 4, 6}, 10);
    plan.depths = {1, 2, 3, 4, 5};
    plan.policies = {"spt", "pt", "ct"};
    const auto rows = run_experiment(plan, default_thread_count());
    bool ok = true;
    std::string detail;
    for (int spec : {2, 4, 6}) {
        const double spt = mean_of(rows, spec, "spt"), pt = mean_of(rows, spec, "pt"), ct = mean_of(rows, spec, "ct");
        const bool here = spt > pt && spt > ct;
        ok = ok && here;
        if (!detail.empty()) detail += "; ";
        detail += "spec " + std::to_string(spec) + " SPT " + fmt(spt) + " PT " + fmt(pt) + " CT " + fmt(ct) +
                  (here ? "" : " (order violated)");
    }
    return {ok, detail};
}

// 4. naive distill-then-optimize on spec 4
Verdict naive_gap() {
    auto plan = base_plan({4}, 10);
    plan.depths = {1, 2, 3, 4, 5};
    plan.policies = {"spt", "naive", "naive_student"};
    const auto rows = run_experiment(plan, default_thread_count());
    const double spt3 = mean_of(rows, 4, "spt", 3);
    double worst_gap = std::numeric_limits<double>::infinity();
    std::string naive, student;
    for (int d = 1; d <= 5; ++d) {
        const double v = mean_of(rows, 4, "naive", d);
        worst_gap = std::min(worst_gap, spt3 - v);
        naive += (d > 1 ? " " : "") + fmt(v);
        student += (d > 1 ? " " : "") + fmt(mean_of(rows, 4, "naive_student", d));
    }
    return {worst_gap >= 0.3, "SPT depth 3 " + fmt(spt3) + "; naive (x-only leaves) depths 1-5: " + naive +
                                  ", smallest gap " + fmt(worst_gap) + " (need >= 0.300); (x,p) demand student depths 1-5: " +
                                  student};
}

// 5. regret bound on the designed truth
Verdict regret_suite() {
    auto truth = designed_regret_truth();
    auto grid = fine_grid(0.0, 3.0, 301);
    const double L = lipschitz_estimate(truth, grid, 2);
    bool ok = true;
    std::string detail = "L=" + fmt(L, 4);
    for (int k : {2, 4, 6, 8}) {
        auto r = verify_regret_bound(truth, L, grid, k, 20000, 2000, 1);
        ok = ok && r.passed();
        detail += "; k=" + std::to_string(k) + " regret " + fmt(r.max_observed_regret, 4) + " <= bound " +
                  fmt(r.bound, 4) + " + slack " + fmt(r.slack, 4);
    }
    return {ok, detail};
}

// 6. depth-1 greedy equals exhaustive enumeration
Verdict greedy_equivalence() {
    std::size_t matched = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto inst = random_instance(10000 + seed);
        auto brute = brute_force_depth_one(inst);
        auto t = fit_spt(inst.features, inst.revmat, FitConfig{1, 2, 1});
        matched += t.total_revenue_sum() == brute.best;
    }
    return {matched == 50, std::to_string(matched) + "/50 instances match exactly"};
}

// 7. monotonicity in depth
Verdict monotonicity() {
    bool ok = true;
    std::string detail;
    for (int id = 1; id <= 6; ++id) {
        auto spec = make_spec(id, 0);
        auto d = generate(spec, 2000, 0);
        auto grid = percentile_grid(d.prices());
        auto teacher = fit_gbt(d);
        auto revmat = revenue_matrix(teacher, d.features(), grid);
        auto targets = distill_targets(teacher, d.features(), grid);
        double prev_rev = -1, prev_mse = std::numeric_limits<double>::infinity();
        bool here = true;
        for (int k = 0; k <= 5; ++k) {
            const double rev = fit_spt(d.features(), revmat, FitConfig{k, 2, 1}).total_revenue_sum();
            const double mse =
                multi_output_mse(fit_naive_distill(teacher, d.features(), grid, FitConfig{k, 2, 1}), d.features(), targets);
            here = here && rev >= prev_rev && mse <= prev_mse;
            prev_rev = rev;
            prev_mse = mse;
        }
        ok = ok && here;
        if (!here) detail += " spec " + std::to_string(id) + " violates;";
    }
    return {ok, ok ? "SPT training revenue non-decreasing and naive MSE non-increasing, depths 0-5, specs 1-6" : detail};
}

// 8. generator calibration
Verdict calibration() {
    bool ok = true;
    std::string detail;
    for (int id = 1; id <= 6; ++id) {
        auto spec = make_spec(id, 0);
        auto d = generate(spec, 100000, static_cast<std::uint64_t>(id));
        std::map<long, std::array<double, 3>> bins;
        for (std::size_t i = 0; i < d.size(); ++i) {
            auto x = d.features().row(i);
            const double z = spec.g(x) + spec.h(x) * d.prices()[i];
            auto& b = bins[std::lround(std::floor(z / 0.25))];
            b[0] += d.outcomes()[i];
            b[1] += standard_normal_cdf(z);
            b[2] += 1;
        }
        std::size_t occupied = 0, within = 0;
        for (const auto& [key, b] : bins) {
            ++occupied;
            const double expect = b[1] / b[2];
            const double se = std::sqrt(expect * (1 - expect) / b[2]);
            within += std::abs(b[0] / b[2] - expect) <= 3 * se + 1e-12;
        }
        const double frac = static_cast<double>(within) / static_cast<double>(occupied);
        ok = ok && frac >= 0.95;
        detail += (id > 1 ? ", " : "") + std::string("spec ") + std::to_string(id) + " " + std::to_string(within) + "/" +
                  std::to_string(occupied);
    }
    return {ok, "bins within 3 SE: " + detail};
}

// 9. minsplit sweep on spec 4
Verdict table_two() {
    const auto plan = load_plan(std::string(SPTLAB_SOURCE_DIR) + "/plans/table2.json");
    const auto rows = run_experiment(plan, default_thread_count());
    const std::vector<std::size_t> minsplits{50, 150, 500, 1500};
    const std::vector<double> reported{120.4, 64, 24.6, 5.4};
    bool ok = true;
    double prev = std::numeric_limits<double>::infinity();
    std::string detail;
    for (std::size_t i = 0; i < minsplits.size(); ++i) {
        const double leaves = mean_leaves(rows, "spt", minsplits[i]);
        const double revenue = mean_revenue_at(rows, "spt", minsplits[i]);
        const bool here = leaves < prev && leaves >= reported[i] / 2 && leaves <= reported[i] * 2 && revenue >= 3.25;
        ok = ok && here;
        prev = leaves;
        detail += (i ? "; " : "") + std::string("minsplit ") + std::to_string(minsplits[i]) + " leaves " + fmt(leaves, 1) +
                  " (reported " + fmt(reported[i], 1) + ") revenue " + fmt(revenue);
    }
    return {ok, detail};
}

// 10. performance
Verdict performance() {
    auto spec = make_spec(2, 0);
    auto d = generate(spec, 5000, 0);
    auto grid = percentile_grid(d.prices());
    auto revmat = revenue_matrix(oracle_teacher(spec), d.features(), grid);
    const auto t0 = std::chrono::steady_clock::now();
    auto tree = fit_spt(d.features(), revmat, FitConfig{5, 2, 1});
    const double fit_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto plan = load_plan(std::string(SPTLAB_SOURCE_DIR) + "/plans/table1_small.json");
    const auto t1 = std::chrono::steady_clock::now();
    const auto rows = run_experiment(plan, default_thread_count());
    const double plan_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    const bool ok = fit_s < 5.0 && plan_s < 600.0 && grid.size() == 9 && d.dim() == 20;
    return {ok, "fit_spt n=5000 d=20 m=" + std::to_string(grid.size()) + " depth 5: " + fmt(fit_s, 3) + " s (" +
                    std::to_string(tree.n_leaves()) + " leaves); table1_small (" + std::to_string(rows.size()) +
                    " rows): " + fmt(plan_s, 1) + " s"};
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, toy_example},  {2, optimal_column}, {3, table_one_ordering}, {4, naive_gap},   {5, regret_suite},
        {6, greedy_equivalence}, {7, monotonicity}, {8, calibration}, {9, table_two}, {10, performance},
    };
    int failures = 0;
    for (const auto& [id, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v{false, ""};
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !v.pass;
        std::printf("criterion %d: %s | %s | %.1f s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
