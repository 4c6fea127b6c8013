#pragma once

// Replicated benchmark sweeps over synthetic worlds: generate, fit the
// teacher, fit every requested policy, score on fresh draws, aggregate.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "sptlab/baselines.hpp"
#include "sptlab/dataset.hpp"
#include "sptlab/eval.hpp"
#include "sptlab/spt.hpp"
#include "sptlab/synth.hpp"
#include "sptlab/teacher.hpp"

namespace sptlab {

inline const std::set<std::string>& known_policies() {
    static const std::set<std::string> names{"spt",     "pt",           "ct",        "naive",   "constant",
                                             "teacher", "optimal",      "optimal_grid", "no_change", "naive_student"};
    return names;
}

/// Sweep description. Every (spec, seed, n_train) group is generated once;
/// inside a group each depth and each minsplit value forms one cell.
/// Minsplit cells grow with unbounded depth.
struct ExperimentPlan {
    std::string name = "experiment";
    std::vector<int> specs;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> n_train;
    std::vector<int> depths;
    std::vector<std::size_t> minsplits;
    std::size_t min_leaf = 1;
    /// For minsplit cells: min_leaf = max(min_leaf, minsplit / divisor); 0 keeps min_leaf.
    std::size_t minsplit_leaf_divisor = 0;
    /// Minsplit cells grow to full width (zero-gain splits allowed).
    bool full_width = false;
    std::vector<std::string> policies{"spt", "pt", "ct", "teacher", "optimal", "no_change"};
    std::string teacher = "gbt";  ///< gbt | oracle
    std::string truth = "oracle";  ///< oracle | evaluator
    std::size_t n_test = 10000;
    GbtConfig gbt;

    void validate() const {
        auto bad = [](const std::string& what) { throw std::invalid_argument("experiment plan: " + what); };
        if (specs.empty()) bad("'specs' must list at least one spec id");
        for (int s : specs)
            if (s < 1 || s > 6) bad("spec id " + std::to_string(s) + " is not in 1-6");
        if (seeds.empty()) bad("no seeds (set 'seeds' or 'reps')");
        if (n_train.empty()) bad("'n_train' must list at least one size");
        for (auto n : n_train)
            if (n < 20) bad("n_train values must be >= 20");
        if (depths.empty() && minsplits.empty()) bad("need 'depths' and/or 'minsplits'");
        for (int d : depths)
            if (d < 0) bad("depths must be >= 0");
        for (auto m : minsplits)
            if (m < 2) bad("minsplits must be >= 2");
        if (min_leaf < 1) bad("min_leaf must be >= 1");
        if (policies.empty()) bad("'policies' is empty");
        for (const auto& p : policies)
            if (!known_policies().count(p)) bad("unknown policy '" + p + "'");
        if (teacher != "gbt" && teacher != "oracle") bad("teacher must be 'gbt' or 'oracle'");
        if (truth != "oracle" && truth != "evaluator") bad("truth must be 'oracle' or 'evaluator'");
        if (n_test < 1) bad("n_test must be >= 1");
        gbt.validate();
    }
};

/// Plan document (JSON):
///
///     { "name": "table1", "specs": [1,2,3,4,5,6],
///       "seeds": [0,1,2]            or  "reps": 10, "first_seed": 0,
///       "n_train": [5000], "depths": [1,2,3,4,5], "minsplits": [],
///       "min_leaf": 1, "minsplit_leaf_divisor": 0, "full_width": false,
///       "policies": ["spt","pt","ct","naive","naive_student","constant","teacher","optimal","optimal_grid","no_change"],
///       "teacher": "gbt", "truth": "oracle", "n_test": 10000,
///       "gbt": { "rounds": 50, "learning_rate": 0.1, "max_leaves": 31, "min_child_samples": 20 } }
inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    static const std::set<std::string> keys{"name",     "specs",   "seeds",  "reps",   "first_seed",
                                            "n_train",  "depths",  "minsplits", "min_leaf", "minsplit_leaf_divisor",
                                            "full_width", "policies", "teacher", "truth",  "n_test", "gbt"};
    ExperimentPlan p;
    try {
        if (!j.is_object()) throw std::invalid_argument("experiment plan: top level must be an object");
        for (const auto& [k, v] : j.items())
            if (!keys.count(k)) throw std::invalid_argument("experiment plan: unknown field '" + k + "'");
        p.name = j.value("name", p.name);
        p.specs = j.at("specs").get<std::vector<int>>();
        if (j.contains("seeds")) {
            p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } else {
            const auto reps = j.at("reps").get<std::size_t>();
            const auto first = j.value("first_seed", std::uint64_t{0});
            for (std::size_t r = 0; r < reps; ++r) p.seeds.push_back(first + r);
        }
        p.n_train = j.at("n_train").get<std::vector<std::size_t>>();
        p.depths = j.value("depths", std::vector<int>{});
        p.minsplits = j.value("minsplits", std::vector<std::size_t>{});
        p.min_leaf = j.value("min_leaf", p.min_leaf);
        p.minsplit_leaf_divisor = j.value("minsplit_leaf_divisor", p.minsplit_leaf_divisor);
        p.full_width = j.value("full_width", p.full_width);
        p.policies = j.value("policies", p.policies);
        p.teacher = j.value("teacher", p.teacher);
        p.truth = j.value("truth", p.truth);
        p.n_test = j.value("n_test", p.n_test);
        if (j.contains("gbt")) {
            const auto& g = j.at("gbt");
            p.gbt.rounds = g.value("rounds", p.gbt.rounds);
            p.gbt.learning_rate = g.value("learning_rate", p.gbt.learning_rate);
            p.gbt.max_leaves = g.value("max_leaves", p.gbt.max_leaves);
            p.gbt.min_child_samples = g.value("min_child_samples", p.gbt.min_child_samples);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("experiment plan: ") + e.what());
    }
    p.validate();
    return p;
}

inline nlohmann::json plan_to_json(const ExperimentPlan& p) {
    return {{"name", p.name},
            {"specs", p.specs},
            {"seeds", p.seeds},
            {"n_train", p.n_train},
            {"depths", p.depths},
            {"minsplits", p.minsplits},
            {"min_leaf", p.min_leaf},
            {"minsplit_leaf_divisor", p.minsplit_leaf_divisor},
            {"full_width", p.full_width},
            {"policies", p.policies},
            {"teacher", p.teacher},
            {"truth", p.truth},
            {"n_test", p.n_test},
            {"gbt",
             {{"rounds", p.gbt.rounds},
              {"learning_rate", p.gbt.learning_rate},
              {"max_leaves", p.gbt.max_leaves},
              {"min_child_samples", p.gbt.min_child_samples}}}};
}

inline ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(path + ": cannot open plan file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return plan_from_json(j);
}

/// One scored policy in one replication. depth = -1 means unbounded;
/// n_leaves = 0 for policies that are not trees.
struct ResultRow {
    int spec = 0;
    std::string policy;
    int depth = 0;
    std::size_t minsplit = 2;
    std::size_t n_train = 0;
    std::uint64_t seed = 0;
    double mean_revenue = 0.0;
    std::size_t n_leaves = 0;

    [[nodiscard]] auto key() const { return std::tie(spec, policy, depth, minsplit, n_train, seed); }
    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};


namespace detail {

struct Cell {
    FitConfig config;
    int depth_label;
};

inline std::vector<Cell> plan_cells(const ExperimentPlan& plan) {
    std::vector<Cell> cells;
    for (int d : plan.depths) cells.push_back({FitConfig{d, std::max<std::size_t>(2, 2 * plan.min_leaf), plan.min_leaf}, d});
    for (auto ms : plan.minsplits) {
        std::size_t leaf = plan.min_leaf;
        if (plan.minsplit_leaf_divisor > 0) leaf = std::max(leaf, ms / plan.minsplit_leaf_divisor);
        leaf = std::min(leaf, ms / 2);
        cells.push_back({FitConfig{kUnboundedDepth, ms, std::max<std::size_t>(1, leaf), !plan.full_width}, -1});
    }
    return cells;
}

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) { return CounterRng::mix(seed ^ CounterRng::mix(salt)); }

inline std::vector<ResultRow> run_group(const ExperimentPlan& plan, int spec_id, std::uint64_t seed, std::size_t n) {
    const auto spec = make_spec(spec_id, seed);
    const auto oracle = oracle_teacher(spec);
    const Dataset generated = generate(spec, n, seed);

    std::optional<Dataset> train_holder, test_holder;
    std::optional<GradientBoostedTeacher> evaluator;
    if (plan.truth == "evaluator") {
        auto [eval_half, learn_half] = split_halves(generated, seed);
        GbtConfig cfg = plan.gbt;
        cfg.seed = derived_seed(seed, 0xE7A1);
        evaluator.emplace(fit_gbt(eval_half, cfg));
        train_holder.emplace(learn_half);
        test_holder.emplace(learn_half);
    } else {
        train_holder.emplace(generated);
        test_holder.emplace(generate(spec, plan.n_test, derived_seed(seed, 0x7E57)));
    }
    const Dataset& train = *train_holder;
    const Dataset& test = *test_holder;
    const TeacherModel& truth = evaluator ? static_cast<const TeacherModel&>(*evaluator) : oracle;

    const PriceGrid grid = percentile_grid(train.prices());
    std::optional<GradientBoostedTeacher> fitted;
    if (plan.teacher == "gbt") {
        GbtConfig cfg = plan.gbt;
        cfg.seed = seed;
        fitted.emplace(fit_gbt(train, cfg));
    }
    const TeacherModel& teacher = fitted ? static_cast<const TeacherModel&>(*fitted) : oracle;
    const RevenueMatrix revmat = revenue_matrix(teacher, train.features(), grid);
    const auto assign = assign_treatments(train.prices(), grid);
    const auto [pmin, pmax] = std::minmax_element(train.prices().begin(), train.prices().end());

    auto wants = [&](const char* p) { return std::find(plan.policies.begin(), plan.policies.end(), p) != plan.policies.end(); };

    // depth-independent policies
    std::map<std::string, std::pair<double, std::size_t>> fixed;
    if (wants("teacher")) fixed["teacher"] = {expected_revenue(ModelPolicy(teacher, grid), test.features(), truth), 0};
    if (wants("optimal"))
        fixed["optimal"] = {expected_revenue(ModelPolicy(truth, fine_grid(*pmin, *pmax, 1000)), test.features(), truth), 0};
    if (wants("optimal_grid")) fixed["optimal_grid"] = {expected_revenue(ModelPolicy(truth, grid), test.features(), truth), 0};
    if (wants("no_change")) fixed["no_change"] = {historical_policy_revenue(test, truth), 0};
    if (wants("constant")) fixed["constant"] = {expected_revenue(constant_price_policy(revmat), test.features(), truth), 1};

    std::vector<ResultRow> rows;
    for (const auto& cell : plan_cells(plan)) {
        auto emit = [&](const std::string& policy, double revenue, std::size_t leaves) {
            rows.push_back({spec_id, policy, cell.depth_label, cell.config.minsplit, n, seed, revenue, leaves});
        };
        for (const auto& policy : plan.policies) {
            if (auto it = fixed.find(policy); it != fixed.end()) {
                emit(policy, it->second.first, it->second.second);
            } else if (policy == "spt") {
                const auto tree = fit_spt(train.features(), revmat, cell.config, train.feature_names());
                emit(policy, expected_revenue(tree, test.features(), truth), tree.n_leaves());
            } else if (policy == "pt") {
                const auto tree = fit_pt(train, grid, assign, cell.config);
                emit(policy, expected_revenue(tree, test.features(), truth), tree.n_leaves());
            } else if (policy == "ct") {
                const auto ova = fit_ct_one_vs_all(train, grid, assign, cell.config, seed);
                emit(policy, expected_revenue(ova, test.features(), truth), ova.n_leaves());
            } else if (policy == "naive") {
                const auto tree = fit_naive_distill(teacher, train.features(), grid, cell.config);
                emit(policy, expected_revenue(tree, test.features(), truth), tree.n_leaves());
            } else if (policy == "naive_student") {
                const auto student = fit_demand_student(teacher, train.features(), grid, cell.config, *pmin, *pmax);
                emit(policy, expected_revenue(student, test.features(), truth), student.n_leaves());
            }
        }
    }
    return rows;
}

}  // namespace detail

/// Worker count from SPTLAB_THREADS, else the hardware concurrency.
inline std::size_t default_thread_count() {
    if (const char* env = std::getenv("SPTLAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs every group, in parallel across groups when threads > 1. Output rows
/// are sorted by (spec, policy, depth, minsplit, n_train, seed), so the
/// result does not depend on scheduling.
inline std::vector<ResultRow> run_experiment(const ExperimentPlan& plan, std::size_t threads = 1) {
    plan.validate();
    struct Group {
        int spec;
        std::uint64_t seed;
        std::size_t n;
    };
    std::vector<Group> groups;
    for (int s : plan.specs)
        for (auto n : plan.n_train)
            for (auto seed : plan.seeds) groups.push_back({s, seed, n});

    std::vector<std::vector<ResultRow>> out(groups.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t g; (g = next.fetch_add(1)) < groups.size();) {
            try {
                out[g] = detail::run_group(plan, groups[g].spec, groups[g].seed, groups[g].n);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, groups.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<ResultRow> rows;
    for (auto& g : out) rows.insert(rows.end(), g.begin(), g.end());
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
    return rows;
}

/// Aggregate of one policy over replications. `depth` / `minsplit` are
/// "all" for the row pooling every cell of a (spec, policy, n_train).
struct EvaluationReport {
    int spec = 0;
    std::string policy;
    std::string depth;
    std::string minsplit;
    std::size_t n_train = 0;
    std::size_t replications = 0;
    double mean_revenue = 0.0;
    double std_error = 0.0;
    double min_revenue = 0.0;
    double max_revenue = 0.0;
    double mean_leaves = 0.0;
};

inline std::vector<EvaluationReport> summarize(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<int, std::string, std::string, std::string, std::size_t>;
    std::map<Key, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        groups[{r.spec, r.policy, std::to_string(r.depth), std::to_string(r.minsplit), r.n_train}].push_back(&r);
        groups[{r.spec, r.policy, "all", "all", r.n_train}].push_back(&r);
    }
    std::vector<EvaluationReport> out;
    for (const auto& [key, members] : groups) {
        EvaluationReport rep;
        std::tie(rep.spec, rep.policy, rep.depth, rep.minsplit, rep.n_train) = key;
        rep.replications = members.size();
        double sum = 0, leaves = 0;
        rep.min_revenue = std::numeric_limits<double>::infinity();
        rep.max_revenue = -std::numeric_limits<double>::infinity();
        for (const auto* r : members) {
            sum += r->mean_revenue;
            leaves += static_cast<double>(r->n_leaves);
            rep.min_revenue = std::min(rep.min_revenue, r->mean_revenue);
            rep.max_revenue = std::max(rep.max_revenue, r->mean_revenue);
        }
        const double k = static_cast<double>(members.size());
        rep.mean_revenue = sum / k;
        rep.mean_leaves = leaves / k;
        if (members.size() > 1) {
            double ss = 0;
            for (const auto* r : members) ss += (r->mean_revenue - rep.mean_revenue) * (r->mean_revenue - rep.mean_revenue);
            rep.std_error = std::sqrt(ss / (k - 1)) / std::sqrt(k);
        }
        out.push_back(rep);
    }
    return out;
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "spec,policy,depth,minsplit,n_train,seed,mean_revenue,n_leaves\n";
    for (const auto& r : rows)
        out << r.spec << ',' << r.policy << ',' << r.depth << ',' << r.minsplit << ',' << r.n_train << ',' << r.seed
            << ',' << detail::format_double(r.mean_revenue) << ',' << r.n_leaves << '\n';
}

inline void write_summary_csv(std::ostream& out, const std::vector<EvaluationReport>& reports) {
    out << "spec,policy,depth,minsplit,n_train,replications,mean_revenue,std_error,min_revenue,max_revenue,mean_leaves\n";
    for (const auto& r : reports)
        out << r.spec << ',' << r.policy << ',' << r.depth << ',' << r.minsplit << ',' << r.n_train << ','
            << r.replications << ',' << detail::format_double(r.mean_revenue) << ','
            << detail::format_double(r.std_error) << ',' << detail::format_double(r.min_revenue) << ','
            << detail::format_double(r.max_revenue) << ',' << detail::format_double(r.mean_leaves) << '\n';
}

}  // namespace sptlab
