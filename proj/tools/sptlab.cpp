// sptlab: generate synthetic pricing data, fit pricing policies, score them,
// run replicated sweeps and export trees.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sptlab/sptlab.hpp"

#ifndef SPTLAB_PLAN_DIR
#define SPTLAB_PLAN_DIR "plans"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sptlab;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
std::optional<T> number(std::string_view s) {
    T v{};
    if (detail::parse_number(s, v)) return v;
    return std::nullopt;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    if (auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError(path + ": cannot open for writing");
    out << text;
    if (!out) throw UsageError(path + ": write failed");
}

// "percentile" or a comma list of prices
PriceGrid make_grid(const std::string& spec, const Dataset& data) {
    if (spec == "percentile") return percentile_grid(data.prices());
    std::vector<double> values;
    for (auto field : detail::split_commas(spec)) {
        auto v = number<double>(field);
        if (!v) throw UsageError("--grid: '" + std::string(field) + "' is not a number");
        values.push_back(*v);
    }
    return explicit_grid(std::move(values));
}

GbtConfig parse_gbt_options(const std::string& opts, std::uint64_t seed) {
    GbtConfig cfg;
    cfg.seed = seed;
    if (opts.empty()) return cfg;
    for (auto field : detail::split_commas(opts)) {
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) throw UsageError("gbt option '" + std::string(field) + "' lacks '='");
        const std::string key(detail::trim(field.substr(0, eq)));
        const auto value = number<double>(field.substr(eq + 1));
        if (!value) throw UsageError("gbt option '" + key + "': bad number");
        if (key == "rounds") cfg.rounds = static_cast<int>(*value);
        else if (key == "lr" || key == "learning_rate") cfg.learning_rate = *value;
        else if (key == "leaves" || key == "max_leaves") cfg.max_leaves = static_cast<std::size_t>(*value);
        else if (key == "min_child" || key == "min_child_samples") cfg.min_child_samples = static_cast<std::size_t>(*value);
        else if (key == "l2") cfg.l2_regularization = *value;
        else throw UsageError("unknown gbt option '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

// Teacher / truth sources:
//   gbt[:k=v,...]   fit on the data file
//   gbt-file:PATH   previously saved boosted model
//   table:PATH      n x m probability table aligned with the data rows and grid
//   oracle:ID       synthetic world ID (world 2 uses --seed for its coefficients)
//   oracle:toy      the two-type inelastic fixture
std::unique_ptr<TeacherModel> make_model(const std::string& source, const Dataset& data, const PriceGrid& grid,
                                         std::uint64_t seed) {
    const auto colon = source.find(':');
    const std::string kind = source.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : source.substr(colon + 1);
    if (kind == "gbt") return std::make_unique<GradientBoostedTeacher>(fit_gbt(data, parse_gbt_options(arg, seed)));
    if (kind == "gbt-file") {
        std::ifstream in(arg);
        if (!in) throw UsageError(arg + ": cannot open model file");
        return std::make_unique<GradientBoostedTeacher>(load_gbt(in));
    }
    if (kind == "table") return std::make_unique<TableTeacher>(load_table_teacher(arg, grid));
    if (kind == "oracle") {
        if (arg == "toy") return std::make_unique<OracleTeacher>(toy_truth());
        const auto id = number<int>(arg);
        if (!id) throw UsageError("oracle source needs a spec id or 'toy', got '" + arg + "'");
        return std::make_unique<OracleTeacher>(oracle_teacher(make_spec(*id, seed)));
    }
    throw UsageError("unknown model source '" + source + "' (gbt, gbt-file:, table:, oracle:)");
}

void check_model_dim(const TeacherModel& model, const Dataset& data) {
    if (model.dim() != 0 && model.dim() != data.dim())
        throw UsageError("model expects " + std::to_string(model.dim()) + " features, data has " +
                         std::to_string(data.dim()));
}

// Policy files: single trees use the tree schema; one-vs-all carries kind.
struct LoadedPolicy {
    std::optional<PolicyTree> tree;
    std::optional<OneVsAllPolicy> ova;

    double predict_price(std::span<const double> x) const { return tree ? tree->predict_price(x) : ova->predict_price(x); }
};

LoadedPolicy load_policy(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
    LoadedPolicy p;
    if (j.value("kind", std::string{}) == "one_vs_all") p.ova.emplace(one_vs_all_from_json(j));
    else p.tree.emplace(tree_from_json(j));
    return p;
}

// ---------------------------------------------------------------------------

int cmd_synth(int spec_id, std::size_t n, std::uint64_t seed, const std::string& out) {
    const auto spec = make_spec(spec_id, seed);
    const auto data = generate(spec, n, seed);
    write_csv(out, data);
    std::cout << "wrote " << out << ": n=" << data.size() << " d=" << data.dim()
              << " positive_rate=" << detail::format_double(data.positive_rate()) << '\n';
    return 0;
}

struct FitOptions {
    std::string data, teacher = "gbt", method = "spt", grid = "percentile", out, save_teacher;
    int depth = 3;
    std::size_t minsplit = 2, min_leaf = 1;
    bool unbounded = false;
    std::uint64_t seed = 0;
};

int cmd_fit(const FitOptions& o) {
    const auto data = load_csv(o.data);
    const auto grid = make_grid(o.grid, data);
    const auto teacher = make_model(o.teacher, data, grid, o.seed);
    check_model_dim(*teacher, data);
    if (!o.save_teacher.empty()) {
        const auto* gbt = dynamic_cast<const GradientBoostedTeacher*>(teacher.get());
        if (!gbt) throw UsageError("--save-teacher needs a gbt teacher");
        std::ostringstream ss;
        save_gbt(ss, *gbt);
        write_file(o.save_teacher, ss.str());
    }
    const FitConfig config{o.unbounded ? kUnboundedDepth : o.depth, o.minsplit, o.min_leaf};
    config.validate();
    const auto revmat = revenue_matrix(*teacher, data.features(), grid);
    const json meta{{"method", o.method},     {"data", o.data},         {"teacher", o.teacher},
                    {"grid", o.grid},         {"max_depth", o.unbounded ? -1 : o.depth},
                    {"minsplit", o.minsplit}, {"min_leaf", o.min_leaf}, {"seed", o.seed}};

    json doc;
    std::size_t leaves = 0;
    auto train_revenue = [&](const auto& policy) {
        double s = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto k = grid.find(policy.predict_price(data.features().row(i)));
            s += revmat.values(i, k);
        }
        return s / static_cast<double>(data.size());
    };
    double revenue = 0.0;
    if (o.method == "ct") {
        const auto assign = assign_treatments(data.prices(), grid);
        const auto ova = fit_ct_one_vs_all(data, grid, assign, config, o.seed);
        doc = one_vs_all_to_json(ova);
        leaves = ova.n_leaves();
        revenue = train_revenue(ova);
    } else {
        std::optional<PolicyTree> tree;
        if (o.method == "spt") {
            tree.emplace(fit_spt(data.features(), revmat, config, data.feature_names()));
        } else if (o.method == "pt") {
            tree.emplace(fit_pt(data, grid, assign_treatments(data.prices(), grid), config));
        } else if (o.method == "naive") {
            tree.emplace(fit_naive_distill(*teacher, data.features(), grid, config, data.feature_names()));
        } else if (o.method == "const") {
            tree.emplace(constant_price_policy(revmat));
        } else {
            throw UsageError("unknown method '" + o.method + "' (spt, pt, ct, naive, const)");
        }
        doc = tree_to_json(*tree);
        leaves = tree->n_leaves();
        revenue = train_revenue(*tree);
    }
    doc["meta"] = meta;
    write_file(o.out, doc.dump(2) + "\n");
    std::cout << o.method << ": leaves=" << leaves << " predicted_training_revenue=" << detail::format_double(revenue)
              << " -> " << o.out << '\n';
    return 0;
}

int cmd_evaluate(const std::string& tree_path, const std::string& data_path, const std::string& truth_src,
                 const std::string& grid_spec, std::uint64_t seed, const std::string& out) {
    const auto policy = load_policy(tree_path);
    const auto data = load_csv(data_path);
    const PriceGrid& policy_grid = policy.tree ? policy.tree->grid() : policy.ova->grid();
    const auto grid = grid_spec.empty() ? policy_grid : make_grid(grid_spec, data);
    const auto truth = make_model(truth_src, data, grid, seed);
    check_model_dim(*truth, data);
    const double revenue = expected_revenue(policy, data.features(), *truth);
    std::cout << detail::format_double(revenue) << '\n';
    if (!out.empty()) {
        const json report{{"tree", tree_path},         {"data", data_path}, {"truth", truth_src},
                          {"seed", seed},              {"n", data.size()},  {"mean_revenue", revenue}};
        write_file(out, report.dump(2) + "\n");
    }
    return 0;
}

std::string resolve_plan(const std::string& plan) {
    if (fs::exists(plan)) return plan;
    for (const auto& dir : {fs::path("plans"), fs::path(SPTLAB_PLAN_DIR)}) {
        const auto candidate = dir / (plan + ".json");
        if (fs::exists(candidate)) return candidate.string();
    }
    throw UsageError(plan + ": no such plan file or bundled plan");
}

int cmd_experiment(const std::string& plan_arg, const std::string& out_dir, std::size_t threads) {
    const auto plan = load_plan(resolve_plan(plan_arg));
    const auto rows = run_experiment(plan, threads == 0 ? default_thread_count() : threads);
    fs::create_directories(out_dir);
    std::ostringstream results, summary;
    write_results_csv(results, rows);
    write_summary_csv(summary, summarize(rows));
    write_file((fs::path(out_dir) / "results.csv").string(), results.str());
    write_file((fs::path(out_dir) / "summary.csv").string(), summary.str());
    write_file((fs::path(out_dir) / "plan.json").string(), plan_to_json(plan).dump(2) + "\n");
    std::cout << plan.name << ": " << rows.size() << " rows -> " << out_dir << '\n';
    return 0;
}

int cmd_export(const std::string& tree_path, const std::string& format, const std::string& out) {
    ExportFormat fmt;
    if (format == "json") fmt = ExportFormat::json;
    else if (format == "dot") fmt = ExportFormat::dot;
    else throw UsageError("unknown format '" + format + "' (json, dot)");
    const auto policy = load_policy(tree_path);
    if (!policy.tree) throw UsageError(tree_path + ": one-vs-all policies have no single-tree rendering");
    auto text = export_tree(*policy.tree, fmt);
    if (text.empty() || text.back() != '\n') text += '\n';
    if (out.empty()) std::cout << text;
    else write_file(out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sptlab: prescriptive pricing trees distilled from a demand model"};
    app.require_subcommand(1);

    int spec_id = 1;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::string out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--spec", spec_id, "world id 1-6")->required();
    synth->add_option("--n", n, "rows")->required();
    synth->add_option("--seed", seed, "random seed");
    synth->add_option("--out", out, "output CSV")->required();

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "fit a pricing policy");
    fit->add_option("--data", fo.data, "training CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--teacher", fo.teacher, "gbt[:k=v,..] | gbt-file:PATH | table:PATH | oracle:ID");
    fit->add_option("--method", fo.method, "spt | pt | ct | naive | const");
    fit->add_option("--grid", fo.grid, "percentile | comma list of prices");
    auto* depth_opt = fit->add_option("--depth", fo.depth, "max depth");
    auto* minsplit_opt = fit->add_option("--minsplit", fo.minsplit, "smallest node that may split");
    fit->add_option("--min-leaf", fo.min_leaf, "smallest child");
    fit->add_option("--seed", fo.seed, "seed for the teacher and causal-tree sample split");
    fit->add_option("--save-teacher", fo.save_teacher, "write the fitted gbt model here");
    fit->add_option("--out", fo.out, "output JSON")->required();

    std::string tree_path, data_path, truth = "oracle:1", grid_spec;
    auto* evaluate = app.add_subcommand("evaluate", "expected revenue of a policy under a truth model");
    evaluate->add_option("--tree", tree_path, "policy JSON")->required();
    evaluate->add_option("--data", data_path, "rows to price (CSV)")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--truth", truth, "oracle:ID | oracle:toy | table:PATH | gbt-file:PATH | gbt");
    evaluate->add_option("--grid", grid_spec, "grid for table truths (default: the policy's grid)");
    evaluate->add_option("--seed", seed, "seed for world 2 coefficients or a gbt evaluator");
    evaluate->add_option("--out", out, "optional JSON report");

    std::string plan, out_dir = "results";
    std::size_t threads = 0;
    auto* experiment = app.add_subcommand("experiment", "run a replicated sweep");
    experiment->add_option("--plan", plan, "plan JSON or bundled plan name")->required();
    experiment->add_option("--out-dir", out_dir, "output directory");
    experiment->add_option("--threads", threads, "workers (default: SPTLAB_THREADS or all cores)");

    std::string format = "json";
    auto* exp = app.add_subcommand("export", "render a tree as JSON or Graphviz DOT");
    exp->add_option("--tree", tree_path, "policy JSON")->required();
    exp->add_option("--format", format, "json | dot");
    exp->add_option("--out", out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    if (*minsplit_opt && !*depth_opt) fo.unbounded = true;

    try {
        if (*synth) return cmd_synth(spec_id, n, seed, out);
        if (*fit) return cmd_fit(fo);
        if (*evaluate) return cmd_evaluate(tree_path, data_path, truth, grid_spec, seed, out);
        if (*experiment) return cmd_experiment(plan, out_dir, threads);
        if (*exp) return cmd_export(tree_path, format, out);
    } catch (const std::exception& e) {
        std::cerr << "sptlab: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
