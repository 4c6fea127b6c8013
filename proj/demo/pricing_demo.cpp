// End-to-end walk through one synthetic world: simulate sales, fit a boosted
// demand model, distill it into a depth-3 pricing tree and compare against
// the comparators under the true demand curve.

#include <cstdio>
#include <iostream>

#include "sptlab/sptlab.hpp"

int main(int argc, char** argv) {
    using namespace sptlab;
    const int spec_id = argc > 1 ? std::atoi(argv[1]) : 4;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;

    const auto spec = make_spec(spec_id, seed);
    const auto train = generate(spec, 5000, seed);
    const auto test = generate(spec, 10000, seed + 1000);
    const auto truth = oracle_teacher(spec);

    const auto grid = percentile_grid(train.prices());
    const auto teacher = fit_gbt(train);
    const auto revmat = revenue_matrix(teacher, train.features(), grid);
    const auto assign = assign_treatments(train.prices(), grid);
    const FitConfig config{3, 2, 1};

    const auto spt = fit_spt(train.features(), revmat, config, train.feature_names());
    const auto pt = fit_pt(train, grid, assign, config);
    const auto ct = fit_ct_one_vs_all(train, grid, assign, config, seed);

    std::printf("world %d, seed %llu, grid of %zu prices\n", spec_id, static_cast<unsigned long long>(seed), grid.size());
    std::printf("  teacher held-out AUC   %.3f\n", auc(teacher, test));
    std::printf("  %-22s %8s %7s\n", "policy", "revenue", "leaves");
    auto row = [](const char* name, double r, std::size_t leaves) { std::printf("  %-22s %8.3f %7zu\n", name, r, leaves); };
    row("historical", historical_policy_revenue(test, truth), 0);
    row("constant", expected_revenue(constant_price_policy(revmat), test.features(), truth), 1);
    row("PT", expected_revenue(pt, test.features(), truth), pt.n_leaves());
    row("CT one-vs-all", expected_revenue(ct, test.features(), truth), ct.n_leaves());
    row("SPT", expected_revenue(spt, test.features(), truth), spt.n_leaves());
    row("teacher, per item", expected_revenue(ModelPolicy(teacher, grid), test.features(), truth), 0);
    row("optimal on grid", expected_revenue(ModelPolicy(truth, grid), test.features(), truth), 0);

    std::cout << "\nSPT policy:\n" << export_dot(spt);
}
