#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "capexrl/oracle.hpp"

using namespace capexrl;

namespace {

EnvParams price_only(int horizon, double interest = 0.05) {
    EnvParams p;
    p.variant = Variant::price_only;
    p.horizon = horizon;
    p.interest = interest;
    return p;
}

EnvParams price_demand(int horizon, int max_capacity) {
    EnvParams p;
    p.variant = Variant::price_demand;
    p.horizon = horizon;
    p.max_capacity = max_capacity;
    p.demand_drift = 0.2;
    p.demand_vol = 0.1;
    p.initial_demand = 1.0;
    p.capacity_per_unit = 1.0;
    return p;
}

}  // namespace

TEST_CASE("two_stage_threshold closed form") {
    const double th = two_stage_threshold(300, 20, 2920);
    CHECK(th == 320.0 / 2920.0);
    CHECK(th == doctest::Approx(0.1095890410958904).epsilon(1e-15));

    char rounded[16];
    std::snprintf(rounded, sizeof rounded, "%.4f", th);
    CHECK(std::string(rounded) == "0.1096");

    CHECK(two_stage_threshold(0, 0, 2920) == 0.0);

    // scale invariance: doubling costs and output leaves the threshold alone
    CHECK(two_stage_threshold(600, 40, 5840) == th);

    CHECK_THROWS_AS(two_stage_threshold(300, 20, 0), ConfigError);
    CHECK(two_stage_threshold(price_only(2)) == th);
    CHECK_THROWS_AS(two_stage_threshold(price_only(3)), ConfigError);
}

TEST_CASE("stage-2 condition: extremes, sample floor and boundary") {
    const EnvParams params = price_only(3);
    Rng rng(5);
    CHECK(stage2_condition_mc(params, 0.5, 10000, rng));    // dominant immediate payoff
    CHECK_FALSE(stage2_condition_mc(params, 0.01, 10000, rng));  // loses at every stage
    CHECK_THROWS_AS(stage2_condition_mc(params, 0.11, 999, rng), ConfigError);
    CHECK_THROWS_AS(stage2_condition_mc(price_only(2), 0.11, 10000, rng), ConfigError);
}

TEST_CASE("Monte Carlo margin agrees with the tail-expectation identity") {
    const EnvParams params = price_only(3);
    Rng rng(17);
    std::vector<double> z(1000000);
    for (double& v : z) v = rng.normal();
    for (double p2 : {0.08, 0.10, 0.1061, 0.12, 0.2}) {
        const double mc = stage2_margin_mc(params, p2, z);
        const double cf = stage2_margin_closed_form(params, p2);
        // 1e6 samples put the Monte Carlo noise well under 0.2 currency units
        CHECK(std::abs(mc - cf) < 0.2);
    }
}

TEST_CASE("stage-2 boundary sits near the published 0.1061") {
    const EnvParams params = price_only(3);
    const double boundary = stage2_boundary_mc(params, 1000000, 9);
    CHECK(std::abs(boundary - 0.1061) < 5e-4);

    // cross-check against the closed-form crossing by bisection
    double lo = 0.08;
    double hi = 0.14;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (stage2_margin_closed_form(params, mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    const double exact = 0.5 * (lo + hi);
    CHECK(std::abs(boundary - exact) < 3e-4);

    // determinism
    CHECK(stage2_boundary_mc(params, 1000000, 9) == boundary);
}

TEST_CASE("lattice rows are stochastic and concentrate as volatility vanishes") {
    const EnvParams params = price_only(3);
    const LatticeSpec lattice = build_lattice(params, 100);
    REQUIRE(lattice.stages() == 3);
    CHECK(lattice.price_count(1) == 1);
    CHECK(lattice.price_count(2) == 100);

    for (const auto& matrix : lattice.price_trans) {
        const std::size_t cols = matrix.size() % 100 == 0 ? 100 : matrix.size();
        const std::size_t rows = matrix.size() / cols;
        for (std::size_t r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                const double m = matrix[r * cols + c];
                CHECK(m >= 0.0);
                sum += m;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }

    // vanishing volatility over a fixed grid: all mass lands on the node
    // nearest the drifted source
    std::vector<double> fixed_nodes;
    for (int j = 0; j < 41; ++j) fixed_nodes.push_back(0.08 * std::pow(1.02, j));
    const double drift = std::log(1.1);  // 0.1 -> 0.11 exactly
    const auto row = lognormal_transition_row(0.1, fixed_nodes, drift, 1e-12);
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[argmax]) argmax = j;
    }
    CHECK(row[argmax] >= 0.9999);
    double best_dist = 1e9;
    std::size_t nearest = 0;
    for (std::size_t j = 0; j < fixed_nodes.size(); ++j) {
        const double d = std::abs(std::log(fixed_nodes[j]) - std::log(0.11));
        if (d < best_dist) {
            best_dist = d;
            nearest = j;
        }
    }
    CHECK(argmax == nearest);
}

TEST_CASE("lattice first moment matches the lognormal mean within 0.1%") {
    const EnvParams params = price_only(2);
    const LatticeSpec lattice = build_lattice(params, 400);
    const auto& row = lattice.price_trans[0];  // single stage-1 node
    const auto& nodes = lattice.price_nodes[1];
    double mean = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) mean += row[j] * nodes[j];
    const double analytic = params.initial_price *
                            std::exp(params.price_drift + 0.5 * params.price_vol * params.price_vol);
    CHECK(std::abs(mean - analytic) / analytic < 0.001);
}

TEST_CASE("T=2 backward induction reproduces the closed-form threshold") {
    const EnvParams params = price_only(2);
    const DPSolution dp = backward_induction(build_lattice(params, 400), params);
    const double th = dp.price_threshold(2, 0);
    const double cell = dp.price_cell_width(2, 0);
    CHECK(std::isfinite(th));
    CHECK(std::abs(th - 320.0 / 2920.0) <= cell);
    CHECK(dp.decision(1, 0, 0, 0) == 0);  // never invest at stage 1
}

TEST_CASE("T=3 backward induction matches the Monte Carlo stage-2 boundary") {
    const EnvParams params = price_only(3);
    const DPSolution dp = backward_induction(build_lattice(params, 400), params);

    const double th2 = dp.price_threshold(2, 0);
    const double cell2 = dp.price_cell_width(2, 0);
    const double mc = stage2_boundary_mc(params, 1000000, 13);
    CHECK(std::abs(th2 - mc) <= cell2);

    const double th3 = dp.price_threshold(3, 0);
    const double cell3 = dp.price_cell_width(3, 0);
    CHECK(std::abs(th3 - 320.0 / 2920.0) <= cell3);

    // waiting is free once the unit is installed: stage 3 with installed=1
    // has no feasible investment left
    CHECK(dp.decision(3, 200, 0, 1) == 0);
}

TEST_CASE("uncapped demand decouples units into the single-unit rule") {
    EnvParams params = price_demand(3, 3);
    params.initial_demand = 1e9;  // demand can never bind over the horizon
    const DPSolution dp = backward_induction(build_lattice(params, 200, 50), params);

    // final stage, empty system: invest everything above the marginal
    // threshold, nothing below it
    const auto& nodes = dp.lattice().price_nodes[2];
    const double k = 320.0 / 2920.0;
    for (std::size_t ip = 0; ip < nodes.size(); ++ip) {
        for (int id = 0; id < dp.lattice().demand_count(3); ++id) {
            const int x = dp.decision(3, static_cast<int>(ip), id, 0);
            if (nodes[ip] > k * 1.01) CHECK(x == 3);
            if (nodes[ip] < k * 0.99) CHECK(x == 0);
        }
    }
}

TEST_CASE("DP value function is monotone in price") {
    for (const EnvParams& params : {price_only(3), price_demand(3, 2)}) {
        const DPSolution dp = backward_induction(build_lattice(params, 120, 40), params);
        for (int t = 1; t <= params.horizon; ++t) {
            const int np = dp.lattice().price_count(t);
            const int nd = dp.lattice().demand_count(t);
            for (int j = 0; j <= params.max_capacity; ++j) {
                for (int id = 0; id < nd; ++id) {
                    for (int ip = 1; ip < np; ++ip) {
                        CHECK(dp.value(t, ip, id, j) >= dp.value(t, ip - 1, id, j) - 1e-9);
                    }
                }
            }
        }
    }
}

TEST_CASE("DP decisions are always feasible") {
    const EnvParams params = price_demand(4, 3);
    const DPSolution dp = backward_induction(build_lattice(params, 60, 30), params);
    for (int t = 1; t <= params.horizon; ++t) {
        const int np = dp.lattice().price_count(t);
        const int nd = dp.lattice().demand_count(t);
        for (int j = 0; j <= params.max_capacity; ++j) {
            for (int ip = 0; ip < np; ++ip) {
                for (int id = 0; id < nd; ++id) {
                    const int x = dp.decision(t, ip, id, j);
                    CHECK(x >= 0);
                    CHECK(j + x <= params.max_capacity);
                }
            }
        }
    }
}

TEST_CASE("lattice refinement converges to the closed form") {
    const EnvParams params = price_only(2);
    const double exact = 320.0 / 2920.0;
    double prev_err = 1e9;
    for (int nodes : {200, 400, 800}) {
        const DPSolution dp = backward_induction(build_lattice(params, nodes), params);
        const double err = std::abs(dp.price_threshold(2, 0) - exact);
        CHECK(err <= prev_err);
        prev_err = err;
    }
    CHECK(prev_err <= 1e-4);
}

TEST_CASE("never-invest evaluates to exactly zero") {
    const EvalReport report =
        evaluate_policy(never_invest_policy(), price_only(3), 5000, 123);
    CHECK(report.mean == 0.0);
    CHECK(report.std_error == 0.0);
    CHECK(report.ci_low == 0.0);
    CHECK(report.ci_high == 0.0);
    CHECK(report.decision_counts[0][0] == 5000);
}

TEST_CASE("simulating the DP policy recovers the DP root value") {
    const EnvParams params = price_only(2, 0.0);
    const DPSolution dp = backward_induction(build_lattice(params, 400), params);
    const EvalReport report = evaluate_policy(dp.policy(), params, 100000, 2027);
    CHECK(std::abs(report.mean - dp.root_value()) < 3.0 * report.std_error);
    CHECK(report.ci_low <= report.mean);
    CHECK(report.mean <= report.ci_high);
}

TEST_CASE("evaluation reports are deterministic and worker-count independent") {
    const EnvParams params = price_demand(3, 2);
    const DPSolution dp = backward_induction(build_lattice(params, 80, 40), params);
    const EvalReport a = evaluate_policy(dp.policy(), params, 4000, 99, nullptr, 1);
    const EvalReport b = evaluate_policy(dp.policy(), params, 4000, 99, nullptr, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.decision_counts == b.decision_counts);

    const EvalReport c = evaluate_policy(dp.policy(), params, 4000, 100);
    CHECK(a.mean != c.mean);

    CHECK(evaluate_policy(dp.policy(), params, 1, 99).std_error == 0.0);
    CHECK_THROWS_AS(evaluate_policy(dp.policy(), params, 0, 99), ConfigError);
}

TEST_CASE("DP policy dominates the reference policies") {
    const EnvParams params = price_demand(3, 2);
    const DPSolution dp = backward_induction(build_lattice(params, 200, 100), params);
    const PolicyFn dp_policy = dp.policy();

    for (const PolicyFn& baseline :
         {never_invest_policy(), invest_all_at_first_stage_policy(params),
          random_feasible_policy(params, 7)}) {
        const PairedEval eval = paired_compare(dp_policy, baseline, params, 20000, 31);
        CHECK(eval.mean_diff >= -3.0 * eval.se_diff);
    }
}

TEST_CASE("policy maps: masked surfaces and the DP step position") {
    const EnvParams params = price_only(2);
    const DPSolution dp = backward_induction(build_lattice(params, 400), params);

    std::vector<double> prices;
    for (int i = 0; i < 500; ++i) prices.push_back(0.06 + 0.0002 * i);

    const PolicyMap map =
        extract_policy_map(dp.policy(), params, 2, prices, {}, 0);
    const double th = threshold_from_scan(map.prices, map.decisions);
    CHECK(std::abs(th - 320.0 / 2920.0) < 0.0005);

    // exhausted budget: the surface is identically zero
    const PolicyMap full = extract_policy_map(dp.policy(), params, 2, prices, {}, 1);
    for (int d : full.decisions) CHECK(d == 0);

    // single point grid -> single row
    const PolicyMap point =
        extract_policy_map(dp.policy(), params, 2, std::vector<double>{0.15}, {}, 0);
    CHECK(point.decisions.size() == 1);
    CHECK(point.decisions[0] == 1);

    CHECK_THROWS_AS(extract_policy_map(dp.policy(), params, 5, prices, {}, 0), ConfigError);
}

TEST_CASE("threshold_from_scan edge cases") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    CHECK(threshold_from_scan(xs, std::vector<int>{0, 0, 1, 1}) == 2.5);
    CHECK(threshold_from_scan(xs, std::vector<int>{1, 1, 1, 1}) == 1.0);
    CHECK(std::isnan(threshold_from_scan(xs, std::vector<int>{0, 0, 0, 0})));
}

TEST_CASE("compare_policy_to_dp distinguishes the DP policy from a bad one") {
    const EnvParams params = price_only(2);
    CompareOptions options;
    options.replications = 20000;

    const DPSolution dp = backward_induction(build_lattice(params, 400), params);
    const CompareReport good = compare_policy_to_dp(dp.policy(), params, options);
    CHECK(good.thresholds_pass);
    CHECK(good.profit_pass);
    CHECK(good.percent_gap < 0.005);
    REQUIRE(good.thresholds.size() == 1);
    CHECK(good.thresholds[0].stage == 2);

    const CompareReport bad = compare_policy_to_dp(never_invest_policy(), params, options);
    CHECK_FALSE(bad.thresholds_pass);  // never invests: no threshold at all
    CHECK_FALSE(bad.profit_pass);
}

TEST_CASE("reports render with digest comments") {
    const EnvParams params = price_only(2);
    const DPSolution dp = backward_induction(build_lattice(params, 50), params);

    std::ostringstream dp_csv;
    dp.export_csv(dp_csv, "aaaa1111bbbb2222");
    CHECK(dp_csv.str().rfind("# config_digest=aaaa1111bbbb2222\n", 0) == 0);
    CHECK(dp_csv.str().find("t,price,demand,installed,decision,value") != std::string::npos);

    const EvalReport report = evaluate_policy(never_invest_policy(), params, 10, 1);
    std::ostringstream eval_csv;
    report.write_csv(eval_csv, "aaaa1111bbbb2222");
    CHECK(eval_csv.str().find("replications,mean,std_error,ci_low,ci_high") != std::string::npos);

    std::ostringstream eval_txt;
    report.print(eval_txt);
    CHECK(eval_txt.str().find("mean profit") != std::string::npos);
}
