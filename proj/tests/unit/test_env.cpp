#include <doctest.h>

#include <cmath>
#include <vector>

#include "capexrl/env.hpp"
#include "capexrl/errors.hpp"

using namespace capexrl;

namespace {

EnvParams price_only_params(int horizon = 2, double interest = 0.05) {
    EnvParams p;
    p.variant = Variant::price_only;
    p.horizon = horizon;
    p.unit_output = 2920;
    p.op_cost = 300;
    p.inv_cost = 20;
    p.interest = interest;
    p.price_drift = 0.05;
    p.price_vol = 0.1;
    p.initial_price = 0.1;
    p.max_capacity = 1;
    return p;
}

EnvParams price_demand_params(int horizon = 3, int max_capacity = 2) {
    EnvParams p = price_only_params(horizon);
    p.variant = Variant::price_demand;
    p.max_capacity = max_capacity;
    p.demand_drift = 0.2;
    p.demand_vol = 0.1;
    p.initial_demand = 1.0;
    p.capacity_per_unit = 1.0;
    return p;
}

}  // namespace

TEST_CASE("reset returns the initial state") {
    CapacityEnv env(price_only_params(), 42);
    const EnvState s = env.reset(42);
    CHECK(s.t == 1);
    CHECK(s.price == 0.1);
    CHECK_FALSE(s.demand.has_value());
    CHECK(s.installed == 0);

    CapacityEnv denv(price_demand_params(), 5);
    const EnvState d = denv.reset();
    CHECK(d.t == 1);
    CHECK(d.price == 0.1);
    CHECK(d.demand == 1.0);
    CHECK(d.installed == 0);
}

TEST_CASE("resetting twice with the same seed replays the trajectory") {
    CapacityEnv env(price_demand_params(), 0);
    const EnvState a = env.reset(42);
    std::vector<double> first;
    EnvState s = a;
    for (int t = 0; t < 2; ++t) {
        const StepOutcome out = env.step(s, Decision{1});
        first.push_back(out.next_state.price);
        first.push_back(out.next_state.demand.value_or(-1));
        s = out.next_state;
    }
    const EnvState b = env.reset(42);
    CHECK(a == b);
    s = b;
    for (int t = 0; t < 2; ++t) {
        const StepOutcome out = env.step(s, Decision{1});
        CHECK(out.next_state.price == first[2 * t]);
        CHECK(out.next_state.demand.value_or(-1) == first[2 * t + 1]);
        s = out.next_state;
    }
}

TEST_CASE("feasible decisions are exactly the residual budget") {
    EnvParams p = price_demand_params(3, 2);
    EnvState s;
    s.t = 1;
    s.price = 0.1;
    s.demand = 1.0;

    s.installed = 0;
    CHECK(CapacityEnv::feasible(s, p) ==
          std::vector<Decision>{Decision{0}, Decision{1}, Decision{2}});
    s.installed = 2;
    CHECK(CapacityEnv::feasible(s, p) == std::vector<Decision>{Decision{0}});

    p.max_capacity = 3;
    s.installed = 1;
    CHECK(CapacityEnv::feasible(s, p) ==
          std::vector<Decision>{Decision{0}, Decision{1}, Decision{2}});
}

TEST_CASE("stage reward matches hand evaluation of the objectives") {
    // price-only, t=2, i=0, p2=0.15, add into empty system:
    // (2920*0.15 - 300)*1 - 20 = 118
    CapacityEnv env(price_only_params(2, 0.0), 1);
    EnvState s;
    s.t = 2;
    s.price = 0.15;
    s.installed = 0;
    const StepOutcome out = env.step(s, Decision{1});
    CHECK(out.reward == doctest::Approx(118.0).epsilon(1e-12));
    CHECK(out.terminal);
    CHECK(out.next_state.installed == 1);

    // no capacity, no decision: zero cashflow at any stage
    EnvState idle;
    idle.t = 1;
    idle.price = 0.42;
    idle.installed = 0;
    CapacityEnv env2(price_only_params(2, 0.05), 1);
    CHECK(env2.step(idle, Decision{0}).reward == 0.0);

    // demand variant, t=1: 2920*0.1*min(1, 1) - 300 - 20 = -28
    CapacityEnv denv(price_demand_params(3, 2), 1);
    const EnvState d0 = denv.reset();
    const StepOutcome dout = denv.step(d0, Decision{1});
    CHECK(dout.reward == doctest::Approx(-28.0).epsilon(1e-12));
    CHECK_FALSE(dout.terminal);
}

TEST_CASE("infeasible decisions throw instead of clipping") {
    CapacityEnv env(price_demand_params(3, 2), 1);
    EnvState s = env.reset();
    s.installed = 2;
    CHECK_THROWS_AS(env.step(s, Decision{1}), FeasibilityError);
    CHECK_THROWS_AS(env.step(env.reset(), Decision{3}), FeasibilityError);
    CHECK_THROWS_AS(env.step(env.reset(), Decision{-1}), FeasibilityError);
}

TEST_CASE("installed capacity is non-decreasing and never exceeds K") {
    CapacityEnv env(price_demand_params(5, 3), 11);
    Rng rng(3);
    for (int episode = 0; episode < 200; ++episode) {
        EnvState s = env.reset();
        int last_installed = 0;
        bool terminal = false;
        while (!terminal) {
            const auto feas = env.feasible(s);
            const Decision d = feas[rng.uniform_index(feas.size())];
            const StepOutcome out = env.step(s, d);
            CHECK(out.next_state.installed >= last_installed);
            CHECK(out.next_state.installed <= 3);
            last_installed = out.next_state.installed;
            terminal = out.terminal;
            s = out.next_state;
        }
        CHECK(s.t == 6);
    }
}

TEST_CASE("log price ratios pass a 3-sigma moment check") {
    CapacityEnv env(price_only_params(2), 123);
    env.reset(123);
    const int n = 100000;
    std::vector<double> ratios;
    ratios.reserve(n);
    EnvState s = env.reset();
    while (static_cast<int>(ratios.size()) < n) {
        const StepOutcome out = env.step(s, Decision{0});
        if (!out.terminal) {
            ratios.push_back(std::log(out.next_state.price / s.price));
            s = out.next_state;
        } else {
            s = env.reset();
        }
    }
    double sum = 0.0;
    for (double r : ratios) sum += r;
    const double mean = sum / n;
    double ss = 0.0;
    for (double r : ratios) ss += (r - mean) * (r - mean);
    const double var = ss / (n - 1);

    const double mean_tol = 3.0 * 0.1 / std::sqrt(static_cast<double>(n));
    const double var_tol = 3.0 * 0.01 * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(mean - 0.05) < mean_tol);
    CHECK(std::abs(var - 0.01) < var_tol);
}

TEST_CASE("financial discounting factorizes out of the reward") {
    const EnvParams p0 = price_only_params(4, 0.0);
    const EnvParams pi = price_only_params(4, 0.07);
    EnvState s;
    s.price = 0.13;
    for (int t = 1; t <= 4; ++t) {
        s.t = t;
        s.installed = 0;
        const double r0 = CapacityEnv::stage_reward(s, Decision{1}, p0);
        const double ri = CapacityEnv::stage_reward(s, Decision{1}, pi);
        CHECK(r0 == doctest::Approx(ri * std::pow(1.07, t - 1)).epsilon(1e-12));
    }
}

TEST_CASE("price-only reward equals the demand variant when revenue is uncapped") {
    const EnvParams po = price_only_params(3, 0.05);
    EnvParams pd = price_demand_params(3, 1);
    EnvState s;
    s.t = 2;
    s.price = 0.14;
    s.installed = 0;

    EnvState sd = s;
    sd.demand = 5.0;  // d >= c_p * installed_after, cap inactive
    CHECK(CapacityEnv::stage_reward(s, Decision{1}, po) ==
          CapacityEnv::stage_reward(sd, Decision{1}, pd));

    sd.demand = 0.4;  // binding cap diverges from the price-only value
    CHECK(CapacityEnv::stage_reward(s, Decision{1}, po) !=
          CapacityEnv::stage_reward(sd, Decision{1}, pd));
}

TEST_CASE("fixed-pool mode is reproducible and draws only pooled values") {
    EnvParams p = price_only_params(3);
    p.sample_pool = 16;
    CapacityEnv a(p, 9);
    CapacityEnv b(p, 9);
    a.reset(9);
    b.reset(9);
    for (int episode = 0; episode < 20; ++episode) {
        EnvState sa = a.reset();
        EnvState sb = b.reset();
        bool terminal = false;
        while (!terminal) {
            const StepOutcome oa = a.step(sa, Decision{0});
            const StepOutcome ob = b.step(sb, Decision{0});
            CHECK(oa.next_state.price == ob.next_state.price);
            terminal = oa.terminal;
            sa = oa.next_state;
            sb = ob.next_state;
        }
    }

    // with a pool of one, every stage-t ratio is the same pooled draw
    EnvParams single = price_only_params(3);
    single.sample_pool = 1;
    CapacityEnv c(single, 4);
    c.reset(4);
    std::vector<double> stage1_ratios;
    for (int episode = 0; episode < 5; ++episode) {
        EnvState s = c.reset();
        const StepOutcome out = c.step(s, Decision{0});
        stage1_ratios.push_back(out.next_state.price / s.price);
    }
    for (double r : stage1_ratios) CHECK(r == stage1_ratios.front());
}
