#include "capexrl/env.hpp"

#include <cmath>
#include <string>

#include "capexrl/errors.hpp"

namespace capexrl {

void EnvParams::validate() const {
    if (horizon < 2) throw ConfigError("T", "horizon T must be >= 2");
    if (!(unit_output >= 0.0)) throw ConfigError("u", "unit output u must be >= 0");
    if (!(op_cost >= 0.0)) throw ConfigError("c_om", "operating cost c_om must be >= 0");
    if (!(inv_cost >= 0.0)) throw ConfigError("c_inv", "investment cost c_inv must be >= 0");
    if (!(interest >= 0.0)) throw ConfigError("i", "interest rate i must be >= 0");
    if (!(price_vol > 0.0)) throw ConfigError("sigma1", "price volatility sigma1 must be > 0");
    if (!(initial_price > 0.0)) throw ConfigError("p1", "initial price p1 must be > 0");
    if (max_capacity < 1) throw ConfigError("K", "capacity budget K must be >= 1");
    if (sample_pool < 0) throw ConfigError("sample_pool", "sample_pool must be >= 0");
    if (variant == Variant::price_only) {
        if (max_capacity != 1) {
            throw ConfigError("K", "the price-only problem has a single capacity unit (K = 1)");
        }
    } else {
        if (!(demand_vol > 0.0)) {
            throw ConfigError("sigma2", "demand volatility sigma2 must be > 0");
        }
        if (!(initial_demand > 0.0)) throw ConfigError("d1", "initial demand d1 must be > 0");
        if (!(capacity_per_unit > 0.0)) {
            throw ConfigError("c_p", "capacity per unit c_p must be > 0");
        }
    }
}

EnvParams EnvParams::from_config(const ConfigFile& cfg) {
    EnvParams p;
    const std::string variant = cfg.get_string("env", "variant", "price_only");
    if (variant == "price_only") {
        p.variant = Variant::price_only;
    } else if (variant == "price_demand") {
        p.variant = Variant::price_demand;
    } else {
        throw ConfigError("variant", "unknown variant '" + variant +
                                         "' (expected price_only or price_demand)");
    }
    p.horizon = static_cast<int>(cfg.get_int("env", "T"));
    p.unit_output = cfg.get_real("env", "u");
    p.op_cost = cfg.get_real("env", "c_om");
    p.inv_cost = cfg.get_real("env", "c_inv");
    p.interest = cfg.get_real("env", "i", p.interest);
    p.price_drift = cfg.get_real("env", "mu1");
    p.price_vol = cfg.get_real("env", "sigma1");
    p.initial_price = cfg.get_real("env", "p1");
    p.max_capacity = static_cast<int>(cfg.get_int("env", "K", 1));
    p.sample_pool = static_cast<int>(cfg.get_int("env", "sample_pool", 0));
    if (p.variant == Variant::price_demand) {
        p.demand_drift = cfg.get_real("env", "mu2");
        p.demand_vol = cfg.get_real("env", "sigma2");
        p.initial_demand = cfg.get_real("env", "d1");
        p.capacity_per_unit = cfg.get_real("env", "c_p", 1.0);
    }
    p.validate();
    return p;
}

CapacityEnv::CapacityEnv(EnvParams params, std::uint64_t seed)
    : params_(std::move(params)), rng_(seed) {
    params_.validate();
    fill_pools();
}

void CapacityEnv::fill_pools() {
    price_pool_.clear();
    demand_pool_.clear();
    if (params_.sample_pool <= 0) return;
    const int transitions = params_.horizon - 1;
    price_pool_.resize(static_cast<std::size_t>(transitions));
    for (auto& pool : price_pool_) {
        pool.resize(static_cast<std::size_t>(params_.sample_pool));
        for (double& v : pool) v = rng_.normal(params_.price_drift, params_.price_vol);
    }
    if (params_.demand_enabled()) {
        demand_pool_.resize(static_cast<std::size_t>(transitions));
        for (auto& pool : demand_pool_) {
            pool.resize(static_cast<std::size_t>(params_.sample_pool));
            for (double& v : pool) v = rng_.normal(params_.demand_drift, params_.demand_vol);
        }
    }
}

EnvState CapacityEnv::reset() {
    EnvState s;
    s.t = 1;
    s.price = params_.initial_price;
    if (params_.demand_enabled()) s.demand = params_.initial_demand;
    s.installed = 0;
    return s;
}

EnvState CapacityEnv::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    fill_pools();
    return reset();
}

std::vector<Decision> CapacityEnv::feasible(const EnvState& state) const {
    return feasible(state, params_);
}

std::vector<Decision> CapacityEnv::feasible(const EnvState& state, const EnvParams& params) {
    const int residual = params.max_capacity - state.installed;
    std::vector<Decision> out;
    out.reserve(static_cast<std::size_t>(residual) + 1);
    for (int add = 0; add <= residual; ++add) out.push_back(Decision{add});
    return out;
}

double CapacityEnv::stage_reward(const EnvState& state, Decision decision,
                                 const EnvParams& params) {
    const int after = state.installed + decision.add;
    const double cap = params.capacity_per_unit * after;
    const double sold = state.demand ? std::min(*state.demand, cap) : cap;
    const double cash = params.unit_output * state.price * sold - params.op_cost * after -
                        params.inv_cost * decision.add;
    return cash / std::pow(1.0 + params.interest, state.t - 1);
}

double CapacityEnv::draw_price_ratio(int stage) {
    if (params_.sample_pool > 0) {
        const auto& pool = price_pool_[static_cast<std::size_t>(stage - 1)];
        return pool[rng_.uniform_index(pool.size())];
    }
    return sample_log_ratio(params_.price_drift, params_.price_vol, rng_);
}

double CapacityEnv::draw_demand_ratio(int stage) {
    if (params_.sample_pool > 0) {
        const auto& pool = demand_pool_[static_cast<std::size_t>(stage - 1)];
        return pool[rng_.uniform_index(pool.size())];
    }
    return sample_log_ratio(params_.demand_drift, params_.demand_vol, rng_);
}

StepOutcome CapacityEnv::step(const EnvState& state, Decision decision) {
    if (state.t < 1 || state.t > params_.horizon) {
        throw FeasibilityError("step: stage " + std::to_string(state.t) + " outside 1.." +
                               std::to_string(params_.horizon));
    }
    if (decision.add < 0 || decision.add > params_.max_capacity - state.installed) {
        throw FeasibilityError("step: decision " + std::to_string(decision.add) +
                               " infeasible with installed " + std::to_string(state.installed) +
                               " of " + std::to_string(params_.max_capacity));
    }

    StepOutcome out;
    out.reward = stage_reward(state, decision, params_);
    out.terminal = state.t == params_.horizon;

    out.next_state = state;
    out.next_state.t = state.t + 1;
    out.next_state.installed = state.installed + decision.add;
    if (!out.terminal) {
        out.next_state.price = state.price * std::exp(draw_price_ratio(state.t));
        if (state.demand) {
            out.next_state.demand = *state.demand * std::exp(draw_demand_ratio(state.t));
        }
    }
    return out;
}

}  // namespace capexrl
