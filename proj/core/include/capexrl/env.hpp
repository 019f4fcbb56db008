#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "capexrl/config.hpp"
#include "capexrl/rng.hpp"

namespace capexrl {

enum class Variant { price_only, price_demand };

/// Parameters of the finite-horizon capacity-expansion environment.
struct EnvParams {
    Variant variant = Variant::price_only;
    int horizon = 2;             // T, number of decision stages
    double unit_output = 2920;   // u, production units per capacity per period
    double op_cost = 300;        // c_om, per installed unit per period
    double inv_cost = 20;        // c_inv, per added unit
    double interest = 0.05;      // i, per-period financial discount rate
    double price_drift = 0.05;   // mu1 of the log price ratio
    double price_vol = 0.1;      // sigma1 of the log price ratio
    double initial_price = 0.1;  // p1
    int max_capacity = 1;        // K, lifetime capacity budget

    // price_demand variant only
    double demand_drift = 0.0;      // mu2
    double demand_vol = 0.0;        // sigma2
    double initial_demand = 1.0;    // d1
    double capacity_per_unit = 1.0; // c_p, demand servable per installed unit

    // 0 = draw uncertainty on the fly; >0 = pre-draw a fixed per-stage pool
    // of this size and resample from it (finite scenario set).
    int sample_pool = 0;

    bool demand_enabled() const { return variant == Variant::price_demand; }

    void validate() const;  // throws ConfigError naming the bad field

    static EnvParams from_config(const ConfigFile& cfg);
};

/// Full Markov state: stage index, revealed uncertainty, installed capacity.
/// `demand` is empty for the price-only variant (no demand cap).
struct EnvState {
    int t = 1;
    double price = 0.0;
    std::optional<double> demand;
    int installed = 0;

    bool operator==(const EnvState&) const = default;
};

/// Capacity units to add now.
struct Decision {
    int add = 0;

    bool operator==(const Decision&) const = default;
};

struct StepOutcome {
    double reward = 0.0;  // g_t, already discounted by (1+i)^-(t-1)
    EnvState next_state;  // t advanced; one-past-horizon when terminal
    bool terminal = false;
};

/// Per-transition record used by replay and the trainers.
struct Experience {
    EnvState state;
    Decision decision;
    double reward = 0.0;
    EnvState next_state;
    bool terminal = false;
};

/// One draw of a log ratio ln(x_{t+1}/x_t) ~ Normal(drift, vol).
inline double sample_log_ratio(double drift, double vol, Rng& rng) {
    return rng.normal(drift, vol);
}

/// The stochastic environment. Single-threaded state machine; run several
/// instances with independent seeds for parallel rollouts.
class CapacityEnv {
public:
    CapacityEnv(EnvParams params, std::uint64_t seed);

    const EnvParams& params() const { return params_; }

    /// Starts a new episode without disturbing the random stream.
    EnvState reset();

    /// Reseeds the stream deterministically, then starts a new episode.
    EnvState reset(std::uint64_t seed);

    std::vector<Decision> feasible(const EnvState& state) const;
    static std::vector<Decision> feasible(const EnvState& state, const EnvParams& params);

    /// Applies a feasible decision, accrues the discounted stage reward and
    /// samples next-period uncertainty. Throws FeasibilityError otherwise.
    StepOutcome step(const EnvState& state, Decision decision);

    /// Undiscounted-then-discounted stage reward; pure function of its inputs.
    static double stage_reward(const EnvState& state, Decision decision, const EnvParams& params);

private:
    void fill_pools();
    double draw_price_ratio(int stage);
    double draw_demand_ratio(int stage);

    EnvParams params_;
    Rng rng_;
    // pool[t-1] holds the fixed scenario draws for the t -> t+1 transition
    std::vector<std::vector<double>> price_pool_;
    std::vector<std::vector<double>> demand_pool_;
};

}  // namespace capexrl
