#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "capexrl/errors.hpp"
#include "capexrl/env.hpp"
#include "capexrl/rng.hpp"

namespace capexrl {

/// Any stage-decision rule queried on raw environment states.
using PolicyFn = std::function<Decision(const EnvState&)>;

/// Standard normal CDF.
double normal_cdf(double z);

/// E[X * 1{X > k}] for X = scale * exp(N(mu, sigma^2)).
double lognormal_partial_expectation(double scale, double mu, double sigma, double k);

/// Marginal investment threshold for the final stage of the price-only
/// problem: invest iff u*p - c_om - c_inv > 0, i.e. p > (c_om + c_inv) / u.
/// Also the exact stage-2 rule of the two-stage problem.
double two_stage_threshold(double op_cost, double inv_cost, double unit_output);
double two_stage_threshold(const EnvParams& params);  // requires price-only, T = 2

/// LHS - RHS of the stage-2 invest-now-vs-wait inequality for the three-stage
/// price-only problem, estimated from the given standard-normal draws
/// (shared draws make threshold scans smooth). Positive margin = invest.
double stage2_margin_mc(const EnvParams& params, double p2, std::span<const double> z);

/// Same margin through the lognormal tail-expectation identity; the internal
/// cross-check for the Monte Carlo route.
double stage2_margin_closed_form(const EnvParams& params, double p2);

/// Whether investing at stage 2 dominates waiting, by n-sample Monte Carlo.
/// Rejects n < 1000 as too noisy to be meaningful.
bool stage2_condition_mc(const EnvParams& params, double p2, long long n, Rng& rng);

/// Price where the stage-2 margin crosses zero, located by bisection over a
/// fixed n-sample draw set.
double stage2_boundary_mc(const EnvParams& params, long long n, std::uint64_t seed);

/// Per-stage geometric price/demand grids with lognormal transition kernels.
/// Stage 1 is the single known initial point; later stages cover four
/// standard deviations of the accumulated log process.
struct LatticeSpec {
    std::vector<std::vector<double>> price_nodes;   // [stage-1][node]
    std::vector<std::vector<double>> demand_nodes;  // empty for price-only
    // Row-major transition matrices for stage t -> t+1, rows = nodes at t.
    std::vector<std::vector<double>> price_trans;
    std::vector<std::vector<double>> demand_trans;

    int stages() const { return static_cast<int>(price_nodes.size()); }
    bool has_demand() const { return !demand_nodes.empty(); }
    int price_count(int stage) const {
        return static_cast<int>(price_nodes[static_cast<std::size_t>(stage - 1)].size());
    }
    int demand_count(int stage) const {
        return has_demand()
                   ? static_cast<int>(demand_nodes[static_cast<std::size_t>(stage - 1)].size())
                   : 1;
    }
};

/// One row of the lognormal transition kernel: the probability mass moving
/// from `from` into each destination node's log-space Voronoi cell, tails
/// absorbed at the outermost nodes. Sums to 1 within 1e-12.
std::vector<double> lognormal_transition_row(double from, std::span<const double> to_nodes,
                                             double drift, double vol);

LatticeSpec build_lattice(const EnvParams& params, int price_nodes_per_stage = 400,
                          int demand_nodes_per_stage = 200);

/// Exact finite-horizon dynamic program on a lattice: value function and
/// optimal decision for every (stage, price node, demand node, installed).
class DPSolution {
public:
    double value(int t, int ip, int id, int installed) const;
    int decision(int t, int ip, int id, int installed) const;

    /// Expected total discounted profit of the optimal policy, V(1).
    double root_value() const { return value(1, 0, 0, 0); }

    /// Price-only stage threshold at the given installed level: midpoint of
    /// the grid bracket where the decision first turns positive (lower price
    /// on ties). NaN when the stage never invests; the low grid edge when it
    /// always does.
    double price_threshold(int stage, int installed) const;

    /// Grid spacing at that flip, i.e. the threshold's resolution.
    double price_cell_width(int stage, int installed) const;

    /// Decision at an arbitrary state by nearest-node (log-space) lookup.
    Decision policy_decision(const EnvState& state) const;
    PolicyFn policy() const;

    const LatticeSpec& lattice() const { return lattice_; }
    const EnvParams& params() const { return params_; }

    /// CSV: t, price, demand, installed, decision, value.
    void export_csv(std::ostream& out, const std::string& config_digest) const;

private:
    friend DPSolution backward_induction(const LatticeSpec&, const EnvParams&);

    std::size_t index(int t, int ip, int id, int installed) const;
    int nearest_price_node(int t, double price) const;
    int nearest_demand_node(int t, double demand) const;

    LatticeSpec lattice_;
    EnvParams params_;
    // per stage: [installed][ip][id] flattened
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<int>> decisions_;
};

DPSolution backward_induction(const LatticeSpec& lattice, const EnvParams& params);

/// Monte Carlo estimate of a policy's expected total discounted profit.
struct EvalReport {
    long long replications = 0;
    double mean = 0.0;
    double std_error = 0.0;  // 0 by convention when replications == 1
    double ci_low = 0.0;     // 95% normal interval
    double ci_high = 0.0;
    std::vector<std::vector<long long>> decision_counts;  // [stage-1][add]

    void print(std::ostream& out) const;
    void write_csv(std::ostream& out, const std::string& config_digest) const;
};

/// Runs M independent seeded rollouts. Rollouts are distributed over worker
/// threads (workers = 0 picks the hardware count) but every replication owns
/// a seed derived from its index, and the reduction is by replication index,
/// so the report is independent of the worker count.
EvalReport evaluate_policy(const PolicyFn& policy, const EnvParams& params, long long replications,
                           std::uint64_t seed, std::vector<double>* per_replication = nullptr,
                           int workers = 0);

/// Greedy-decision surface over a (price, demand) grid at a fixed stage and
/// installed capacity; the machine-readable form of a decision-surface plot.
struct PolicyMap {
    int stage = 1;
    int installed = 0;
    std::vector<double> prices;
    std::vector<double> demands;     // empty for price-only
    std::vector<int> decisions;      // [ip * max(1,#demands) + id]

    int decision_at(int ip, int id) const {
        return decisions[static_cast<std::size_t>(ip) *
                             std::max<std::size_t>(1, demands.size()) +
                         static_cast<std::size_t>(id)];
    }

    /// CSV: price, demand, decision (demand column empty when unbounded).
    void write_csv(std::ostream& out, const std::string& config_digest) const;
};

PolicyMap extract_policy_map(const PolicyFn& policy, const EnvParams& params, int stage,
                             std::span<const double> prices, std::span<const double> demands,
                             int installed);

/// Midpoint of the first 0 -> positive flip in a scan along increasing xs;
/// xs.front() when the scan starts positive, NaN when it never turns.
double threshold_from_scan(std::span<const double> xs, std::span<const int> decisions);

// Reference policies for dominance checks.
PolicyFn never_invest_policy();
PolicyFn invest_all_at_first_stage_policy(const EnvParams& params);
PolicyFn random_feasible_policy(const EnvParams& params, std::uint64_t seed);

/// Common-random-number comparison of two policies: both evaluated on the
/// same scenario streams, difference summarized per replication.
struct PairedEval {
    long long replications = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double mean_diff = 0.0;  // a - b
    double se_diff = 0.0;
};

PairedEval paired_compare(const PolicyFn& a, const PolicyFn& b, const EnvParams& params,
                          long long replications, std::uint64_t seed);

/// DQN-vs-DP comparison report: per-stage threshold deltas (price-only) and
/// the common-random-number profit gap against the DP policy.
struct ThresholdComparison {
    int stage = 0;
    double dp_threshold = 0.0;
    double policy_threshold = 0.0;
    double delta = 0.0;
};

struct CompareReport {
    std::vector<ThresholdComparison> thresholds;  // installed = 0, stages 2..T
    double dp_profit = 0.0;
    double policy_profit = 0.0;
    double profit_gap = 0.0;
    double percent_gap = 0.0;
    bool thresholds_pass = false;  // every |delta| <= threshold_tol
    bool profit_pass = false;      // percent_gap <= profit_tol

    void print(std::ostream& out) const;
    void write_csv(std::ostream& out, const std::string& config_digest) const;
};

struct CompareOptions {
    int price_nodes = 400;
    int demand_nodes = 200;
    long long replications = 100000;
    std::uint64_t seed = 20240;
    double threshold_tol = 0.005;
    double profit_tol = 0.02;
};

CompareReport compare_policy_to_dp(const PolicyFn& policy, const EnvParams& params,
                                   const CompareOptions& options = {});

}  // namespace capexrl
