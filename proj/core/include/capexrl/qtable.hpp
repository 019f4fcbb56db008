#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <unordered_map>
#include <vector>

#include "capexrl/config.hpp"
#include "capexrl/discretize.hpp"
#include "capexrl/env.hpp"
#include "capexrl/policy.hpp"

namespace capexrl {

/// (state, decision) key of one table cell.
struct TableKey {
    StateKey state;
    int decision = 0;

    bool operator==(const TableKey&) const = default;
};

struct TableKeyHash {
    std::size_t operator()(const TableKey& k) const noexcept {
        std::size_t h = StateKeyHash{}(k.state);
        h ^= static_cast<std::size_t>(static_cast<unsigned>(k.decision)) + 0x9e3779b9ull +
             (h << 6) + (h >> 2);
        return h;
    }
};

/// Sparse Q-table. Unvisited pairs read as 0.
class QTable {
public:
    double q(const StateKey& s, int decision) const;
    long long visits(const StateKey& s, int decision) const;

    void set(const StateKey& s, int decision, double value);
    void add_visit(const StateKey& s, int decision);

    /// max over the given decisions of Q(s, .); 0 if `decisions` is empty.
    double max_q(const StateKey& s, std::span<const int> decisions) const;

    std::size_t entry_count() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    const std::unordered_map<TableKey, double, TableKeyHash>& values() const { return values_; }

    /// CSV: t, price_bin_low, demand_bin_low, installed, decision, q_value, visits.
    void export_csv(std::ostream& out, const Discretizer& disc) const;

private:
    std::unordered_map<TableKey, double, TableKeyHash> values_;
    std::unordered_map<TableKey, long long, TableKeyHash> visits_;
};

/// One Q-learning backup:
///   Q(s,x) += alpha * (g + gamma * max_{x' in feasible_next} Q(s',x') - Q(s,x))
/// An empty `feasible_next` marks a terminal transition (bootstrap value 0);
/// real states always allow decision 0.
void q_update(QTable& table, const StateKey& s, int decision, double reward,
              const StateKey& s_next, std::span<const int> feasible_next, double alpha,
              double gamma);

/// Greedy extraction: argmax over feasible decisions, smallest decision on
/// ties, so policy maps are reproducible.
int greedy_policy(const QTable& table, const StateKey& s, std::span<const int> feasible);

/// Episodic problem surface the tabular trainer drives. Implementations keep
/// the underlying (possibly continuous) state internal and expose only the
/// discretized key.
class TabularProblem {
public:
    virtual ~TabularProblem() = default;

    struct Step {
        double reward = 0.0;
        StateKey next_key{};
        bool terminal = false;
    };

    virtual StateKey reset() = 0;
    virtual std::vector<int> feasible() const = 0;  // at the current state
    virtual Step step(int decision) = 0;
};

/// Capacity-expansion environment adapted to the tabular interface through a
/// discretizer.
class TabularCapacityProblem final : public TabularProblem {
public:
    TabularCapacityProblem(EnvParams params, Discretizer disc, std::uint64_t seed);

    StateKey reset() override;
    std::vector<int> feasible() const override;
    Step step(int decision) override;

private:
    CapacityEnv env_;
    Discretizer disc_;
    EnvState current_;
};

struct TabularTrainResult {
    QTable table;
    std::vector<double> episode_returns;
};

/// Algorithm-1 training loop: reset / epsilon-greedy act / step / backup,
/// for config.episodes episodes.
TabularTrainResult train_tabular(TabularProblem& problem, const TrainingConfig& config);

}  // namespace capexrl
