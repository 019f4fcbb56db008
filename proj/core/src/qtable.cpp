#include "capexrl/qtable.hpp"

#include <algorithm>
#include <ostream>

#include "capexrl/errors.hpp"

namespace capexrl {

double QTable::q(const StateKey& s, int decision) const {
    const auto it = values_.find(TableKey{s, decision});
    return it == values_.end() ? 0.0 : it->second;
}

long long QTable::visits(const StateKey& s, int decision) const {
    const auto it = visits_.find(TableKey{s, decision});
    return it == visits_.end() ? 0 : it->second;
}

void QTable::set(const StateKey& s, int decision, double value) {
    values_[TableKey{s, decision}] = value;
}

void QTable::add_visit(const StateKey& s, int decision) { ++visits_[TableKey{s, decision}]; }

double QTable::max_q(const StateKey& s, std::span<const int> decisions) const {
    double best = 0.0;
    bool first = true;
    for (int d : decisions) {
        const double v = q(s, d);
        if (first || v > best) {
            best = v;
            first = false;
        }
    }
    return first ? 0.0 : best;
}

void QTable::export_csv(std::ostream& out, const Discretizer& disc) const {
    out << "t,price_bin_low,demand_bin_low,installed,decision,q_value,visits\n";
    // deterministic row order: sort keys
    std::vector<TableKey> keys;
    keys.reserve(values_.size());
    for (const auto& [key, _] : values_) keys.push_back(key);
    std::sort(keys.begin(), keys.end(), [](const TableKey& a, const TableKey& b) {
        if (a.state != b.state) return a.state < b.state;
        return a.decision < b.decision;
    });
    const auto prev = out.precision(17);
    for (const auto& key : keys) {
        const auto& s = key.state;
        out << s[0] << ',' << disc.price_bin_low(s[1]) << ','
            << (disc.demand_bin_count() > 0 ? disc.demand_bin_low(s[2]) : 0.0) << ',' << s[3]
            << ',' << key.decision << ',' << values_.at(key) << ','
            << (visits_.count(key) ? visits_.at(key) : 0) << '\n';
    }
    out.precision(prev);
}

void q_update(QTable& table, const StateKey& s, int decision, double reward,
              const StateKey& s_next, std::span<const int> feasible_next, double alpha,
              double gamma) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "alpha must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "gamma must be in [0, 1]");
    const double bootstrap = feasible_next.empty() ? 0.0 : table.max_q(s_next, feasible_next);
    const double old_q = table.q(s, decision);
    table.set(s, decision, old_q + alpha * (reward + gamma * bootstrap - old_q));
    table.add_visit(s, decision);
}

int greedy_policy(const QTable& table, const StateKey& s, std::span<const int> feasible) {
    if (feasible.empty()) throw FeasibilityError("greedy_policy: empty feasible set");
    int best = feasible[0];
    double best_q = table.q(s, best);
    for (int d : feasible) {
        const double v = table.q(s, d);
        if (v > best_q || (v == best_q && d < best)) {
            best = d;
            best_q = v;
        }
    }
    return best;
}

TabularCapacityProblem::TabularCapacityProblem(EnvParams params, Discretizer disc,
                                               std::uint64_t seed)
    : env_(std::move(params), seed), disc_(std::move(disc)) {
    current_ = env_.reset();
}

StateKey TabularCapacityProblem::reset() {
    current_ = env_.reset();
    return disc_.key(current_);
}

std::vector<int> TabularCapacityProblem::feasible() const {
    std::vector<int> out;
    for (const Decision& d : env_.feasible(current_)) out.push_back(d.add);
    return out;
}

TabularProblem::Step TabularCapacityProblem::step(int decision) {
    const StepOutcome outcome = env_.step(current_, Decision{decision});
    current_ = outcome.next_state;
    return Step{outcome.reward, disc_.key(current_), outcome.terminal};
}

TabularTrainResult train_tabular(TabularProblem& problem, const TrainingConfig& config) {
    config.validate();
    TabularTrainResult result;
    result.episode_returns.reserve(static_cast<std::size_t>(config.episodes));

    Rng explore(derive_stream(config.seed, "tabular-explore"));
    std::vector<double> qvals;
    std::vector<std::size_t> feasible_idx;

    for (long long episode = 1; episode <= config.episodes; ++episode) {
        const double eps =
            epsilon_schedule(episode, config.eps_start, config.eps_end, config.eps_decay);
        StateKey key = problem.reset();
        double episode_return = 0.0;
        bool terminal = false;
        while (!terminal) {
            const std::vector<int> feasible = problem.feasible();
            qvals.resize(feasible.size());
            feasible_idx.resize(feasible.size());
            for (std::size_t k = 0; k < feasible.size(); ++k) {
                qvals[k] = result.table.q(key, feasible[k]);
                feasible_idx[k] = k;
            }
            const std::size_t pick = epsilon_greedy(qvals, feasible_idx, eps, explore);
            const int decision = feasible[pick];

            const auto step = problem.step(decision);
            episode_return += step.reward;

            const std::vector<int> feasible_next = step.terminal ? std::vector<int>{}
                                                                 : problem.feasible();
            q_update(result.table, key, decision, step.reward, step.next_key, feasible_next,
                     config.learning_rate, config.gamma);
            key = step.next_key;
            terminal = step.terminal;
        }
        result.episode_returns.push_back(episode_return);
    }
    return result;
}

}  // namespace capexrl
