#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "capexrl/errors.hpp"
#include "capexrl/rng.hpp"

namespace capexrl {

/// eps_e = max(eps_end, eps_start * eps_decay^(episode-1)), episode >= 1.
inline double epsilon_schedule(long long episode, double eps_start, double eps_end,
                               double eps_decay) {
    const double decayed = eps_start * std::pow(eps_decay, static_cast<double>(episode - 1));
    return std::max(eps_end, decayed);
}

/// Deterministic greedy pick: argmax over the feasible indices, smallest
/// index on ties. `feasible` holds indices into `values`.
inline std::size_t greedy_index(std::span<const double> values,
                                std::span<const std::size_t> feasible) {
    if (feasible.empty()) throw FeasibilityError("greedy_index: empty feasible set");
    std::size_t best = feasible[0];
    for (std::size_t idx : feasible) {
        if (values[idx] > values[best]) best = idx;
    }
    return best;
}

/// Exploring pick: with probability 1-eps the argmax (ties broken uniformly),
/// with probability eps a uniform draw over the whole feasible set.
inline std::size_t epsilon_greedy(std::span<const double> values,
                                  std::span<const std::size_t> feasible, double epsilon,
                                  Rng& rng) {
    if (feasible.empty()) throw FeasibilityError("epsilon_greedy: empty feasible set");
    if (rng.uniform01() < epsilon) {
        return feasible[rng.uniform_index(feasible.size())];
    }
    double best = values[feasible[0]];
    for (std::size_t idx : feasible) best = std::max(best, values[idx]);
    std::vector<std::size_t> ties;
    for (std::size_t idx : feasible) {
        if (values[idx] == best) ties.push_back(idx);
    }
    if (ties.size() == 1) return ties[0];
    return ties[rng.uniform_index(ties.size())];
}

}  // namespace capexrl
