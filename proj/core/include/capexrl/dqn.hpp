#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "capexrl/config.hpp"
#include "capexrl/env.hpp"
#include "capexrl/errors.hpp"
#include "capexrl/net.hpp"
#include "capexrl/replay.hpp"

namespace capexrl {

/// Trained policy: a Q-network plus everything needed to query it against
/// raw environment states. Checkpoints round-trip to an artifact producing
/// identical greedy decisions.
class PolicyArtifact {
public:
    PolicyArtifact() = default;
    explicit PolicyArtifact(Checkpoint ckpt) : ckpt_(std::move(ckpt)) {}

    const Checkpoint& checkpoint() const { return ckpt_; }
    const EnvParams& env_params() const { return ckpt_.env; }

    /// Q-values for every decision head at this state (no masking).
    std::vector<double> q_values(const EnvState& state) const;

    /// argmax over feasible heads, smallest decision on ties. A pure function
    /// of the state, so decisions are non-anticipative by construction.
    Decision greedy_decision(const EnvState& state) const;

    void save_file(const std::string& path) const { ckpt_.save_file(path); }
    static PolicyArtifact load_file(const std::string& path) {
        return PolicyArtifact(Checkpoint::load_file(path));
    }

private:
    Checkpoint ckpt_;
};

/// Bootstrap target for one stored transition:
///   terminal:  y = g
///   otherwise: y = g + gamma * max over feasible next decisions of next_q
/// Heads outside `feasible_next` are masked out of the max.
double td_target(const Experience& exp, std::span<const double> next_q, double gamma,
                 std::span<const Decision> feasible_next);

/// Overload that evaluates the target network itself.
double td_target(const Experience& exp, const TargetNetwork& target, const Normalization& norm,
                 double gamma, const EnvParams& params);

struct TrainingLogRow {
    long long episode = 0;
    double epsilon = 0.0;
    double episode_return = 0.0;
    double moving_avg_100 = 0.0;
    double loss_mean = 0.0;
    double wall_ms = 0.0;
};

struct TrainingLog {
    std::vector<TrainingLogRow> rows;

    /// CSV with a header row and a leading config-digest comment line.
    /// wall_ms is timing telemetry and is excluded from reproducibility
    /// comparisons.
    void write_csv(std::ostream& out, const std::string& config_digest) const;
};

struct TrainResult {
    PolicyArtifact artifact;
    TrainingLog log;
};

/// Thrown when the loss goes non-finite or explodes; carries the last usable
/// parameter snapshot for post-mortem.
class TrainingDivergence : public NumericError {
public:
    TrainingDivergence(const std::string& message, Checkpoint snapshot)
        : NumericError(message), snapshot_(std::move(snapshot)) {}

    const Checkpoint& snapshot() const { return snapshot_; }

private:
    Checkpoint snapshot_;
};

/// Algorithm-2 trainer: per episode reset the environment and decay epsilon;
/// per stage pick a masked epsilon-greedy decision from the online network,
/// step, store the transition, then (once the buffer is warm) draw a
/// minibatch, regress toward the frozen-target bootstrap values, and sync the
/// target every `target_sync_period` gradient steps.
TrainResult train(CapacityEnv& env, const TrainingConfig& config,
                  const std::string& config_digest = "");

}  // namespace capexrl
