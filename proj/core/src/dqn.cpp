#include "capexrl/dqn.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "capexrl/policy.hpp"

namespace capexrl {

std::vector<double> PolicyArtifact::q_values(const EnvState& state) const {
    std::array<double, kStateFeatureCount> features{};
    encode_state(state, ckpt_.norm, features);
    return ckpt_.net.forward(features);
}

Decision PolicyArtifact::greedy_decision(const EnvState& state) const {
    const std::vector<double> q = q_values(state);
    const int residual = ckpt_.env.max_capacity - state.installed;
    int best = 0;
    for (int add = 1; add <= residual; ++add) {
        if (q[static_cast<std::size_t>(add)] > q[static_cast<std::size_t>(best)]) best = add;
    }
    return Decision{best};
}

double td_target(const Experience& exp, std::span<const double> next_q, double gamma,
                 std::span<const Decision> feasible_next) {
    if (exp.terminal) return exp.reward;
    if (feasible_next.empty()) {
        throw FeasibilityError("td_target: non-terminal transition with empty feasible set");
    }
    double best = next_q[static_cast<std::size_t>(feasible_next[0].add)];
    for (const Decision& d : feasible_next) {
        best = std::max(best, next_q[static_cast<std::size_t>(d.add)]);
    }
    return exp.reward + gamma * best;
}

double td_target(const Experience& exp, const TargetNetwork& target, const Normalization& norm,
                 double gamma, const EnvParams& params) {
    if (exp.terminal) return exp.reward;
    std::array<double, kStateFeatureCount> features{};
    encode_state(exp.next_state, norm, features);
    const std::vector<double> q = target.forward(features);
    const std::vector<Decision> feasible = CapacityEnv::feasible(exp.next_state, params);
    return td_target(exp, q, gamma, feasible);
}

void TrainingLog::write_csv(std::ostream& out, const std::string& config_digest) const {
    out << "# config_digest=" << config_digest << '\n';
    out << "episode,epsilon,return,moving_avg_100,loss_mean,wall_ms\n";
    const auto prev = out.precision(12);
    for (const auto& row : rows) {
        out << row.episode << ',' << row.epsilon << ',' << row.episode_return << ','
            << row.moving_avg_100 << ',' << row.loss_mean << ',' << row.wall_ms << '\n';
    }
    out.precision(prev);
}

TrainResult train(CapacityEnv& env, const TrainingConfig& config,
                  const std::string& config_digest) {
    config.validate();
    const EnvParams& params = env.params();
    const int heads = params.max_capacity + 1;

    std::vector<int> dims;
    dims.push_back(kStateFeatureCount);
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(heads);

    Rng init_rng(derive_stream(config.seed, "init"));
    QNetwork online = QNetwork::random_init(dims, Activation::relu, init_rng);
    TargetNetwork target = online;
    const Normalization norm = Normalization::for_params(params);
    const auto optimizer = make_optimizer(config.optimizer, config.learning_rate);

    env.reset(derive_stream(config.seed, "env"));
    Rng explore(derive_stream(config.seed, "explore"));
    Rng replay_rng(derive_stream(config.seed, "replay"));

    ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
    const std::size_t warm =
        static_cast<std::size_t>(std::max(config.min_buffer_fill, config.batch_size));

    NetWorkspace ws(online);
    NetWorkspace target_ws(online);
    std::vector<double> grad(online.param_count(), 0.0);
    std::vector<std::size_t> batch_idx;
    std::vector<std::size_t> feasible_idx;
    std::array<double, kStateFeatureCount> features{};

    auto snapshot = [&](long long episodes_done, double ma, double loss) {
        Checkpoint ck;
        ck.net = online;
        ck.norm = norm;
        ck.env = params;
        ck.train = config;
        ck.config_digest = config_digest;
        ck.episodes_trained = episodes_done;
        ck.final_return_ma = ma;
        ck.final_loss_mean = loss;
        return ck;
    };

    TrainingLog log;
    log.rows.reserve(static_cast<std::size_t>(config.episodes));
    std::vector<double> window;  // last <=100 episode returns
    window.reserve(100);
    std::size_t window_next = 0;

    long long grad_steps = 0;
    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

    for (long long episode = 1; episode <= config.episodes; ++episode) {
        const auto t0 = std::chrono::steady_clock::now();
        const double eps =
            epsilon_schedule(episode, config.eps_start, config.eps_end, config.eps_decay);

        EnvState state = env.reset();
        double episode_return = 0.0;
        double loss_sum = 0.0;
        long long loss_count = 0;

        for (;;) {
            const int residual = params.max_capacity - state.installed;
            feasible_idx.resize(static_cast<std::size_t>(residual) + 1);
            std::iota(feasible_idx.begin(), feasible_idx.end(), std::size_t{0});

            encode_state(state, norm, features);
            online.forward(features, ws);
            const auto pick =
                static_cast<int>(epsilon_greedy(ws.output(), feasible_idx, eps, explore));

            const StepOutcome outcome = env.step(state, Decision{pick});
            episode_return += outcome.reward;
            buffer.push(
                Experience{state, Decision{pick}, outcome.reward, outcome.next_state,
                           outcome.terminal});

            if (buffer.ready(warm) &&
                buffer.sample_indices(static_cast<std::size_t>(config.batch_size), replay_rng,
                                      batch_idx)) {
                std::fill(grad.begin(), grad.end(), 0.0);
                double batch_loss = 0.0;
                for (const std::size_t idx : batch_idx) {
                    const Experience& exp = buffer[idx];
                    double y = exp.reward;
                    if (!exp.terminal) {
                        encode_state(exp.next_state, norm, features);
                        target.forward(features, target_ws);
                        const auto next_q = target_ws.output();
                        const int nres = params.max_capacity - exp.next_state.installed;
                        double best = next_q[0];
                        for (int add = 1; add <= nres; ++add) {
                            best = std::max(best, next_q[static_cast<std::size_t>(add)]);
                        }
                        y += config.gamma * best;
                    }
                    encode_state(exp.state, norm, features);
                    online.forward(features, ws);
                    const double diff = ws.output()[static_cast<std::size_t>(exp.decision.add)] - y;
                    batch_loss += 0.5 * diff * diff;
                    online.backward(ws, exp.decision.add, y, grad);
                }
                batch_loss *= inv_batch;
                for (double& g : grad) g *= inv_batch;

                if (!std::isfinite(batch_loss) || batch_loss > 1e12) {
                    throw TrainingDivergence(
                        "training diverged at episode " + std::to_string(episode) +
                            " (minibatch loss " + std::to_string(batch_loss) + ")",
                        snapshot(episode, 0.0, batch_loss));
                }

                optimizer->step(online.params(), grad);
                ++grad_steps;
                if (grad_steps % config.target_sync_period == 0) sync(target, online);
                loss_sum += batch_loss;
                ++loss_count;
            }

            if (outcome.terminal) break;
            state = outcome.next_state;
        }

        if (window.size() < 100) {
            window.push_back(episode_return);
        } else {
            window[window_next] = episode_return;
            window_next = (window_next + 1) % 100;
        }
        const double ma =
            std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());

        const auto t1 = std::chrono::steady_clock::now();
        TrainingLogRow row;
        row.episode = episode;
        row.epsilon = eps;
        row.episode_return = episode_return;
        row.moving_avg_100 = ma;
        row.loss_mean = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        log.rows.push_back(row);
    }

    const double final_ma = log.rows.empty() ? 0.0 : log.rows.back().moving_avg_100;
    const double final_loss = log.rows.empty() ? 0.0 : log.rows.back().loss_mean;
    TrainResult result{PolicyArtifact(snapshot(config.episodes, final_ma, final_loss)),
                       std::move(log)};
    return result;
}

}  // namespace capexrl
