#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "capexrl/errors.hpp"
#include "capexrl/config.hpp"
#include "capexrl/env.hpp"
#include "capexrl/rng.hpp"

namespace capexrl {

enum class Activation { relu, tanh };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

class QNetwork;

/// Preallocated forward/backward scratch: pre-activations and activations per
/// layer. Reused across the training loop so the hot path never allocates.
class NetWorkspace {
public:
    NetWorkspace() = default;
    explicit NetWorkspace(const QNetwork& net);

    std::span<const double> output() const { return activations_.back(); }

private:
    friend class QNetwork;
    std::vector<std::vector<double>> pre_;          // z per non-input layer
    std::vector<std::vector<double>> activations_;  // input, h1, ..., output
    std::vector<std::vector<double>> deltas_;       // backprop scratch
};

/// Gradient of a scalar loss with respect to every parameter, plus the step
/// size a plain-SGD application would use. Shapes mirror the network's flat
/// parameter vector.
struct GradientUpdate {
    std::vector<double> grad;
    double step_size = 0.0;
};

/// Dense feedforward Q-value approximator: linear layers with a fixed hidden
/// nonlinearity and a linear output head per decision. Parameters live in one
/// flat vector (per layer: row-major weights, then biases) so optimizers,
/// serialization and finite-difference checks all address them uniformly.
class QNetwork {
public:
    QNetwork() = default;
    QNetwork(std::vector<int> dims, Activation hidden_activation);

    /// Fan-in-scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static QNetwork random_init(std::vector<int> dims, Activation hidden_activation, Rng& rng);

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    Activation hidden_activation() const { return act_; }

    std::size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    /// Pure forward pass; deterministic for identical inputs and parameters.
    std::vector<double> forward(std::span<const double> input) const;

    /// Forward pass recording intermediates for a subsequent backward().
    void forward(std::span<const double> input, NetWorkspace& ws) const;

    /// Gradient of 0.5*(target - q[action])^2; flows only through the chosen
    /// output head. Reads the activations recorded by the matching forward();
    /// adds into grad_out (zero it for a fresh gradient).
    void backward(NetWorkspace& ws, int action_index, double target,
                  std::span<double> grad_out) const;

    /// Convenience single-sample API: forward + backward in one call.
    GradientUpdate gradient(std::span<const double> input, int action_index, double target,
                            double step_size = 0.0) const;

private:
    std::size_t weight_offset(std::size_t layer) const { return offsets_[2 * layer]; }
    std::size_t bias_offset(std::size_t layer) const { return offsets_[2 * layer + 1]; }
    void compute_offsets();

    std::vector<int> dims_;
    Activation act_ = Activation::relu;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;  // weight/bias offset per layer
};

/// Frozen copy of the online network used for bootstrap targets.
using TargetNetwork = QNetwork;

/// target <- deep copy of online. Later online updates leave target untouched.
inline void sync(TargetNetwork& target, const QNetwork& online) { target = online; }

/// w' = w - step_size * grad, exactly.
void apply_update(QNetwork& net, const GradientUpdate& update);

/// SGD and adaptive-moment steps behind one interface.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(std::vector<double>& params, std::span<const double> grad) = 0;
};

class SgdOptimizer final : public Optimizer {
public:
    explicit SgdOptimizer(double lr) : lr_(lr) {}
    void step(std::vector<double>& params, std::span<const double> grad) override;

private:
    double lr_;
};

class AdamOptimizer final : public Optimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(std::vector<double>& params, std::span<const double> grad) override;

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long long t_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr);

/// State-feature scaling baked into a trained artifact: [t/T, p/p1, d/d1, j/K].
struct Normalization {
    double horizon = 1.0;
    double price_scale = 1.0;
    double demand_scale = 1.0;   // 1.0 when demand is unbounded
    double capacity_scale = 1.0;

    static Normalization for_params(const EnvParams& params);
};

inline constexpr int kStateFeatureCount = 4;

/// Encodes a state into the network input features.
void encode_state(const EnvState& state, const Normalization& norm, std::span<double> out);

/// Versioned, self-describing artifact: network, normalization, originating
/// environment and training configuration, and summary training metrics.
/// Parameters are written with 17 significant digits so the round trip is
/// value-exact.
struct Checkpoint {
    QNetwork net;
    Normalization norm;
    EnvParams env;
    TrainingConfig train;
    std::string config_digest;
    long long episodes_trained = 0;
    double final_return_ma = 0.0;
    double final_loss_mean = 0.0;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;

    static Checkpoint load(std::istream& in);        // throws ConfigError on corrupt input
    static Checkpoint load_file(const std::string& path);
};

}  // namespace capexrl
