#include "capexrl/net.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "capexrl/errors.hpp"

namespace capexrl {

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("activation", "unknown activation: " + name);
}

std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

NetWorkspace::NetWorkspace(const QNetwork& net) {
    const auto& dims = net.dims();
    activations_.resize(dims.size());
    pre_.resize(dims.size() - 1);
    deltas_.resize(dims.size() - 1);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        activations_[i].resize(static_cast<std::size_t>(dims[i]));
    }
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        pre_[i].resize(static_cast<std::size_t>(dims[i + 1]));
        deltas_[i].resize(static_cast<std::size_t>(dims[i + 1]));
    }
}

QNetwork::QNetwork(std::vector<int> dims, Activation hidden_activation)
    : dims_(std::move(dims)), act_(hidden_activation) {
    if (dims_.size() < 2) throw ShapeError("QNetwork: need at least input and output layers");
    for (int d : dims_) {
        if (d < 1) throw ShapeError("QNetwork: layer sizes must be positive");
    }
    compute_offsets();
    params_.assign(offsets_.back(), 0.0);
}

void QNetwork::compute_offsets() {
    offsets_.clear();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        const auto in = static_cast<std::size_t>(dims_[l]);
        const auto out = static_cast<std::size_t>(dims_[l + 1]);
        offsets_.push_back(off);        // weights
        off += in * out;
        offsets_.push_back(off);        // biases
        off += out;
    }
    offsets_.push_back(off);  // total
}

QNetwork QNetwork::random_init(std::vector<int> dims, Activation hidden_activation, Rng& rng) {
    QNetwork net(std::move(dims), hidden_activation);
    for (std::size_t l = 0; l + 1 < net.dims_.size(); ++l) {
        const auto in = static_cast<std::size_t>(net.dims_[l]);
        const auto out = static_cast<std::size_t>(net.dims_[l + 1]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        double* w = net.params_.data() + net.weight_offset(l);
        for (std::size_t k = 0; k < in * out; ++k) {
            w[k] = scale * (2.0 * rng.uniform01() - 1.0);
        }
        // biases stay zero
    }
    return net;
}

namespace {

inline double activate(Activation a, double z) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double activate_grad(Activation a, double z, double activated) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - activated * activated;
}

}  // namespace

void QNetwork::forward(std::span<const double> input, NetWorkspace& ws) const {
    if (input.size() != static_cast<std::size_t>(dims_.front())) {
        throw ShapeError("forward: input has " + std::to_string(input.size()) +
                         " values, expected " + std::to_string(dims_.front()));
    }
    if (ws.activations_.size() != dims_.size()) ws = NetWorkspace(*this);

    std::copy(input.begin(), input.end(), ws.activations_[0].begin());
    const std::size_t layers = dims_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto in = static_cast<std::size_t>(dims_[l]);
        const auto out = static_cast<std::size_t>(dims_[l + 1]);
        const double* w = params_.data() + weight_offset(l);
        const double* b = params_.data() + bias_offset(l);
        const double* a = ws.activations_[l].data();
        double* z = ws.pre_[l].data();
        double* next = ws.activations_[l + 1].data();
        const bool last = l + 1 == layers;
        for (std::size_t o = 0; o < out; ++o) {
            const double* row = w + o * in;
            double acc = b[o];
            for (std::size_t k = 0; k < in; ++k) acc += row[k] * a[k];
            z[o] = acc;
            next[o] = last ? acc : activate(act_, acc);
        }
    }
}

std::vector<double> QNetwork::forward(std::span<const double> input) const {
    NetWorkspace ws(*this);
    forward(input, ws);
    return {ws.output().begin(), ws.output().end()};
}

void QNetwork::backward(NetWorkspace& ws, int action_index, double target,
                        std::span<double> grad_out) const {
    if (grad_out.size() != params_.size()) {
        throw ShapeError("backward: gradient buffer size mismatch");
    }
    if (!std::isfinite(target)) throw NumericError("backward: non-finite target");
    const std::size_t layers = dims_.size() - 1;
    const auto out_dim = static_cast<std::size_t>(dims_.back());
    if (action_index < 0 || static_cast<std::size_t>(action_index) >= out_dim) {
        throw ShapeError("backward: action index out of range");
    }

    // Loss 0.5*(target - q[a])^2 through the linear output head:
    // dL/dz_last is zero except at the chosen action.
    auto& deltas = ws.deltas_;
    const double err = ws.activations_.back()[static_cast<std::size_t>(action_index)] - target;
    {
        auto& d = deltas[layers - 1];
        std::fill(d.begin(), d.end(), 0.0);
        d[static_cast<std::size_t>(action_index)] = err;
    }

    for (std::size_t l = layers; l-- > 0;) {
        const auto in = static_cast<std::size_t>(dims_[l]);
        const auto out = static_cast<std::size_t>(dims_[l + 1]);
        const double* a = ws.activations_[l].data();
        const double* d = deltas[l].data();
        double* gw = grad_out.data() + weight_offset(l);
        double* gb = grad_out.data() + bias_offset(l);

        if (l + 1 == layers) {
            // single nonzero delta at the chosen head
            const auto o = static_cast<std::size_t>(action_index);
            double* grow = gw + o * in;
            for (std::size_t k = 0; k < in; ++k) grow[k] += err * a[k];
            gb[o] += err;
        } else {
            for (std::size_t o = 0; o < out; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                double* grow = gw + o * in;
                for (std::size_t k = 0; k < in; ++k) grow[k] += dv * a[k];
                gb[o] += dv;
            }
        }

        if (l == 0) break;

        // propagate to the previous layer through W_l and the activation
        const double* w = params_.data() + weight_offset(l);
        auto& prev = deltas[l - 1];
        if (l + 1 == layers) {
            const auto o = static_cast<std::size_t>(action_index);
            const double* row = w + o * in;
            for (std::size_t k = 0; k < in; ++k) prev[k] = err * row[k];
        } else {
            std::fill(prev.begin(), prev.end(), 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                const double* row = w + o * in;
                for (std::size_t k = 0; k < in; ++k) prev[k] += dv * row[k];
            }
        }
        const double* z = ws.pre_[l - 1].data();
        const double* act = ws.activations_[l].data();
        for (std::size_t k = 0; k < in; ++k) {
            prev[k] *= activate_grad(act_, z[k], act[k]);
        }
    }
}

GradientUpdate QNetwork::gradient(std::span<const double> input, int action_index, double target,
                                  double step_size) const {
    NetWorkspace ws(*this);
    forward(input, ws);
    GradientUpdate update;
    update.grad.assign(params_.size(), 0.0);
    update.step_size = step_size;
    backward(ws, action_index, target, update.grad);
    return update;
}

void apply_update(QNetwork& net, const GradientUpdate& update) {
    if (update.grad.size() != net.param_count()) {
        throw ShapeError("apply_update: gradient size mismatch");
    }
    auto& params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= update.step_size * update.grad[i];
    }
}

void SgdOptimizer::step(std::vector<double>& params, std::span<const double> grad) {
    if (grad.size() != params.size()) throw ShapeError("sgd: gradient size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
}

void AdamOptimizer::step(std::vector<double>& params, std::span<const double> grad) {
    if (grad.size() != params.size()) throw ShapeError("adam: gradient size mismatch");
    if (m_.size() != params.size()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
        t_ = 0;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr) {
    if (name == "sgd") return std::make_unique<SgdOptimizer>(lr);
    if (name == "adam") return std::make_unique<AdamOptimizer>(lr);
    throw ConfigError("optimizer", "unknown optimizer: " + name);
}

Normalization Normalization::for_params(const EnvParams& params) {
    Normalization n;
    n.horizon = static_cast<double>(params.horizon);
    n.price_scale = params.initial_price;
    n.demand_scale = params.demand_enabled() ? params.initial_demand : 1.0;
    n.capacity_scale = static_cast<double>(params.max_capacity);
    return n;
}

void encode_state(const EnvState& state, const Normalization& norm, std::span<double> out) {
    if (out.size() != kStateFeatureCount) throw ShapeError("encode_state: need 4 feature slots");
    out[0] = static_cast<double>(state.t) / norm.horizon;
    out[1] = state.price / norm.price_scale;
    out[2] = state.demand ? *state.demand / norm.demand_scale : 1.0;
    out[3] = static_cast<double>(state.installed) / norm.capacity_scale;
}

namespace {

constexpr const char* kMagic = "capexrl-checkpoint v1";

void expect_key(std::istream& in, const char* key) {
    std::string token;
    if (!(in >> token) || token != key) {
        throw ConfigError("checkpoint", std::string("corrupt checkpoint: expected '") + key +
                                            "', got '" + token + "'");
    }
}

template <typename T>
T read_value(std::istream& in, const char* key) {
    expect_key(in, key);
    T v{};
    if (!(in >> v)) {
        throw ConfigError("checkpoint", std::string("corrupt checkpoint: bad value for ") + key);
    }
    return v;
}

}  // namespace

void Checkpoint::save(std::ostream& out) const {
    out << kMagic << '\n';
    out << std::setprecision(17);
    out << "digest " << (config_digest.empty() ? "-" : config_digest) << '\n';
    out << "episodes_trained " << episodes_trained << '\n';
    out << "final_return_ma " << final_return_ma << '\n';
    out << "final_loss_mean " << final_loss_mean << '\n';

    out << "activation " << activation_name(net.hidden_activation()) << '\n';
    out << "dims " << net.dims().size();
    for (int d : net.dims()) out << ' ' << d;
    out << '\n';

    out << "norm " << norm.horizon << ' ' << norm.price_scale << ' ' << norm.demand_scale << ' '
        << norm.capacity_scale << '\n';

    out << "env " << (env.variant == Variant::price_only ? "price_only" : "price_demand") << ' '
        << env.horizon << ' ' << env.unit_output << ' ' << env.op_cost << ' ' << env.inv_cost
        << ' ' << env.interest << ' ' << env.price_drift << ' ' << env.price_vol << ' '
        << env.initial_price << ' ' << env.max_capacity << ' ' << env.sample_pool << ' '
        << env.demand_drift << ' ' << env.demand_vol << ' ' << env.initial_demand << ' '
        << env.capacity_per_unit << '\n';

    out << "train " << train.episodes << ' ' << train.gamma << ' ' << train.learning_rate << ' '
        << train.eps_start << ' ' << train.eps_end << ' ' << train.eps_decay << ' '
        << train.batch_size << ' ' << train.buffer_capacity << ' ' << train.min_buffer_fill << ' '
        << train.target_sync_period << ' ' << train.seed << ' ' << train.optimizer << " hidden "
        << train.hidden.size();
    for (int h : train.hidden) out << ' ' << h;
    out << '\n';

    out << "params " << net.param_count() << '\n';
    const auto& p = net.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << p[i] << ((i + 1) % 8 == 0 ? '\n' : ' ');
    }
    if (p.size() % 8 != 0) out << '\n';
}

void Checkpoint::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("out", "cannot write checkpoint: " + path);
    save(out);
    if (!out) throw ConfigError("out", "failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(std::istream& in) {
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic) throw ConfigError("checkpoint", "not a capexrl checkpoint (bad magic)");

    Checkpoint ck;
    ck.config_digest = read_value<std::string>(in, "digest");
    if (ck.config_digest == "-") ck.config_digest.clear();
    ck.episodes_trained = read_value<long long>(in, "episodes_trained");
    ck.final_return_ma = read_value<double>(in, "final_return_ma");
    ck.final_loss_mean = read_value<double>(in, "final_loss_mean");

    const auto act = activation_from_name(read_value<std::string>(in, "activation"));
    const auto ndims = read_value<std::size_t>(in, "dims");
    if (ndims < 2 || ndims > 64) throw ConfigError("checkpoint", "corrupt checkpoint: dims");
    std::vector<int> dims(ndims);
    for (auto& d : dims) {
        if (!(in >> d)) throw ConfigError("checkpoint", "corrupt checkpoint: dims");
    }

    expect_key(in, "norm");
    if (!(in >> ck.norm.horizon >> ck.norm.price_scale >> ck.norm.demand_scale >>
          ck.norm.capacity_scale)) {
        throw ConfigError("checkpoint", "corrupt checkpoint: norm");
    }

    expect_key(in, "env");
    std::string variant;
    if (!(in >> variant >> ck.env.horizon >> ck.env.unit_output >> ck.env.op_cost >>
          ck.env.inv_cost >> ck.env.interest >> ck.env.price_drift >> ck.env.price_vol >>
          ck.env.initial_price >> ck.env.max_capacity >> ck.env.sample_pool >>
          ck.env.demand_drift >> ck.env.demand_vol >> ck.env.initial_demand >>
          ck.env.capacity_per_unit)) {
        throw ConfigError("checkpoint", "corrupt checkpoint: env");
    }
    if (variant == "price_only") {
        ck.env.variant = Variant::price_only;
    } else if (variant == "price_demand") {
        ck.env.variant = Variant::price_demand;
    } else {
        throw ConfigError("checkpoint", "corrupt checkpoint: env variant " + variant);
    }

    expect_key(in, "train");
    if (!(in >> ck.train.episodes >> ck.train.gamma >> ck.train.learning_rate >>
          ck.train.eps_start >> ck.train.eps_end >> ck.train.eps_decay >> ck.train.batch_size >>
          ck.train.buffer_capacity >> ck.train.min_buffer_fill >> ck.train.target_sync_period >>
          ck.train.seed >> ck.train.optimizer)) {
        throw ConfigError("checkpoint", "corrupt checkpoint: train");
    }
    const auto nhidden = read_value<std::size_t>(in, "hidden");
    if (nhidden > 64) throw ConfigError("checkpoint", "corrupt checkpoint: hidden");
    ck.train.hidden.resize(nhidden);
    for (auto& h : ck.train.hidden) {
        if (!(in >> h)) throw ConfigError("checkpoint", "corrupt checkpoint: hidden");
    }

    const auto nparams = read_value<std::size_t>(in, "params");
    ck.net = QNetwork(std::move(dims), act);
    if (nparams != ck.net.param_count()) {
        throw ConfigError("checkpoint", "corrupt checkpoint: parameter count mismatch");
    }
    for (auto& v : ck.net.params()) {
        if (!(in >> v)) throw ConfigError("checkpoint", "corrupt checkpoint: parameters");
    }
    return ck;
}

Checkpoint Checkpoint::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("checkpoint", "cannot open checkpoint: " + path);
    return load(in);
}

}  // namespace capexrl
