#include "capexrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <thread>

#include "capexrl/errors.hpp"

namespace capexrl {

namespace {

constexpr double kSigmaCoverage = 4.0;  // grid half-width in accumulated log sigmas
constexpr double kZ95 = 1.959963984540054;

double discount(const EnvParams& params, int t) {
    return std::pow(1.0 + params.interest, t - 1);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double lognormal_partial_expectation(double scale, double mu, double sigma, double k) {
    const double full = scale * std::exp(mu + 0.5 * sigma * sigma);
    if (k <= 0.0) return full;
    const double z0 = (std::log(k / scale) - mu) / sigma;
    return full * normal_cdf(sigma - z0);
}

double two_stage_threshold(double op_cost, double inv_cost, double unit_output) {
    if (!(unit_output > 0.0)) {
        throw ConfigError("u", "threshold undefined for zero unit output");
    }
    return (op_cost + inv_cost) / unit_output;
}

double two_stage_threshold(const EnvParams& params) {
    if (params.variant != Variant::price_only || params.horizon != 2) {
        throw ConfigError("variant",
                          "the closed-form threshold applies to the price-only, T = 2 problem");
    }
    return two_stage_threshold(params.op_cost, params.inv_cost, params.unit_output);
}

namespace {

void require_three_stage_price_only(const EnvParams& params, const char* what) {
    if (params.variant != Variant::price_only || params.horizon != 3) {
        throw ConfigError("variant", std::string(what) +
                                         " applies to the price-only, T = 3 problem");
    }
}

}  // namespace

double stage2_margin_mc(const EnvParams& params, double p2, std::span<const double> z) {
    const double u = params.unit_output;
    const double k = two_stage_threshold(params.op_cost, params.inv_cost, u);
    const double disc = 1.0 + params.interest;

    double sum_p3 = 0.0;
    double sum_wait = 0.0;
    for (const double zi : z) {
        const double p3 = p2 * std::exp(params.price_drift + params.price_vol * zi);
        sum_p3 += p3;
        if (p3 > k) sum_wait += u * p3 - params.op_cost - params.inv_cost;
    }
    const double n = static_cast<double>(z.size());
    const double invest_now = u * p2 - params.op_cost - params.inv_cost +
                              (u * (sum_p3 / n) - params.op_cost) / disc;
    const double wait = (sum_wait / n) / disc;
    return invest_now - wait;
}

double stage2_margin_closed_form(const EnvParams& params, double p2) {
    const double u = params.unit_output;
    const double mu = params.price_drift;
    const double sigma = params.price_vol;
    const double k = two_stage_threshold(params.op_cost, params.inv_cost, u);
    const double disc = 1.0 + params.interest;

    const double mean_p3 = p2 * std::exp(mu + 0.5 * sigma * sigma);
    const double invest_now =
        u * p2 - params.op_cost - params.inv_cost + (u * mean_p3 - params.op_cost) / disc;

    const double tail = lognormal_partial_expectation(p2, mu, sigma, k);
    const double prob = normal_cdf((mu - std::log(k / p2)) / sigma);
    const double wait = (u * tail - (params.op_cost + params.inv_cost) * prob) / disc;
    return invest_now - wait;
}

bool stage2_condition_mc(const EnvParams& params, double p2, long long n, Rng& rng) {
    require_three_stage_price_only(params, "the stage-2 condition");
    if (n < 1000) {
        throw ConfigError("samples", "stage-2 Monte Carlo needs at least 1000 samples");
    }
    if (!(p2 > 0.0)) throw ConfigError("p2", "p2 must be > 0");
    std::vector<double> z(static_cast<std::size_t>(n));
    for (double& v : z) v = rng.normal();
    return stage2_margin_mc(params, p2, z) > 0.0;
}

double stage2_boundary_mc(const EnvParams& params, long long n, std::uint64_t seed) {
    require_three_stage_price_only(params, "the stage-2 boundary");
    if (n < 1000) {
        throw ConfigError("samples", "stage-2 Monte Carlo needs at least 1000 samples");
    }
    Rng rng(derive_stream(seed, "stage2-mc"));
    std::vector<double> z(static_cast<std::size_t>(n));
    for (double& v : z) v = rng.normal();

    // The margin is strictly increasing in p2, so bisect over a bracket
    // around the single-stage threshold, sharing one draw set across
    // evaluations to keep the scan smooth.
    const double k = two_stage_threshold(params.op_cost, params.inv_cost, params.unit_output);
    double lo = 0.25 * k;
    double hi = 4.0 * k;
    int guard = 0;
    while (stage2_margin_mc(params, lo, z) > 0.0 && ++guard < 60) lo *= 0.5;
    guard = 0;
    while (stage2_margin_mc(params, hi, z) < 0.0 && ++guard < 60) hi *= 2.0;
    for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (stage2_margin_mc(params, mid, z) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

std::vector<double> log_spaced_nodes(double center_log, double half_width, int count) {
    std::vector<double> nodes(static_cast<std::size_t>(count));
    if (count == 1) {
        nodes[0] = std::exp(center_log);
        return nodes;
    }
    for (int j = 0; j < count; ++j) {
        const double x = center_log - half_width + 2.0 * half_width * j / (count - 1);
        nodes[static_cast<std::size_t>(j)] = std::exp(x);
    }
    return nodes;
}

std::vector<double> transition_rows(const std::vector<double>& from,
                                    const std::vector<double>& to, double drift, double vol) {
    const std::size_t cols = to.size();
    std::vector<double> matrix;
    matrix.reserve(from.size() * cols);
    for (const double f : from) {
        const std::vector<double> row = lognormal_transition_row(f, to, drift, vol);
        matrix.insert(matrix.end(), row.begin(), row.end());
    }
    return matrix;
}

}  // namespace

std::vector<double> lognormal_transition_row(double from, std::span<const double> to_nodes,
                                             double drift, double vol) {
    if (to_nodes.empty()) throw ShapeError("transition row: no destination nodes");
    const std::size_t cols = to_nodes.size();
    std::vector<double> bounds(cols + 1);
    bounds[0] = -std::numeric_limits<double>::infinity();
    bounds[cols] = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < cols; ++j) {
        bounds[j] = 0.5 * (std::log(to_nodes[j - 1]) + std::log(to_nodes[j]));
    }

    const double mean = std::log(from) + drift;
    std::vector<double> row(cols);
    double prev_cdf = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const double cdf = j + 1 == cols ? 1.0 : normal_cdf((bounds[j + 1] - mean) / vol);
        row[j] = cdf - prev_cdf;
        prev_cdf = cdf;
        sum += row[j];
    }
    for (std::size_t j = 0; j < cols; ++j) row[j] /= sum;
    return row;
}

LatticeSpec build_lattice(const EnvParams& params, int price_nodes_per_stage,
                          int demand_nodes_per_stage) {
    params.validate();
    if (price_nodes_per_stage < 3) {
        throw ConfigError("price_nodes", "lattice needs at least 3 nodes per stage");
    }
    if (params.demand_enabled() && demand_nodes_per_stage < 3) {
        throw ConfigError("demand_nodes", "lattice needs at least 3 demand nodes per stage");
    }

    LatticeSpec lattice;
    const int T = params.horizon;
    lattice.price_nodes.reserve(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        const double center = std::log(params.initial_price) + (t - 1) * params.price_drift;
        const double hw = kSigmaCoverage * params.price_vol * std::sqrt(static_cast<double>(t - 1));
        lattice.price_nodes.push_back(
            log_spaced_nodes(center, hw, t == 1 ? 1 : price_nodes_per_stage));
    }
    for (int t = 1; t < T; ++t) {
        lattice.price_trans.push_back(
            transition_rows(lattice.price_nodes[static_cast<std::size_t>(t - 1)],
                            lattice.price_nodes[static_cast<std::size_t>(t)], params.price_drift,
                            params.price_vol));
    }

    if (params.demand_enabled()) {
        lattice.demand_nodes.reserve(static_cast<std::size_t>(T));
        for (int t = 1; t <= T; ++t) {
            const double center =
                std::log(params.initial_demand) + (t - 1) * params.demand_drift;
            const double hw =
                kSigmaCoverage * params.demand_vol * std::sqrt(static_cast<double>(t - 1));
            lattice.demand_nodes.push_back(
                log_spaced_nodes(center, hw, t == 1 ? 1 : demand_nodes_per_stage));
        }
        for (int t = 1; t < T; ++t) {
            lattice.demand_trans.push_back(
                transition_rows(lattice.demand_nodes[static_cast<std::size_t>(t - 1)],
                                lattice.demand_nodes[static_cast<std::size_t>(t)],
                                params.demand_drift, params.demand_vol));
        }
    }
    return lattice;
}

std::size_t DPSolution::index(int t, int ip, int id, int installed) const {
    const auto np = static_cast<std::size_t>(lattice_.price_count(t));
    const auto nd = static_cast<std::size_t>(lattice_.demand_count(t));
    return (static_cast<std::size_t>(installed) * np + static_cast<std::size_t>(ip)) * nd +
           static_cast<std::size_t>(id);
}

double DPSolution::value(int t, int ip, int id, int installed) const {
    return values_[static_cast<std::size_t>(t - 1)][index(t, ip, id, installed)];
}

int DPSolution::decision(int t, int ip, int id, int installed) const {
    return decisions_[static_cast<std::size_t>(t - 1)][index(t, ip, id, installed)];
}

double DPSolution::price_threshold(int stage, int installed) const {
    const auto& nodes = lattice_.price_nodes[static_cast<std::size_t>(stage - 1)];
    std::vector<int> dec(nodes.size());
    for (std::size_t ip = 0; ip < nodes.size(); ++ip) {
        dec[ip] = decision(stage, static_cast<int>(ip), 0, installed);
    }
    return threshold_from_scan(nodes, dec);
}

double DPSolution::price_cell_width(int stage, int installed) const {
    const auto& nodes = lattice_.price_nodes[static_cast<std::size_t>(stage - 1)];
    for (std::size_t ip = 0; ip < nodes.size(); ++ip) {
        if (decision(stage, static_cast<int>(ip), 0, installed) > 0) {
            const std::size_t hi = std::max<std::size_t>(ip, 1);
            return nodes[hi] - nodes[hi - 1];
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

int nearest_log_node(const std::vector<double>& nodes, double value) {
    const int n = static_cast<int>(nodes.size());
    if (n == 1) return 0;
    const double lo = std::log(nodes.front());
    const double hi = std::log(nodes.back());
    const double step = (hi - lo) / (n - 1);
    const double pos = (std::log(value) - lo) / step;
    const int idx = static_cast<int>(std::lround(pos));
    return std::clamp(idx, 0, n - 1);
}

}  // namespace

int DPSolution::nearest_price_node(int t, double price) const {
    return nearest_log_node(lattice_.price_nodes[static_cast<std::size_t>(t - 1)], price);
}

int DPSolution::nearest_demand_node(int t, double demand) const {
    if (!lattice_.has_demand()) return 0;
    return nearest_log_node(lattice_.demand_nodes[static_cast<std::size_t>(t - 1)], demand);
}

Decision DPSolution::policy_decision(const EnvState& state) const {
    if (state.t < 1 || state.t > lattice_.stages()) {
        throw FeasibilityError("dp policy: stage out of range");
    }
    const int ip = nearest_price_node(state.t, state.price);
    const int id = state.demand ? nearest_demand_node(state.t, *state.demand) : 0;
    return Decision{decision(state.t, ip, id, state.installed)};
}

PolicyFn DPSolution::policy() const {
    // shared_ptr so the closure stays valid independently of this object
    auto self = std::make_shared<DPSolution>(*this);
    return [self](const EnvState& state) { return self->policy_decision(state); };
}

void DPSolution::export_csv(std::ostream& out, const std::string& config_digest) const {
    out << "# config_digest=" << config_digest << '\n';
    out << "t,price,demand,installed,decision,value\n";
    const auto prev = out.precision(12);
    for (int t = 1; t <= lattice_.stages(); ++t) {
        const auto& prices = lattice_.price_nodes[static_cast<std::size_t>(t - 1)];
        const int nd = lattice_.demand_count(t);
        for (int j = 0; j <= params_.max_capacity; ++j) {
            for (std::size_t ip = 0; ip < prices.size(); ++ip) {
                for (int id = 0; id < nd; ++id) {
                    out << t << ',' << prices[ip] << ',';
                    if (lattice_.has_demand()) {
                        out << lattice_.demand_nodes[static_cast<std::size_t>(t - 1)]
                                                    [static_cast<std::size_t>(id)];
                    }
                    out << ',' << j << ',' << decision(t, static_cast<int>(ip), id, j) << ','
                        << value(t, static_cast<int>(ip), id, j) << '\n';
                }
            }
        }
    }
    out.precision(prev);
}

DPSolution backward_induction(const LatticeSpec& lattice, const EnvParams& params) {
    params.validate();
    DPSolution dp;
    dp.lattice_ = lattice;
    dp.params_ = params;

    const int T = lattice.stages();
    const int K = params.max_capacity;
    dp.values_.resize(static_cast<std::size_t>(T));
    dp.decisions_.resize(static_cast<std::size_t>(T));

    std::vector<double> continuation;  // [j][ip][id] for the stage being solved
    std::vector<double> contracted;    // demand-contracted next values, [ip'][id]

    for (int t = T; t >= 1; --t) {
        const auto np = static_cast<std::size_t>(lattice.price_count(t));
        const auto nd = static_cast<std::size_t>(lattice.demand_count(t));
        const std::size_t cells = static_cast<std::size_t>(K + 1) * np * nd;
        auto& values = dp.values_[static_cast<std::size_t>(t - 1)];
        auto& decisions = dp.decisions_[static_cast<std::size_t>(t - 1)];
        values.assign(cells, 0.0);
        decisions.assign(cells, 0);

        const bool last = t == T;
        if (!last) {
            // continuation[j'] = E[ V_{t+1}(j', p', d') | p, d ], factorized:
            // first contract demand, then price.
            const auto npn = static_cast<std::size_t>(lattice.price_count(t + 1));
            const auto ndn = static_cast<std::size_t>(lattice.demand_count(t + 1));
            const auto& ptrans = lattice.price_trans[static_cast<std::size_t>(t - 1)];
            const double* dtrans = lattice.has_demand()
                                       ? lattice.demand_trans[static_cast<std::size_t>(t - 1)].data()
                                       : nullptr;
            const auto& next_values = dp.values_[static_cast<std::size_t>(t)];

            continuation.assign(static_cast<std::size_t>(K + 1) * np * nd, 0.0);
            contracted.assign(npn * nd, 0.0);
            for (int j = 0; j <= K; ++j) {
                const double* vnext = next_values.data() + static_cast<std::size_t>(j) * npn * ndn;
                if (dtrans != nullptr) {
                    for (std::size_t ipn = 0; ipn < npn; ++ipn) {
                        const double* vrow = vnext + ipn * ndn;
                        double* crow = contracted.data() + ipn * nd;
                        for (std::size_t id = 0; id < nd; ++id) {
                            const double* drow = dtrans + id * ndn;
                            double acc = 0.0;
                            for (std::size_t idn = 0; idn < ndn; ++idn) {
                                acc += drow[idn] * vrow[idn];
                            }
                            crow[id] = acc;
                        }
                    }
                } else {
                    std::copy(vnext, vnext + npn, contracted.begin());
                }
                double* cont = continuation.data() + static_cast<std::size_t>(j) * np * nd;
                for (std::size_t ip = 0; ip < np; ++ip) {
                    double* crow = cont + ip * nd;
                    const double* prow = ptrans.data() + ip * npn;
                    for (std::size_t ipn = 0; ipn < npn; ++ipn) {
                        const double w = prow[ipn];
                        const double* arow = contracted.data() + ipn * nd;
                        for (std::size_t id = 0; id < nd; ++id) crow[id] += w * arow[id];
                    }
                }
            }
        }

        const auto& prices = lattice.price_nodes[static_cast<std::size_t>(t - 1)];
        for (int j = 0; j <= K; ++j) {
            for (std::size_t ip = 0; ip < np; ++ip) {
                for (std::size_t id = 0; id < nd; ++id) {
                    EnvState state;
                    state.t = t;
                    state.price = prices[ip];
                    if (lattice.has_demand()) {
                        state.demand =
                            lattice.demand_nodes[static_cast<std::size_t>(t - 1)][id];
                    }
                    state.installed = j;

                    double best = -std::numeric_limits<double>::infinity();
                    int best_x = 0;
                    for (int x = 0; x + j <= K; ++x) {
                        double total = CapacityEnv::stage_reward(state, Decision{x}, params);
                        if (!last) {
                            total += continuation[(static_cast<std::size_t>(j + x) * np + ip) * nd +
                                                  id];
                        }
                        if (total > best) {
                            best = total;
                            best_x = x;
                        }
                    }
                    const std::size_t cell = (static_cast<std::size_t>(j) * np + ip) * nd + id;
                    values[cell] = best;
                    decisions[cell] = best_x;
                }
            }
        }
    }
    return dp;
}

EvalReport evaluate_policy(const PolicyFn& policy, const EnvParams& params, long long replications,
                           std::uint64_t seed, std::vector<double>* per_replication, int workers) {
    params.validate();
    if (replications < 1) throw ConfigError("replications", "need at least one replication");

    int nworkers = workers;
    if (nworkers <= 0) {
        nworkers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    nworkers = static_cast<int>(
        std::min<long long>(nworkers, replications));

    const int T = params.horizon;
    const int K = params.max_capacity;
    std::vector<double> profits(static_cast<std::size_t>(replications), 0.0);
    std::vector<std::vector<std::vector<long long>>> counts(
        static_cast<std::size_t>(nworkers),
        std::vector<std::vector<long long>>(static_cast<std::size_t>(T),
                                            std::vector<long long>(static_cast<std::size_t>(K) + 1,
                                                                   0)));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(nworkers));

    auto run_range = [&](int w, long long begin, long long end) {
        try {
            CapacityEnv env(params, 0);
            auto& count = counts[static_cast<std::size_t>(w)];
            for (long long m = begin; m < end; ++m) {
                EnvState state = env.reset(derive_stream(seed, "rollout",
                                                         static_cast<std::uint64_t>(m)));
                double total = 0.0;
                bool terminal = false;
                while (!terminal) {
                    const Decision d = policy(state);
                    ++count[static_cast<std::size_t>(state.t - 1)][static_cast<std::size_t>(d.add)];
                    const StepOutcome out = env.step(state, d);
                    total += out.reward;
                    terminal = out.terminal;
                    state = out.next_state;
                }
                profits[static_cast<std::size_t>(m)] = total;
            }
        } catch (...) {
            failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };

    if (nworkers == 1) {
        run_range(0, 0, replications);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nworkers));
        for (int w = 0; w < nworkers; ++w) {
            const long long begin = replications * w / nworkers;
            const long long end = replications * (w + 1) / nworkers;
            pool.emplace_back(run_range, w, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    EvalReport report;
    report.replications = replications;
    double sum = 0.0;
    for (const double p : profits) sum += p;
    report.mean = sum / static_cast<double>(replications);
    if (replications > 1) {
        double ss = 0.0;
        for (const double p : profits) {
            const double d = p - report.mean;
            ss += d * d;
        }
        const double variance = ss / static_cast<double>(replications - 1);
        report.std_error = std::sqrt(variance / static_cast<double>(replications));
    }
    report.ci_low = report.mean - kZ95 * report.std_error;
    report.ci_high = report.mean + kZ95 * report.std_error;

    report.decision_counts.assign(static_cast<std::size_t>(T),
                                  std::vector<long long>(static_cast<std::size_t>(K) + 1, 0));
    for (const auto& per_worker : counts) {
        for (std::size_t t = 0; t < per_worker.size(); ++t) {
            for (std::size_t x = 0; x < per_worker[t].size(); ++x) {
                report.decision_counts[t][x] += per_worker[t][x];
            }
        }
    }

    if (per_replication != nullptr) *per_replication = std::move(profits);
    return report;
}

void EvalReport::print(std::ostream& out) const {
    const auto prev = out.precision(8);
    out << "replications: " << replications << '\n';
    out << "mean profit:  " << mean << '\n';
    out << "std error:    " << std_error << '\n';
    out << "95% CI:       [" << ci_low << ", " << ci_high << "]\n";
    out << "decision frequencies per stage:\n";
    for (std::size_t t = 0; t < decision_counts.size(); ++t) {
        out << "  t=" << (t + 1) << ':';
        long long total = 0;
        for (const long long c : decision_counts[t]) total += c;
        for (std::size_t x = 0; x < decision_counts[t].size(); ++x) {
            const double f =
                total > 0 ? static_cast<double>(decision_counts[t][x]) / static_cast<double>(total)
                          : 0.0;
            out << "  add" << x << '=' << f;
        }
        out << '\n';
    }
    out.precision(prev);
}

void EvalReport::write_csv(std::ostream& out, const std::string& config_digest) const {
    const auto prev = out.precision(12);
    out << "# config_digest=" << config_digest << '\n';
    out << "replications,mean,std_error,ci_low,ci_high\n";
    out << replications << ',' << mean << ',' << std_error << ',' << ci_low << ',' << ci_high
        << '\n';
    out << "stage,decision,count,frequency\n";
    for (std::size_t t = 0; t < decision_counts.size(); ++t) {
        long long total = 0;
        for (const long long c : decision_counts[t]) total += c;
        for (std::size_t x = 0; x < decision_counts[t].size(); ++x) {
            const double f =
                total > 0 ? static_cast<double>(decision_counts[t][x]) / static_cast<double>(total)
                          : 0.0;
            out << (t + 1) << ',' << x << ',' << decision_counts[t][x] << ',' << f << '\n';
        }
    }
    out.precision(prev);
}

PolicyMap extract_policy_map(const PolicyFn& policy, const EnvParams& params, int stage,
                             std::span<const double> prices, std::span<const double> demands,
                             int installed) {
    params.validate();
    if (stage < 1 || stage > params.horizon) {
        throw ConfigError("stage", "stage " + std::to_string(stage) + " outside 1.." +
                                       std::to_string(params.horizon));
    }
    if (installed < 0 || installed > params.max_capacity) {
        throw ConfigError("installed", "installed outside 0..K");
    }
    if (prices.empty()) throw ConfigError("grid", "need at least one price point");

    PolicyMap map;
    map.stage = stage;
    map.installed = installed;
    map.prices.assign(prices.begin(), prices.end());
    const bool with_demand = params.demand_enabled();
    if (with_demand) {
        if (demands.empty()) {
            map.demands = {params.initial_demand};
        } else {
            map.demands.assign(demands.begin(), demands.end());
        }
    }

    const std::size_t nd = std::max<std::size_t>(1, map.demands.size());
    map.decisions.resize(map.prices.size() * nd);
    for (std::size_t ip = 0; ip < map.prices.size(); ++ip) {
        for (std::size_t id = 0; id < nd; ++id) {
            EnvState state;
            state.t = stage;
            state.price = map.prices[ip];
            if (with_demand) state.demand = map.demands[id];
            state.installed = installed;
            map.decisions[ip * nd + id] = policy(state).add;
        }
    }
    return map;
}

void PolicyMap::write_csv(std::ostream& out, const std::string& config_digest) const {
    const auto prev = out.precision(12);
    out << "# config_digest=" << config_digest << '\n';
    out << "price,demand,decision\n";
    const std::size_t nd = std::max<std::size_t>(1, demands.size());
    for (std::size_t ip = 0; ip < prices.size(); ++ip) {
        for (std::size_t id = 0; id < nd; ++id) {
            out << prices[ip] << ',';
            if (!demands.empty()) out << demands[id];
            out << ',' << decisions[ip * nd + id] << '\n';
        }
    }
    out.precision(prev);
}

double threshold_from_scan(std::span<const double> xs, std::span<const int> decisions) {
    if (xs.size() != decisions.size() || xs.empty()) {
        throw ShapeError("threshold_from_scan: mismatched scan arrays");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (decisions[i] > 0) {
            if (i == 0) return xs[0];
            return 0.5 * (xs[i - 1] + xs[i]);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

PolicyFn never_invest_policy() {
    return [](const EnvState&) { return Decision{0}; };
}

PolicyFn invest_all_at_first_stage_policy(const EnvParams& params) {
    const int K = params.max_capacity;
    return [K](const EnvState& state) {
        return state.t == 1 ? Decision{K - state.installed} : Decision{0};
    };
}

PolicyFn random_feasible_policy(const EnvParams& params, std::uint64_t seed) {
    const int K = params.max_capacity;
    auto rng = std::make_shared<Rng>(derive_stream(seed, "random-policy"));
    return [K, rng](const EnvState& state) {
        const int residual = K - state.installed;
        return Decision{static_cast<int>(rng->uniform_index(static_cast<std::size_t>(residual) + 1))};
    };
}

PairedEval paired_compare(const PolicyFn& a, const PolicyFn& b, const EnvParams& params,
                          long long replications, std::uint64_t seed) {
    std::vector<double> pa;
    std::vector<double> pb;
    const EvalReport ra = evaluate_policy(a, params, replications, seed, &pa);
    const EvalReport rb = evaluate_policy(b, params, replications, seed, &pb);

    PairedEval out;
    out.replications = replications;
    out.mean_a = ra.mean;
    out.mean_b = rb.mean;
    out.mean_diff = ra.mean - rb.mean;
    if (replications > 1) {
        double ss = 0.0;
        for (std::size_t m = 0; m < pa.size(); ++m) {
            const double d = (pa[m] - pb[m]) - out.mean_diff;
            ss += d * d;
        }
        const double variance = ss / static_cast<double>(replications - 1);
        out.se_diff = std::sqrt(variance / static_cast<double>(replications));
    }
    return out;
}

void CompareReport::print(std::ostream& out) const {
    const auto prev = out.precision(8);
    out << "policy vs dynamic-programming oracle\n";
    for (const auto& th : thresholds) {
        out << "  stage " << th.stage << ": dp threshold " << th.dp_threshold
            << ", policy threshold " << th.policy_threshold << ", delta " << th.delta << '\n';
    }
    out << "  dp profit:     " << dp_profit << '\n';
    out << "  policy profit: " << policy_profit << '\n';
    out << "  profit gap:    " << profit_gap << " (" << 100.0 * percent_gap << "%)\n";
    out << "  thresholds pass: " << (thresholds_pass ? "true" : "false") << '\n';
    out << "  profit pass:     " << (profit_pass ? "true" : "false") << '\n';
    out.precision(prev);
}

void CompareReport::write_csv(std::ostream& out, const std::string& config_digest) const {
    const auto prev = out.precision(12);
    out << "# config_digest=" << config_digest << '\n';
    out << "stage,dp_threshold,policy_threshold,delta\n";
    for (const auto& th : thresholds) {
        out << th.stage << ',' << th.dp_threshold << ',' << th.policy_threshold << ',' << th.delta
            << '\n';
    }
    out << "dp_profit,policy_profit,profit_gap,percent_gap,thresholds_pass,profit_pass\n";
    out << dp_profit << ',' << policy_profit << ',' << profit_gap << ',' << percent_gap << ','
        << (thresholds_pass ? 1 : 0) << ',' << (profit_pass ? 1 : 0) << '\n';
    out.precision(prev);
}

CompareReport compare_policy_to_dp(const PolicyFn& policy, const EnvParams& params,
                                   const CompareOptions& options) {
    const LatticeSpec lattice = build_lattice(params, options.price_nodes, options.demand_nodes);
    const DPSolution dp = backward_induction(lattice, params);

    CompareReport report;
    if (!params.demand_enabled()) {
        report.thresholds_pass = true;
        for (int stage = 2; stage <= params.horizon; ++stage) {
            const auto& nodes = lattice.price_nodes[static_cast<std::size_t>(stage - 1)];
            std::vector<int> dec(nodes.size());
            for (std::size_t ip = 0; ip < nodes.size(); ++ip) {
                EnvState state;
                state.t = stage;
                state.price = nodes[ip];
                state.installed = 0;
                dec[ip] = policy(state).add;
            }
            ThresholdComparison th;
            th.stage = stage;
            th.dp_threshold = dp.price_threshold(stage, 0);
            th.policy_threshold = threshold_from_scan(nodes, dec);
            th.delta = th.policy_threshold - th.dp_threshold;
            report.thresholds.push_back(th);
            if (!(std::abs(th.delta) <= options.threshold_tol)) report.thresholds_pass = false;
        }
    } else {
        report.thresholds_pass = true;  // no scalar thresholds on the demand variant
    }

    const PairedEval eval =
        paired_compare(policy, dp.policy(), params, options.replications, options.seed);
    report.policy_profit = eval.mean_a;
    report.dp_profit = eval.mean_b;
    report.profit_gap = std::abs(eval.mean_diff);
    if (report.dp_profit != 0.0) {
        report.percent_gap = report.profit_gap / std::abs(report.dp_profit);
    } else {
        report.percent_gap = report.profit_gap == 0.0
                                 ? 0.0
                                 : std::numeric_limits<double>::infinity();
    }
    report.profit_pass = report.percent_gap <= options.profit_tol;
    return report;
}

}  // namespace capexrl
