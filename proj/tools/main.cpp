#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capexrl/config.hpp"
#include "capexrl/dqn.hpp"
#include "capexrl/env.hpp"
#include "capexrl/errors.hpp"
#include "capexrl/manifest.hpp"
#include "capexrl/oracle.hpp"
#include "capexrl/version.hpp"

namespace fs = std::filesystem;
using namespace capexrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 2;
constexpr int kExitNumericError = 3;

std::string default_out_root() {
    if (const char* env = std::getenv("CAPEXRL_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "capexrl_runs";
}

fs::path prepare_out_dir(const std::string& explicit_out, const std::string& kind,
                         const std::string& digest, std::uint64_t seed) {
    fs::path dir;
    if (!explicit_out.empty()) {
        dir = explicit_out;
    } else {
        dir = fs::path(default_out_root()) /
              (kind + "-" + digest.substr(0, 8) + "-seed" + std::to_string(seed));
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out", "cannot create output directory " + dir.string());
    return dir;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("out", "cannot write " + path.string());
    out << text;
}

struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

GridAxis parse_axis(const std::string& spec) {
    GridAxis axis;
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw ConfigError("grid", "grid axis must be lo:hi:count, got '" + spec + "'");
    }
    try {
        axis.lo = std::stod(spec.substr(0, c1));
        axis.hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        axis.count = std::stoi(spec.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ConfigError("grid", "grid axis must be lo:hi:count, got '" + spec + "'");
    }
    if (axis.count < 1 || !(axis.hi >= axis.lo)) {
        throw ConfigError("grid", "grid axis must satisfy lo <= hi, count >= 1: '" + spec + "'");
    }
    return axis;
}

std::vector<double> linspace(const GridAxis& axis) {
    std::vector<double> out(static_cast<std::size_t>(axis.count));
    if (axis.count == 1) {
        out[0] = axis.lo;
        return out;
    }
    for (int i = 0; i < axis.count; ++i) {
        out[static_cast<std::size_t>(i)] = axis.lo + (axis.hi - axis.lo) * i / (axis.count - 1);
    }
    return out;
}

ConfigFile load_config(const std::string& path, const std::vector<std::string>& overrides,
                       std::optional<long long> episodes, std::optional<std::uint64_t> seed) {
    ConfigFile cfg = ConfigFile::parse_file(path);
    for (const auto& spec : overrides) cfg.apply_override(spec);
    if (episodes) cfg.set("train", "episodes", std::to_string(*episodes));
    if (seed) cfg.set("train", "seed", std::to_string(*seed));
    return cfg;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              std::optional<long long> episodes, std::optional<std::uint64_t> seed,
              const std::string& out) {
    const ConfigFile cfg = load_config(config_path, overrides, episodes, seed);
    const std::string digest = cfg.digest();
    const EnvParams params = EnvParams::from_config(cfg);
    const TrainingConfig train_cfg = TrainingConfig::from_config(cfg);

    const fs::path dir = prepare_out_dir(out, "train", digest, train_cfg.seed);
    RunManifest manifest;
    manifest.config_digest = digest;
    manifest.seed = train_cfg.seed;
    manifest.version_tag = kVersionTag;
    manifest.started_at = iso8601_utc_now();

    CapacityEnv env(params, train_cfg.seed);
    TrainResult result = [&] {
        try {
            return train(env, train_cfg, digest);
        } catch (const TrainingDivergence& e) {
            const fs::path crash = dir / "checkpoint_diverged.txt";
            e.snapshot().save_file(crash.string());
            std::cerr << "numeric failure: " << e.what() << "\n"
                      << "last checkpoint: " << crash.string() << "\n";
            std::exit(kExitNumericError);
        }
    }();

    const fs::path ckpt_path = dir / "checkpoint.txt";
    const fs::path log_path = dir / "training_log.csv";
    const fs::path cfg_path = dir / "config_resolved.cfg";
    result.artifact.save_file(ckpt_path.string());
    {
        std::ofstream log(log_path);
        if (!log) throw ConfigError("out", "cannot write " + log_path.string());
        result.log.write_csv(log, digest);
    }
    write_text_file(cfg_path, cfg.canonical());

    manifest.finished_at = iso8601_utc_now();
    manifest.artifact_paths = {ckpt_path.string(), log_path.string(), cfg_path.string()};
    manifest.save_file((dir / "manifest.txt").string());

    std::cout << "trained " << train_cfg.episodes << " episodes (seed " << train_cfg.seed
              << ", config " << digest << ")\n"
              << "checkpoint:   " << ckpt_path.string() << '\n'
              << "training log: " << log_path.string() << '\n'
              << "manifest:     " << (dir / "manifest.txt").string() << '\n';
    if (!result.log.rows.empty()) {
        std::cout << "final 100-episode mean return: " << result.log.rows.back().moving_avg_100
                  << '\n';
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& ckpt_path, long long replications, std::uint64_t seed,
                 int workers, const std::string& out) {
    const PolicyArtifact artifact = PolicyArtifact::load_file(ckpt_path);
    const std::string digest = artifact.checkpoint().config_digest;

    const EvalReport report = evaluate_policy(
        [&artifact](const EnvState& s) { return artifact.greedy_decision(s); },
        artifact.env_params(), replications, seed, nullptr, workers);

    report.print(std::cout);
    if (replications == 1) {
        std::cout << "(single replication: std error reported as 0 by convention)\n";
    }

    const fs::path dir = prepare_out_dir(out, "evaluate", digest, seed);
    const fs::path csv = dir / "eval_report.csv";
    std::ofstream stream(csv);
    if (!stream) throw ConfigError("out", "cannot write " + csv.string());
    report.write_csv(stream, digest);
    std::cout << "report: " << csv.string() << '\n';
    return kExitOk;
}

int cmd_oracle(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& mode, long long samples, std::uint64_t seed, int price_nodes,
               int demand_nodes, const std::string& out) {
    const ConfigFile cfg = load_config(config_path, overrides, std::nullopt, std::nullopt);
    const std::string digest = cfg.digest();
    const EnvParams params = EnvParams::from_config(cfg);
    const fs::path dir = prepare_out_dir(out, "oracle-" + mode, digest, seed);

    if (mode == "closed-form") {
        if (params.variant != Variant::price_only) {
            throw ConfigError("mode", "closed-form mode applies to the price-only variant");
        }
        const double th =
            two_stage_threshold(params.op_cost, params.inv_cost, params.unit_output);
        std::cout.precision(10);
        std::cout << "final-stage invest threshold (c_om + c_inv) / u = " << th << '\n';
        std::ostringstream text;
        text.precision(17);
        text << "# config_digest=" << digest << "\nthreshold\n" << th << '\n';
        write_text_file(dir / "closed_form.csv", text.str());
        std::cout << "report: " << (dir / "closed_form.csv").string() << '\n';
        return kExitOk;
    }
    if (mode == "dp") {
        const LatticeSpec lattice = build_lattice(params, price_nodes, demand_nodes);
        const DPSolution dp = backward_induction(lattice, params);
        std::cout.precision(10);
        std::cout << "dp expected profit V(1) = " << dp.root_value() << '\n';
        if (!params.demand_enabled()) {
            for (int stage = 2; stage <= params.horizon; ++stage) {
                std::cout << "stage " << stage << " invest threshold (installed 0): "
                          << dp.price_threshold(stage, 0) << '\n';
            }
        }
        const fs::path csv = dir / "dp_solution.csv";
        std::ofstream stream(csv);
        if (!stream) throw ConfigError("out", "cannot write " + csv.string());
        dp.export_csv(stream, digest);
        std::cout << "report: " << csv.string() << '\n';
        return kExitOk;
    }
    if (mode == "stage2-mc") {
        const double boundary = stage2_boundary_mc(params, samples, seed);
        std::cout.precision(10);
        std::cout << "stage-2 invest boundary (" << samples << " samples): " << boundary << '\n';
        std::ostringstream text;
        text.precision(17);
        text << "# config_digest=" << digest << "\nboundary,samples,seed\n"
             << boundary << ',' << samples << ',' << seed << '\n';
        write_text_file(dir / "stage2_mc.csv", text.str());
        std::cout << "report: " << (dir / "stage2_mc.csv").string() << '\n';
        return kExitOk;
    }
    throw ConfigError("mode", "unknown oracle mode '" + mode +
                                  "' (expected closed-form, dp or stage2-mc)");
}

int cmd_policy_map(const std::string& ckpt_path, int stage, const std::string& grid,
                   int installed, const std::string& out) {
    const PolicyArtifact artifact = PolicyArtifact::load_file(ckpt_path);
    const std::string digest = artifact.checkpoint().config_digest;
    const EnvParams& params = artifact.env_params();

    std::vector<double> prices;
    std::vector<double> demands;
    const auto comma = grid.find(',');
    prices = linspace(parse_axis(grid.substr(0, comma)));
    if (comma != std::string::npos) {
        demands = linspace(parse_axis(grid.substr(comma + 1)));
    }

    const PolicyMap map = extract_policy_map(
        [&artifact](const EnvState& s) { return artifact.greedy_decision(s); }, params, stage,
        prices, demands, installed);

    const fs::path dir = prepare_out_dir(out, "policy-map", digest, 0);
    const fs::path csv = dir / "policy_map.csv";
    std::ofstream stream(csv);
    if (!stream) throw ConfigError("out", "cannot write " + csv.string());
    map.write_csv(stream, digest);
    std::cout << "policy map (" << map.prices.size() << " x "
              << std::max<std::size_t>(1, map.demands.size()) << " points): " << csv.string()
              << '\n';
    return kExitOk;
}

int cmd_compare(const std::string& ckpt_path, const std::string& config_path,
                const std::vector<std::string>& overrides, long long replications,
                std::uint64_t seed, int price_nodes, int demand_nodes, const std::string& out) {
    const PolicyArtifact artifact = PolicyArtifact::load_file(ckpt_path);
    const ConfigFile cfg = load_config(config_path, overrides, std::nullopt, std::nullopt);
    const std::string digest = cfg.digest();
    const EnvParams params = EnvParams::from_config(cfg);
    if (!artifact.checkpoint().config_digest.empty() &&
        artifact.checkpoint().config_digest != digest) {
        std::cerr << "warning: checkpoint config digest " << artifact.checkpoint().config_digest
                  << " differs from " << digest << "; comparing against the given config\n";
    }

    CompareOptions options;
    options.replications = replications;
    options.seed = seed;
    options.price_nodes = price_nodes;
    options.demand_nodes = demand_nodes;

    const CompareReport report = compare_policy_to_dp(
        [&artifact](const EnvState& s) { return artifact.greedy_decision(s); }, params, options);
    report.print(std::cout);

    const fs::path dir = prepare_out_dir(out, "compare", digest, seed);
    const fs::path csv = dir / "compare_report.csv";
    std::ofstream stream(csv);
    if (!stream) throw ConfigError("out", "cannot write " + csv.string());
    report.write_csv(stream, digest);
    std::cout << "report: " << csv.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capexrl: deep Q-learning for multi-stage capacity expansion, with "
                 "closed-form, Monte Carlo and dynamic-programming verification oracles"};
    app.require_subcommand(1);

    std::string config_path;
    std::string ckpt_path;
    std::string out;
    std::string mode = "closed-form";
    std::string grid = "0.05:0.2:200";
    std::vector<std::string> overrides;
    std::optional<long long> episodes_flag;
    std::optional<std::uint64_t> seed_flag;
    long long replications = 100000;
    std::uint64_t seed = 1;
    long long samples = 1000000;
    int stage = 2;
    int installed = 0;
    int price_nodes = 400;
    int demand_nodes = 200;
    int workers = 0;

    auto* train_cmd = app.add_subcommand("train", "train a DQN policy from a config profile");
    train_cmd->add_option("--config", config_path, "config profile")->required();
    train_cmd->add_option("--episodes", episodes_flag, "override train.episodes");
    train_cmd->add_option("--seed", seed_flag, "override train.seed");
    train_cmd->add_option("--set", overrides, "override section.key=value (repeatable)");
    train_cmd->add_option("--out", out, "output directory (default under $CAPEXRL_OUT)");

    auto* eval_cmd =
        app.add_subcommand("evaluate", "Monte Carlo evaluation of a trained policy");
    eval_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    eval_cmd->add_option("--replications,-M", replications, "rollout count");
    eval_cmd->add_option("--seed", seed, "evaluation seed");
    eval_cmd->add_option("--workers", workers, "worker threads (0 = auto)");
    eval_cmd->add_option("--out", out, "output directory");

    auto* oracle_cmd = app.add_subcommand("oracle", "ground-truth solvers for a config");
    oracle_cmd->add_option("--config", config_path, "config profile")->required();
    oracle_cmd->add_option("--mode", mode, "closed-form | dp | stage2-mc")->required();
    oracle_cmd->add_option("--set", overrides, "override section.key=value (repeatable)");
    oracle_cmd->add_option("--samples", samples, "stage2-mc sample count");
    oracle_cmd->add_option("--seed", seed, "stage2-mc seed");
    oracle_cmd->add_option("--price-nodes", price_nodes, "dp lattice price nodes per stage");
    oracle_cmd->add_option("--demand-nodes", demand_nodes, "dp lattice demand nodes per stage");
    oracle_cmd->add_option("--out", out, "output directory");

    auto* map_cmd =
        app.add_subcommand("policy-map", "greedy decision surface of a trained policy");
    map_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    map_cmd->add_option("--stage", stage, "stage to map")->required();
    map_cmd->add_option("--grid", grid, "price axis lo:hi:n, optionally ,demand lo:hi:n");
    map_cmd->add_option("--installed", installed, "installed capacity of the mapped states");
    map_cmd->add_option("--out", out, "output directory");

    auto* compare_cmd =
        app.add_subcommand("compare", "policy vs dynamic-programming oracle report");
    compare_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    compare_cmd->add_option("--config", config_path, "config profile")->required();
    compare_cmd->add_option("--set", overrides, "override section.key=value (repeatable)");
    compare_cmd->add_option("--replications,-M", replications,
                            "rollout count for the profit gap");
    compare_cmd->add_option("--seed", seed, "evaluation seed");
    compare_cmd->add_option("--price-nodes", price_nodes, "dp lattice price nodes per stage");
    compare_cmd->add_option("--demand-nodes", demand_nodes, "dp lattice demand nodes per stage");
    compare_cmd->add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUserError;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(config_path, overrides, episodes_flag, seed_flag, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_evaluate(ckpt_path, replications, seed, workers, out);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle(config_path, overrides, mode, samples, seed, price_nodes,
                              demand_nodes, out);
        }
        if (map_cmd->parsed()) {
            return cmd_policy_map(ckpt_path, stage, grid, installed, out);
        }
        if (compare_cmd->parsed()) {
            return cmd_compare(ckpt_path, config_path, overrides, replications, seed,
                               price_nodes, demand_nodes, out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error";
        if (!e.key().empty()) std::cerr << " (key '" << e.key() << "')";
        std::cerr << ": " << e.what() << '\n';
        return kExitUserError;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumericError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUserError;
    }
    return kExitOk;
}
