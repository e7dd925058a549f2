#include <CLI11.hpp>

#include "adsbtrack/cli.hpp"

using namespace adsbtrack;

namespace {

config::RunConfig load_config(const std::string& path, std::uint64_t seed, bool seed_set) {
    config::RunConfig cfg = path.empty() ? config::RunConfig{} : config::RunConfig::load(path);
    if (seed_set) cfg.seed = seed;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV trajectory filtering from ADS-B data: IMM Kalman filtering with "
                 "recurrent-network noise adaptation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = ".";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (defaults used when omitted)");
        sub->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--out", out_dir, "output directory")->required();
    };

    auto* sim_cmd = app.add_subcommand("simulate", "generate a dataset of maneuvering-UAV tracks");
    add_common(sim_cmd);

    auto* filter_cmd = app.add_subcommand("filter", "filter one track file");
    std::string track_path;
    std::string params_arg = "fixed";
    filter_cmd->add_option("--track", track_path, "track file to filter")->required();
    filter_cmd->add_option("--params", params_arg, "'fixed' or a checkpoint path");
    add_common(filter_cmd);

    auto* train_cmd = app.add_subcommand("train", "train the noise network on a dataset");
    std::string data_dir;
    train_cmd->add_option("--data", data_dir, "dataset directory with manifest.json")->required();
    add_common(train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "compare estimate files against a track's truth");
    std::string truth_path;
    std::vector<std::string> est_args;
    std::string baseline = "raw";
    eval_cmd->add_option("--truth", truth_path, "track file providing ground truth")->required();
    eval_cmd->add_option("--est", est_args, "estimates file as name=path (repeatable)");
    eval_cmd->add_option("--baseline", baseline, "baseline method name (default: raw)");
    add_common(eval_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::kExitOk : cli::kExitConfig;
    }

    try {
        const config::RunConfig cfg = load_config(config_path, seed, seed_set);
        if (sim_cmd->parsed()) return cli::cmd_simulate(cfg, out_dir);
        if (filter_cmd->parsed()) return cli::cmd_filter(track_path, params_arg, cfg, out_dir);
        if (train_cmd->parsed()) return cli::cmd_train(data_dir, cfg, out_dir);
        if (eval_cmd->parsed()) {
            std::vector<std::pair<std::string, std::filesystem::path>> est;
            for (const auto& a : est_args) {
                const auto eq = a.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("--est expects name=path, got '" + a + "'");
                est.emplace_back(a.substr(0, eq), a.substr(eq + 1));
            }
            return cli::cmd_eval(truth_path, est, baseline, out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return cli::kExitDivergence;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cli::kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitData;
    }
    return cli::kExitOk;
}
