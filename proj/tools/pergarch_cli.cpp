// Command-line front end: pergarch <subcommand> [--config PATH] [--seed U64] [--out DIR] [--threads N]

#include "pergarch/config.hpp"
#include "pergarch/errors.hpp"
#include "pergarch/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("PERGARCH_SEED");
    if (raw == nullptr || *raw == '\0') {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(raw, &used, 10);
        if (used != std::string(raw).size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw pergarch::ConfigError("PERGARCH_SEED must be an unsigned 64-bit integer");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic COGARCH simulation and periodically-correlated structure analysis"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    pergarch::PipelineOptions opt;
    std::string out_dir = ".";
    bool print_config = false;

    app.add_option("--config", config_path, "Experiment file (JSON); defaults to the built-in example");
    app.add_option("--seed", seed, "Master seed; overrides PERGARCH_SEED and the config");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--threads", opt.threads, "Worker threads for Monte Carlo stages")->check(CLI::PositiveNumber);
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");

    auto* simulate = app.add_subcommand("simulate", "Simulate one path and write path, jump, grid and increment CSVs");
    auto* check = app.add_subcommand("check", "Stationarity and volatility non-negativity report");

    auto* moments = app.add_subcommand("moments", "Monte Carlo moment estimates");
    moments->set_help_flag("--help", "Print this help message and exit");
    moments->add_option("--replicates", opt.replicates, "Replicate paths (>= 1000)");
    moments->add_option("--t", opt.t, "Time t");
    moments->add_option("--h", opt.h, "Lag h");
    moments->add_option("--p", opt.p, "Increment length p");
    moments->add_flag("--center-jumps", opt.center_jumps, "Remove season means from the jump laws");
    moments->add_option("--squared-cov-replicates", opt.squared_cov_replicates,
                        "Paths for the squared-increment covariance check (0 skips it)");

    auto* pctest = app.add_subcommand("pctest", "Squared-coherence test for periodic correlation");
    std::string input;
    std::string column;
    std::size_t M = 0;
    double alpha = 0.0;
    std::size_t removal = 0;
    pctest->add_option("--input", input, "Series CSV (column 'increment' or the last column)");
    pctest->add_option("--column", column, "Column to read from the input");
    pctest->add_option("--M", M, "Smoothing window (even)");
    pctest->add_option("--alpha", alpha, "Type-I error level");
    pctest->add_option("--remove-periodic-mean", removal, "Remove the periodic mean with this period first");
    pctest->add_flag("--full-map", opt.full_map, "Also write the full coherence matrix");

    auto* reproduce = app.add_subcommand("reproduce-example", "Run the reference example end to end and assert it");
    reproduce->add_option("--seeds", opt.seeds, "Number of consecutive master seeds");

    CLI11_PARSE(app, argc, argv);

    try {
        pergarch::ExperimentConfig config =
            config_path.empty() ? pergarch::builtin_example_config() : pergarch::load_config(config_path);
        if (seed) {
            config.run.seed = *seed;
        } else if (auto env = seed_from_env()) {
            config.run.seed = *env;
        }
        if (print_config) {
            std::cout << pergarch::to_json(config).dump(2) << '\n';
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << "error: a subcommand is required (simulate, check, moments, pctest, reproduce-example)\n";
            return 2;
        }
        opt.out_dir = out_dir;
        if (!input.empty()) {
            opt.input = input;
        }
        if (!column.empty()) {
            opt.column = column;
        }
        if (M != 0) {
            opt.M = M;
        }
        if (alpha != 0.0) {
            opt.alpha = alpha;
        }
        if (removal != 0) {
            opt.remove_periodic_mean = removal;
        }

        pergarch::Subcommand cmd = pergarch::Subcommand::ReproduceExample;
        if (simulate->parsed()) {
            cmd = pergarch::Subcommand::Simulate;
        } else if (check->parsed()) {
            cmd = pergarch::Subcommand::Check;
        } else if (moments->parsed()) {
            cmd = pergarch::Subcommand::Moments;
        } else if (pctest->parsed()) {
            cmd = pergarch::Subcommand::PcTest;
        } else if (reproduce->parsed()) {
            cmd = pergarch::Subcommand::ReproduceExample;
        }

        const pergarch::PipelineResult result = pergarch::run_pipeline(config, cmd, opt);
        for (const auto& w : result.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        std::cout << result.report.dump(2) << '\n';
        return result.status;
    } catch (const pergarch::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
