#pragma once

#include "pergarch/cogarch.hpp"
#include "pergarch/config.hpp"
#include "pergarch/pc_test.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pergarch {

enum class Subcommand { Simulate, Check, Moments, PcTest, ReproduceExample };

Subcommand parse_subcommand(std::string_view name);
std::string to_string(Subcommand cmd);

struct PipelineOptions {
    std::filesystem::path out_dir = ".";
    unsigned threads = 1;

    // pctest
    std::optional<std::filesystem::path> input;
    std::optional<std::string> column;
    std::optional<std::size_t> M;
    std::optional<double> alpha;
    std::optional<std::size_t> remove_periodic_mean;
    bool full_map = false;

    // moments
    std::optional<std::size_t> replicates;
    double t = 0.0;
    double h = 0.0;
    double p = 1.0;
    bool center_jumps = false;
    std::size_t squared_cov_replicates = 0;

    // reproduce-example
    std::size_t seeds = 1;
};

struct PipelineResult {
    int status = 0;
    nlohmann::json report;
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

/// One simulated path of the configured model with its coherence analysis.
struct ExampleRun {
    CogarchPath path;
    GridSamples grid;
    std::vector<double> increments;
    CoherenceReport pc;
};

/// Simulate with master seed `seed`, sample on the grid, take anchored unit
/// increments and run the coherence test with the configured window and level.
ExampleRun run_example_once(const ExperimentConfig& config, std::uint64_t seed, bool collect_exceedances = false);

/// Run a subcommand, writing its artifacts below `options.out_dir`.
/// Exit status: 0 success, 3 when `check` or `reproduce-example` finds a failed condition.
PipelineResult run_pipeline(const ExperimentConfig& config, Subcommand cmd, const PipelineOptions& options);

}  // namespace pergarch
