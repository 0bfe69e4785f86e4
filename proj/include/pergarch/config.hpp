#pragma once

#include "pergarch/cogarch.hpp"
#include "pergarch/semi_levy.hpp"
#include "pergarch/stationarity.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pergarch {

struct IntensityConfig {
    std::string form = "cosine";  // cosine | piecewise | constant
    double a = 0.0;
    double b = 0.0;
    double tau = 1.0;
    double rate = 0.0;               // constant form
    std::vector<double> breaks;      // piecewise form
    std::vector<double> rates;       // piecewise form
    bool operator==(const IntensityConfig&) const = default;
};

struct LawConfig {
    std::string type = "normal";
    double mu = 0.0;
    double sigma2 = 0.0;
    bool operator==(const LawConfig&) const = default;
};

struct DriftConfig {
    std::string form = "zero";  // zero | sine
    double amplitude = 0.0;
    bool operator==(const DriftConfig&) const = default;
};

struct CogarchConfig {
    int p = 1;
    int q = 1;
    double alpha0 = 1.0;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> y0;  // empty means the zero vector
    bool operator==(const CogarchConfig&) const = default;
};

struct RunConfig {
    double horizon_periods = 1.0;
    double h = 1.0;
    std::uint64_t seed = 1;
    std::size_t replicates = 2000;
    bool center_jumps = false;
    bool operator==(const RunConfig&) const = default;
};

struct AnalysisConfig {
    std::size_t M = 2;
    double alpha = 0.05;
    std::optional<std::size_t> expected_period;
    bool remove_periodic_mean = true;
    std::string norm = "2";
    std::size_t lyapunov_periods = 20;
    std::size_t lyapunov_replicates = 200;
    bool operator==(const AnalysisConfig&) const = default;
};

/// Parsed experiment file. Unknown keys are rejected.
struct ExperimentConfig {
    IntensityConfig intensity;
    std::vector<double> season_lengths;
    std::vector<LawConfig> laws;
    DriftConfig drift;
    CogarchConfig cogarch;
    RunConfig run;
    AnalysisConfig analysis;

    bool operator==(const ExperimentConfig&) const = default;

    [[nodiscard]] double tau() const noexcept { return intensity.tau; }
    [[nodiscard]] double horizon() const noexcept { return run.horizon_periods * intensity.tau; }
    /// Driver model; with `run.center_jumps` every season law has its mean removed.
    [[nodiscard]] SemiLevyModel model() const;
    [[nodiscard]] SemiLevyModel model(bool centered) const;
    [[nodiscard]] CogarchParams params() const;
    [[nodiscard]] Eigen::VectorXd y0() const;
    [[nodiscard]] NormIndex norm() const;
    /// Period used for periodic-mean removal, or nullopt when disabled.
    [[nodiscard]] std::optional<std::size_t> removal_period() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// 16 hex digits of FNV-1a over the canonical JSON text.
std::string config_digest(const ExperimentConfig& config);

ExperimentConfig builtin_example_config();

}  // namespace pergarch
