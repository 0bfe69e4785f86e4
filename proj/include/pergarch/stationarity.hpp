#pragma once

#include "pergarch/cogarch.hpp"
#include "pergarch/random.hpp"
#include "pergarch/semi_levy.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pergarch {

struct SpectralReport {
    Eigen::VectorXcd eigenvalues;
    double eta = 0.0;
    bool all_negative = false;
};

/// Eigenvalues of B (sorted by decreasing real part) and η = max Re.
SpectralReport spectral_check(const Eigen::MatrixXd& B);

enum class NormIndex { One, Two, Infinity };

NormIndex parse_norm_index(std::string_view text);
std::string to_string(NormIndex r);

/// Induced r-norm of a complex matrix (max column sum, spectral norm, max row sum).
double induced_norm(const Eigen::MatrixXcd& m, NormIndex r);
double vector_norm(const Eigen::VectorXcd& v, NormIndex r);

/// ‖A‖_{B,r} = ‖P⁻¹AP‖_r. Throws UnsupportedError if B is not diagonalizable.
double b_norm(const Eigen::MatrixXd& A, const CogarchParams& params, NormIndex r);
/// ‖x‖_{B,r} = ‖P⁻¹x‖_r.
double b_vector_norm(const Eigen::VectorXd& x, const CogarchParams& params, NormIndex r);

struct SeasonCondition {
    std::size_t season = 0;
    /// expected arrivals of this season per period, Λ(A_j)
    double mass = 0.0;
    /// E_j log(1 + c·Z²)
    double log_moment = 0.0;
    /// RHS − LHS of the period-window inequality for windows starting in this season
    double margin = 0.0;
    /// min over the season's grid points of λ(t)·(−ητ/Λ(τ) − E_j log(1 + cZ²))
    double local_margin = 0.0;
};

/**
 * @brief Moment condition on the driver that makes the random recurrence contractive.
 *
 * The measure in the inequality is the jump measure accumulated over a period
 * window (t, t+τ]. Its total mass is Λ(τ) and the left-hand side is
 * Σ_j Λ(A_j)·E_j log(1 + c·Z²), with c = ‖P⁻¹eaᵀP‖_r; the right-hand side is
 * −η·τ. The window value does not depend on t, so each season reports the same
 * margin. The pointwise analogue with ν_t(ℝ) = λ(t) is reported per season in
 * `local_margin` and summarized by `locally_satisfied`.
 */
struct Condition32Report {
    NormIndex r = NormIndex::Two;
    double c = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool satisfied = false;
    bool locally_satisfied = false;
    std::vector<SeasonCondition> seasons;
};

Condition32Report check_condition_3_2(const SemiLevyModel& model, const CogarchParams& params,
                                      NormIndex r = NormIndex::Two, std::size_t grid_points = 1200);

struct LyapunovEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t periods = 0;
    std::size_t replicates = 0;
};

/// Mean over replicates of (1/k)·log‖𝔍_{(k−1)τ,kτ}⋯𝔍_{0,τ}‖_{B,r}.
LyapunovEstimate lyapunov_mc(const SemiLevyModel& model, const CogarchParams& params, std::size_t k_periods,
                             std::size_t replicates, const RandomStream& rng, NormIndex r = NormIndex::Two,
                             unsigned threads = 1);

/**
 * @brief Sampled check of aᵀe^{Bt}e ≥ 0 and aᵀe^{Bt}Y₀ ≥ γ on [0, t_max].
 *
 * When γ is not supplied, the largest admissible value min(min_t aᵀe^{Bt}Y₀, 0)
 * is certified and the second condition holds iff it is at least −α₀.
 */
struct NonnegativityReport {
    bool eq35 = false;
    bool eq36 = false;
    double min_35 = 0.0;
    double argmin_35 = 0.0;
    double min_36 = 0.0;
    double argmin_36 = 0.0;
    double gamma = 0.0;
    bool gamma_supplied = false;
    double t_max = 0.0;
    std::size_t grid_points = 0;
};

NonnegativityReport check_nonnegativity(const CogarchParams& params, const Eigen::VectorXd& y0,
                                        std::optional<double> gamma = std::nullopt,
                                        std::optional<double> t_max = std::nullopt, std::size_t grid_points = 10000);

struct StabilityReport {
    SpectralReport spectral;
    Condition32Report condition;
    std::optional<LyapunovEstimate> lyapunov;
    NonnegativityReport nonneg;
    /// all eigenvalues in the open left half-plane and the moment condition holds
    bool stationary = false;
};

StabilityReport assess_stability(const SemiLevyModel& model, const CogarchParams& params, const Eigen::VectorXd& y0,
                                 NormIndex r = NormIndex::Two);

}  // namespace pergarch
