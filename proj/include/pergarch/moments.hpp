#pragma once

#include "pergarch/cogarch.hpp"
#include "pergarch/random.hpp"
#include "pergarch/semi_levy.hpp"
#include "pergarch/stationarity.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace pergarch {

/// Per-batch Monte Carlo means of the transition pair over (0, s].
struct OperatorBatch {
    std::size_t count = 0;
    std::vector<Eigen::MatrixXd> J;  // one per grid point
    std::vector<Eigen::VectorXd> K;
    Eigen::MatrixXd JJ;  // E(𝔍⊗𝔍) at τ, q²×q²
    Eigen::MatrixXd KJ;  // E(𝔎⊗𝔍) at τ, q²×q
    Eigen::MatrixXd JK;  // E(𝔍⊗𝔎) at τ, q²×q
    Eigen::MatrixXd KK;  // E(𝔎𝔎ᵀ) at τ, q×q
};

/**
 * @brief Monte Carlo estimates of the period operators of the random recurrence.
 *
 * Replicates are split into contiguous batches. Pooled values are the
 * count-weighted average of the batch means; standard errors are computed from
 * the spread of batch means, which also gives standard errors for nonlinear
 * functionals (see `batch_view`).
 */
struct PeriodOperators {
    int q = 0;
    double tau = 0.0;
    std::vector<double> s_grid;  // sorted, s_grid.front() = 0, s_grid.back() = τ
    std::size_t replicates = 0;

    std::vector<Eigen::MatrixXd> J;
    std::vector<Eigen::VectorXd> K;
    std::vector<Eigen::MatrixXd> J_se;
    std::vector<Eigen::VectorXd> K_se;
    Eigen::MatrixXd JJ, KJ, JK, KK;
    Eigen::MatrixXd JJ_se, KJ_se, JK_se, KK_se;

    std::vector<OperatorBatch> batches;

    [[nodiscard]] const Eigen::MatrixXd& J_tau() const { return J.back(); }
    [[nodiscard]] const Eigen::VectorXd& K_tau() const { return K.back(); }
    /// Operators built from a single batch (same grid, no standard errors).
    [[nodiscard]] PeriodOperators batch_view(std::size_t b) const;
    /// Interpolated E(𝔍_{0,s}), E(𝔎_{0,s}) for s ∈ [0, τ].
    [[nodiscard]] Eigen::MatrixXd J_at(double s) const;
    [[nodiscard]] Eigen::VectorXd K_at(double s) const;
};

/// Uniform grid of `steps` cells on [0, τ] merged with the season boundaries.
std::vector<double> default_s_grid(const SemiLevyModel& model, std::size_t steps = 240);

PeriodOperators estimate_period_operators(const SemiLevyModel& model, const CogarchParams& params,
                                          std::size_t replicates, const std::vector<double>& s_grid,
                                          const RandomStream& rng, unsigned threads = 1, std::size_t batches = 20);

/// Solves (I − E𝔍_{0,τ})u = E𝔎_{0,τ}.
Eigen::VectorXd stationary_mean(const PeriodOperators& ops);
/// Solves the vectorized second-moment fixed point and reshapes to q×q.
Eigen::MatrixXd stationary_second_moment(const PeriodOperators& ops);

struct VectorEstimate {
    Eigen::VectorXd value;
    Eigen::VectorXd std_error;
};
struct MatrixEstimate {
    Eigen::MatrixXd value;
    Eigen::MatrixXd std_error;
};
struct ScalarEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Batch-spread standard errors for the fixed-point solutions.
VectorEstimate stationary_mean_estimate(const PeriodOperators& ops);
MatrixEstimate stationary_second_moment_estimate(const PeriodOperators& ops);

/// E(Y_t) = E(𝔍_{0,t₁})E(U) + E(𝔎_{0,t₁}), t₁ = t mod τ.
Eigen::VectorXd state_mean(const PeriodOperators& ops, double t);
Eigen::VectorXd state_mean(const PeriodOperators& ops, const Eigen::VectorXd& u, double t);
/// E(V_t) = α₀ + aᵀE(Y_t).
double volatility_mean(const PeriodOperators& ops, const CogarchParams& params, double t);

struct StateCovariance {
    /// Cov(Y_{t+h}, Y_t)
    MatrixEstimate cov;
    /// Cov(V_{t+h}, V_t) = aᵀ·cov·a
    ScalarEstimate volatility_cov;
    long period_gap = 0;  // n − m
};

/**
 * @brief Stationary covariance of the state at lag h.
 *
 * With t in period m and t+h in period n, offsets t₁ and t₂: for n = m the
 * pair (Y_t, Y_{t+h}) is a functional of one period path, for n > m the
 * covariance is E(𝔍_{0,t₂})·E(𝔍_{0,τ})^{n−m−1}·Cov(Y_τ, Y_{t₁}). The
 * within-period covariances and E(𝔍_{0,t₂}) are estimated on fresh shared paths.
 */
StateCovariance state_cov(const PeriodOperators& ops, const SemiLevyModel& model, const CogarchParams& params,
                          double t, double h, std::size_t replicates, const RandomStream& rng, unsigned threads = 1);

struct IncrementMoments {
    double mean = 0.0;
    ScalarEstimate variance;
};

/// Mean and variance of G_{t+p} − G_t for a centered driver.
IncrementMoments increment_moments(const SemiLevyModel& model, const CogarchParams& params,
                                   const PeriodOperators& ops, double t, double p);

/// Empirical cov((G_t^{(p)})², (G_{t+h}^{(p)})²) and the same quantity shifted by one period.
struct SquaredIncrementCov {
    ScalarEstimate base;
    ScalarEstimate shifted;
    /// (base − shifted) / stderr of the paired difference
    double shift_z = 0.0;
    std::size_t replicates = 0;
};

SquaredIncrementCov squared_increment_cov_mc(const SemiLevyModel& model, const CogarchParams& params,
                                             const Eigen::VectorXd& y0, double t, double h, double p,
                                             std::size_t replicates, const RandomStream& rng,
                                             std::size_t burn_in_periods = 10, unsigned threads = 1);

/// Pathwise comparison of ‖Y_t‖_{B,r} with the scalar bounding process.
struct BoundingCheck {
    bool holds = true;
    double max_ratio = 0.0;  // max over checked times of ‖Y_t‖_{B,r} / Ỹ_t
    std::size_t points = 0;
};

/// Ỹ_t = J̃_{0,t}‖Y₀‖_{B,r} + K̃_{0,t} with J̃ = exp(ηt + Σ log(1 + cZ²)),
/// K̃ = α₀‖e‖_{B,r}·Π(1 + cZ²)·ΣZ²; checked at every arrival and on a grid of step h.
BoundingCheck bounding_process_check(const CogarchParams& params, const CogarchPath& path, NormIndex r,
                                     double h = 1.0);

}  // namespace pergarch
