#pragma once

#include "pergarch/semi_levy.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace pergarch {

/// q×q companion matrix with superdiagonal ones and last row (−β_q, …, −β_1).
Eigen::MatrixXd companion_matrix(const Eigen::VectorXd& beta);

/// e^{Bt} by Padé scaling-and-squaring.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& B, double t);

/**
 * @brief Parameters of an SS-COGARCH(p,q) model together with the spectral
 * data of its companion matrix.
 *
 * The eigenvector matrix P is the Vandermonde matrix with columns
 * (1, η_i, …, η_i^{q−1}), which diagonalizes B whenever the eigenvalues are
 * distinct. Eigenvalues are sorted by decreasing real part, then decreasing
 * imaginary part.
 */
struct CogarchParams {
    int p = 1;
    int q = 1;
    double alpha0 = 1.0;
    Eigen::VectorXd a;     // length q, zero-padded beyond p
    Eigen::VectorXd beta;  // length q
    Eigen::MatrixXd B;
    Eigen::VectorXd e;     // last standard basis vector

    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd P;
    Eigen::MatrixXcd P_inv;
    double eta = 0.0;
    double p_condition = 0.0;
    bool diagonalizable = false;
    /// all Re(η_i) < 0 and B invertible
    bool stationary_precondition = false;

    /// Validates q ≥ p ≥ 1, α_p ≠ 0, β_q ≠ 0, α₀ > 0. With `allow_degenerate`
    /// the α_p ≠ 0 requirement is dropped (useful for a = 0 reference models).
    static CogarchParams make(double alpha0, const std::vector<double>& alpha, const std::vector<double>& beta,
                              bool allow_degenerate = false);

    [[nodiscard]] Eigen::MatrixXd propagator(double dt) const { return matrix_exponential(B, dt); }
    /// Re(P·e^{Δ dt}·P⁻¹); requires `diagonalizable`.
    [[nodiscard]] Eigen::MatrixXd spectral_propagator(double dt) const;
    /// Multiply the rank-one jump factor (I + z²eaᵀ) onto a matrix from the left.
    void apply_jump_factor(Eigen::MatrixXd& m, double z2) const;
};

struct JumpUpdate {
    Eigen::VectorXd y;
    double v;
};

/// W = e^{BΔt}Y_prev, V = α₀ + aᵀW, Y_new = W + e·V·Z².
JumpUpdate state_update_at_jump(const Eigen::VectorXd& y_prev, double dt, double z, const CogarchParams& params);

/// Exact (Y, V, G) at the arrival times of a driver path.
struct CogarchPath {
    double horizon = 0.0;
    Eigen::VectorXd y0;
    std::vector<double> times;
    std::vector<double> jumps;
    std::vector<Eigen::VectorXd> states;  // post-jump Y
    std::vector<double> volatility;       // V at each arrival (left limit)
    std::vector<double> log_price;        // G at each arrival
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

/// Throws IntegrityError when a volatility value is negative.
CogarchPath simulate(const CogarchParams& params, const SemiLevyPath& path, const Eigen::VectorXd& y0);

/// Y_t for 0 ≤ t ≤ horizon, right-continuous at arrivals.
Eigen::VectorXd state_at(const CogarchPath& path, const CogarchParams& params, double t);
/// G_t, the log-price at the last arrival not after t (0 before the first arrival).
double log_price_at(const CogarchPath& path, double t);

struct GridSamples {
    double h = 1.0;
    std::vector<double> t;  // ih, i = 1..⌊T/h⌋
    std::vector<double> v;
    std::vector<double> g;
};

/// Left-limit volatility and log-price on the grid ih, i = 1..⌊T/h⌋.
GridSamples sample_grid(const CogarchPath& path, const CogarchParams& params, double h);

/// x_{i+lag} − x_i.
std::vector<double> increments(const std::vector<double>& series, std::size_t lag);

/// Unit-lag increments of the grid log-price anchored at G_0 = 0 (one value per grid sample).
std::vector<double> grid_increments(const GridSamples& grid);

/// (𝔍, 𝔎) with Y_t = 𝔍·Y_s + 𝔎 over (s, t].
struct TransitionPair {
    Eigen::MatrixXd J;
    Eigen::VectorXd K;
    double s = 0.0;
    double t = 0.0;
};

/// Build the pair from the arrivals of an explicit segment; every arrival must lie in (s, t].
TransitionPair transition_pair(const CogarchParams& params, const std::vector<double>& arrivals,
                               const std::vector<double>& jumps, double s, double t);
/// Build the pair from the arrivals of `path` that fall in (s, t].
TransitionPair transition_pair(const CogarchParams& params, const SemiLevyPath& path, double s, double t);

}  // namespace pergarch
