#include "pergarch/stationarity.hpp"

#include "pergarch/detail/parallel.hpp"
#include "pergarch/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pergarch {

SpectralReport spectral_check(const Eigen::MatrixXd& B) {
    if (B.rows() != B.cols() || B.rows() == 0) {
        throw std::domain_error("spectral_check requires a non-empty square matrix");
    }
    if (!B.allFinite()) {
        throw std::domain_error("spectral_check requires finite entries");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(B, false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue computation did not converge");
    }
    std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                         solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
        return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
    });
    SpectralReport out;
    out.eigenvalues = Eigen::Map<Eigen::VectorXcd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    out.eta = ev.front().real();
    out.all_negative = out.eta < 0.0;
    return out;
}

NormIndex parse_norm_index(std::string_view text) {
    if (text == "1") {
        return NormIndex::One;
    }
    if (text == "2") {
        return NormIndex::Two;
    }
    if (text == "inf" || text == "infinity" || text == "Inf") {
        return NormIndex::Infinity;
    }
    throw ConfigError("norm index must be 1, 2 or inf");
}

std::string to_string(NormIndex r) {
    switch (r) {
    case NormIndex::One:
        return "1";
    case NormIndex::Infinity:
        return "inf";
    case NormIndex::Two:
    default:
        return "2";
    }
}

double induced_norm(const Eigen::MatrixXcd& m, NormIndex r) {
    switch (r) {
    case NormIndex::One:
        return m.cwiseAbs().colwise().sum().maxCoeff();
    case NormIndex::Infinity:
        return m.cwiseAbs().rowwise().sum().maxCoeff();
    case NormIndex::Two:
    default: {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        return svd.singularValues()(0);
    }
    }
}

double vector_norm(const Eigen::VectorXcd& v, NormIndex r) {
    switch (r) {
    case NormIndex::One:
        return v.cwiseAbs().sum();
    case NormIndex::Infinity:
        return v.cwiseAbs().maxCoeff();
    case NormIndex::Two:
    default:
        return v.norm();
    }
}

namespace {

void require_diagonalizable(const CogarchParams& params) {
    if (!params.diagonalizable) {
        throw UnsupportedError("companion matrix is not diagonalizable (eigenvector matrix condition number " +
                               std::to_string(params.p_condition) + " >= 1e8); the B-norm is undefined");
    }
}

}  // namespace

double b_norm(const Eigen::MatrixXd& A, const CogarchParams& params, NormIndex r) {
    require_diagonalizable(params);
    const Eigen::MatrixXcd transformed = params.P_inv * A.cast<std::complex<double>>() * params.P;
    return induced_norm(transformed, r);
}

double b_vector_norm(const Eigen::VectorXd& x, const CogarchParams& params, NormIndex r) {
    require_diagonalizable(params);
    const Eigen::VectorXcd transformed = params.P_inv * x.cast<std::complex<double>>();
    return vector_norm(transformed, r);
}

Condition32Report check_condition_3_2(const SemiLevyModel& model, const CogarchParams& params, NormIndex r,
                                      std::size_t grid_points) {
    if (grid_points == 0) {
        throw std::domain_error("condition check needs a positive grid resolution");
    }
    Condition32Report out;
    out.r = r;
    out.c = b_norm(params.e * params.a.transpose(), params, r);

    const double tau = model.period();
    const double per_period = model.intensity.per_period();
    const auto& partition = model.partition;
    const auto& bounds = partition.boundaries();
    const double rhs = -params.eta * tau;

    out.seasons.resize(partition.size());
    double lhs = 0.0;
    for (std::size_t j = 0; j < partition.size(); ++j) {
        auto& sc = out.seasons[j];
        sc.season = j;
        sc.mass = model.intensity.cumulative(bounds[j + 1]) - model.intensity.cumulative(bounds[j]);
        const double c = out.c;
        sc.log_moment = partition.law(j).expect([c](double z) { return std::log1p(c * z * z); });
        lhs += sc.mass * sc.log_moment;
        sc.local_margin = std::numeric_limits<double>::infinity();
    }

    // Pointwise diagnostic on a uniform grid of [0, τ). Window mass Λ(t+τ) − Λ(t) is used as computed.
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double t = tau * static_cast<double>(g) / static_cast<double>(grid_points);
        const std::size_t j = partition.season_of(t);
        const double window = model.intensity.cumulative(t + tau) - model.intensity.cumulative(t);
        const double rate = model.intensity.rate(t);
        double local = 0.0;
        if (window > 0.0) {
            local = rate * (-params.eta * tau / window - out.seasons[j].log_moment);
        } else {
            local = -params.eta * tau;
        }
        out.seasons[j].local_margin = std::min(out.seasons[j].local_margin, local);
    }

    out.lhs = lhs;
    out.rhs = rhs;
    out.margin = rhs - lhs;
    out.satisfied = per_period >= 0.0 && out.margin > 0.0;
    out.locally_satisfied = true;
    for (auto& sc : out.seasons) {
        sc.margin = out.margin;
        if (!std::isfinite(sc.local_margin)) {
            // season narrower than the grid spacing: evaluate at its start
            const double t = bounds[sc.season];
            sc.local_margin = model.intensity.rate(t) * (rhs / std::max(per_period, 1e-300) - sc.log_moment);
        }
        out.locally_satisfied = out.locally_satisfied && sc.local_margin > 0.0;
    }
    return out;
}

LyapunovEstimate lyapunov_mc(const SemiLevyModel& model, const CogarchParams& params, std::size_t k_periods,
                             std::size_t replicates, const RandomStream& rng, NormIndex r, unsigned threads) {
    if (k_periods < 10) {
        throw std::domain_error("lyapunov_mc requires at least 10 periods");
    }
    if (replicates < 2) {
        throw std::domain_error("lyapunov_mc requires at least 2 replicates");
    }
    const double tau = model.period();
    const auto q = params.q;
    const Eigen::MatrixXcd P = params.diagonalizable ? params.P : Eigen::MatrixXcd::Identity(q, q);
    const Eigen::MatrixXcd P_inv = params.diagonalizable ? params.P_inv : Eigen::MatrixXcd::Identity(q, q);

    std::vector<double> values(replicates);
    detail::parallel_for(replicates, threads, [&](std::size_t i) {
        const SemiLevyPath path = sample_path(model, static_cast<double>(k_periods) * tau, rng.child(i));
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(q, q);
        double log_scale = 0.0;
        for (std::size_t k = 0; k < k_periods; ++k) {
            const double s = static_cast<double>(k) * tau;
            const TransitionPair pair = transition_pair(params, path, s, s + tau);
            M = (P_inv * pair.J.cast<std::complex<double>>() * P) * M;
            const double scale = M.norm();
            if (!(scale > 0.0) || !std::isfinite(scale)) {
                log_scale = scale > 0.0 ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity();
                M.setZero();
                break;
            }
            log_scale += std::log(scale);
            M /= scale;
        }
        const double tail = M.isZero(0.0) ? 0.0 : std::log(induced_norm(M, r));
        values[i] = (log_scale + tail) / static_cast<double>(k_periods);
    });

    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(replicates);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    LyapunovEstimate out;
    out.estimate = mean;
    out.std_error = std::sqrt(ss / static_cast<double>(replicates - 1) / static_cast<double>(replicates));
    out.periods = k_periods;
    out.replicates = replicates;
    return out;
}

NonnegativityReport check_nonnegativity(const CogarchParams& params, const Eigen::VectorXd& y0,
                                        std::optional<double> gamma, std::optional<double> t_max,
                                        std::size_t grid_points) {
    if (grid_points < 2) {
        throw std::domain_error("non-negativity check needs at least 2 grid points");
    }
    if (y0.size() != params.q) {
        throw ConfigError("y0 must have q entries");
    }
    if (gamma && *gamma < -params.alpha0) {
        throw std::domain_error("gamma must be >= -alpha0");
    }
    NonnegativityReport out;
    out.grid_points = grid_points;
    out.t_max = t_max ? *t_max : (params.eta < 0.0 ? 20.0 / std::abs(params.eta) : 100.0);
    if (!(out.t_max > 0.0)) {
        throw std::domain_error("t_max must be positive");
    }

    auto f35 = [&](double t) { return params.a.dot(params.propagator(t) * params.e); };
    auto f36 = [&](double t) { return params.a.dot(params.propagator(t) * y0); };

    auto minimize = [&](auto&& f, double& min_value, double& argmin) {
        const double step = out.t_max / static_cast<double>(grid_points - 1);
        std::size_t best = 0;
        min_value = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid_points; ++i) {
            const double v = f(step * static_cast<double>(i));
            if (v < min_value) {
                min_value = v;
                best = i;
            }
        }
        argmin = step * static_cast<double>(best);
        const double lo = step * static_cast<double>(best == 0 ? 0 : best - 1);
        const double hi = std::min(out.t_max, step * static_cast<double>(best + 1));
        const auto refined = boost::math::tools::brent_find_minima(f, lo, hi, 52);
        if (refined.second < min_value) {
            min_value = refined.second;
            argmin = refined.first;
        }
    };

    minimize(f35, out.min_35, out.argmin_35);
    minimize(f36, out.min_36, out.argmin_36);

    constexpr double tol = -1e-12;
    out.eq35 = out.min_35 >= tol;
    if (gamma) {
        out.gamma = *gamma;
        out.gamma_supplied = true;
        out.eq36 = out.min_36 - out.gamma >= tol;
    } else {
        out.gamma = std::min(out.min_36, 0.0);
        out.eq36 = out.gamma >= -params.alpha0;
    }
    return out;
}

StabilityReport assess_stability(const SemiLevyModel& model, const CogarchParams& params, const Eigen::VectorXd& y0,
                                 NormIndex r) {
    StabilityReport out;
    out.spectral = spectral_check(params.B);
    out.condition = check_condition_3_2(model, params, r);
    out.nonneg = check_nonnegativity(params, y0);
    out.stationary = out.spectral.all_negative && out.condition.satisfied;
    return out;
}

}  // namespace pergarch
