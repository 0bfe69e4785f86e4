#include "pergarch/cogarch.hpp"

#include "pergarch/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pergarch {

Eigen::MatrixXd companion_matrix(const Eigen::VectorXd& beta) {
    const auto q = beta.size();
    if (q == 0) {
        throw ConfigError("cogarch.beta must have at least one entry");
    }
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i = 0; i + 1 < q; ++i) {
        B(i, i + 1) = 1.0;
    }
    for (Eigen::Index k = 0; k < q; ++k) {
        B(q - 1, k) = -beta(q - 1 - k);
    }
    return B;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& B, double t) {
    if (!std::isfinite(t) || !B.allFinite()) {
        throw std::domain_error("matrix_exponential requires finite input");
    }
    if (t == 0.0) {
        return Eigen::MatrixXd::Identity(B.rows(), B.cols());
    }
    const Eigen::MatrixXd scaled = B * t;
    return scaled.exp();
}

CogarchParams CogarchParams::make(double alpha0, const std::vector<double>& alpha, const std::vector<double>& beta,
                                  bool allow_degenerate) {
    const auto p = static_cast<int>(alpha.size());
    const auto q = static_cast<int>(beta.size());
    if (q < 1) {
        throw ConfigError("cogarch.q must be at least 1");
    }
    if (p < 1 || p > q) {
        throw ConfigError("cogarch requires 1 <= p <= q (alpha has " + std::to_string(p) + " entries, beta has " +
                          std::to_string(q) + ")");
    }
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) {
        throw ConfigError("cogarch.alpha0 must be positive and finite");
    }
    for (double v : alpha) {
        if (!std::isfinite(v)) {
            throw ConfigError("cogarch.alpha entries must be finite");
        }
    }
    for (double v : beta) {
        if (!std::isfinite(v)) {
            throw ConfigError("cogarch.beta entries must be finite");
        }
    }
    if (!allow_degenerate && alpha.back() == 0.0) {
        throw ConfigError("cogarch.alpha: alpha_p must be non-zero");
    }
    if (beta.back() == 0.0) {
        throw ConfigError("cogarch.beta: beta_q must be non-zero");
    }

    CogarchParams out;
    out.p = p;
    out.q = q;
    out.alpha0 = alpha0;
    out.a = Eigen::VectorXd::Zero(q);
    for (int i = 0; i < p; ++i) {
        out.a(i) = alpha[static_cast<std::size_t>(i)];
    }
    out.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), q);
    out.B = companion_matrix(out.beta);
    out.e = Eigen::VectorXd::Unit(q, q - 1);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(out.B, false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue computation failed for the companion matrix");
    }
    std::vector<std::complex<double>> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + q);
    std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) {
            return x.real() > y.real();
        }
        return x.imag() > y.imag();
    });
    out.eigenvalues = Eigen::Map<Eigen::VectorXcd>(ev.data(), q);
    out.eta = ev.front().real();

    out.P = Eigen::MatrixXcd(q, q);
    for (int j = 0; j < q; ++j) {
        std::complex<double> pw = 1.0;
        for (int i = 0; i < q; ++i) {
            out.P(i, j) = pw;
            pw *= ev[static_cast<std::size_t>(j)];
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.P);
    const auto& sv = svd.singularValues();
    const double smin = sv(q - 1);
    out.p_condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    out.diagonalizable = out.p_condition < 1e8;
    out.P_inv = out.diagonalizable ? Eigen::MatrixXcd(out.P.inverse()) : Eigen::MatrixXcd::Zero(q, q);

    out.stationary_precondition =
        std::all_of(ev.begin(), ev.end(), [](const auto& x) { return x.real() < 0.0; }) && beta.back() != 0.0;
    return out;
}

Eigen::MatrixXd CogarchParams::spectral_propagator(double dt) const {
    if (!diagonalizable) {
        throw UnsupportedError("spectral propagator requires a diagonalizable companion matrix");
    }
    Eigen::VectorXcd d = (eigenvalues * dt).array().exp();
    return (P * d.asDiagonal() * P_inv).real();
}

void CogarchParams::apply_jump_factor(Eigen::MatrixXd& m, double z2) const {
    // (I + z²eaᵀ)m only changes the last row: row_q += z²·aᵀm
    const Eigen::RowVectorXd extra = z2 * (a.transpose() * m);
    m.row(q - 1) += extra;
}

JumpUpdate state_update_at_jump(const Eigen::VectorXd& y_prev, double dt, double z, const CogarchParams& params) {
    if (!(dt >= 0.0)) {
        throw std::domain_error("state_update_at_jump requires dt >= 0");
    }
    Eigen::VectorXd w = params.propagator(dt) * y_prev;
    const double v = params.alpha0 + params.a.dot(w);
    w(params.q - 1) += v * z * z;
    return {std::move(w), v};
}

namespace {

[[noreturn]] void negative_volatility(double t, double v) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "negative volatility V = " << v << " at t = " << t
        << "; the non-negativity conditions on a, B and Y0 are violated";
    throw IntegrityError(msg.str());
}

}  // namespace

CogarchPath simulate(const CogarchParams& params, const SemiLevyPath& path, const Eigen::VectorXd& y0) {
    if (y0.size() != params.q) {
        throw ConfigError("cogarch.y0 must have q = " + std::to_string(params.q) + " entries");
    }
    if (!y0.allFinite()) {
        throw ConfigError("cogarch.y0 entries must be finite");
    }
    CogarchPath out;
    out.horizon = path.horizon;
    out.y0 = y0;
    if (!params.stationary_precondition) {
        out.warnings.emplace_back("companion matrix has an eigenvalue with non-negative real part; "
                                  "the state process is not expected to be stationary");
    }
    const std::size_t n = path.size();
    out.times = path.arrivals;
    out.jumps = path.jumps;
    out.states.reserve(n);
    out.volatility.reserve(n);
    out.log_price.reserve(n);

    Eigen::VectorXd y = y0;
    double prev = 0.0;
    double g = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = path.arrivals[k];
        const double z = path.jumps[k];
        auto upd = state_update_at_jump(y, t - prev, z, params);
        if (!std::isfinite(upd.v)) {
            throw IntegrityError("non-finite volatility at t = " + std::to_string(t));
        }
        if (upd.v < 0.0) {
            negative_volatility(t, upd.v);
        }
        g += std::sqrt(upd.v) * z;
        y = std::move(upd.y);
        out.states.push_back(y);
        out.volatility.push_back(upd.v);
        out.log_price.push_back(g);
        prev = t;
    }
    return out;
}

Eigen::VectorXd state_at(const CogarchPath& path, const CogarchParams& params, double t) {
    if (!(t >= 0.0) || t > path.horizon) {
        throw std::domain_error("state_at requires 0 <= t <= horizon");
    }
    const auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
    const auto k = static_cast<std::size_t>(it - path.times.begin());
    if (k == 0) {
        return params.propagator(t) * path.y0;
    }
    return params.propagator(t - path.times[k - 1]) * path.states[k - 1];
}

double log_price_at(const CogarchPath& path, double t) {
    if (!(t >= 0.0) || t > path.horizon) {
        throw std::domain_error("log_price_at requires 0 <= t <= horizon");
    }
    const auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
    const auto k = static_cast<std::size_t>(it - path.times.begin());
    return k == 0 ? 0.0 : path.log_price[k - 1];
}

GridSamples sample_grid(const CogarchPath& path, const CogarchParams& params, double h) {
    if (!(h > 0.0)) {
        throw std::domain_error("grid step h must be positive");
    }
    if (h > path.horizon) {
        throw std::domain_error("grid step h exceeds the horizon");
    }
    GridSamples out;
    out.h = h;
    const auto count = static_cast<std::size_t>(std::floor(path.horizon / h * (1.0 + 1e-12)));
    out.t.reserve(count);
    out.v.reserve(count);
    out.g.reserve(count);
    for (std::size_t i = 1; i <= count; ++i) {
        const double t = static_cast<double>(i) * h;
        // last arrival strictly before t drives the left limit
        const auto lower = std::lower_bound(path.times.begin(), path.times.end(), t);
        const auto before = static_cast<std::size_t>(lower - path.times.begin());
        Eigen::VectorXd y;
        if (before == 0) {
            y = params.propagator(t) * path.y0;
        } else {
            y = params.propagator(t - path.times[before - 1]) * path.states[before - 1];
        }
        const double v = params.alpha0 + params.a.dot(y);
        if (v < 0.0) {
            negative_volatility(t, v);
        }
        const auto upper = std::upper_bound(lower, path.times.end(), t);
        const auto upto = static_cast<std::size_t>(upper - path.times.begin());
        out.t.push_back(t);
        out.v.push_back(v);
        out.g.push_back(upto == 0 ? 0.0 : path.log_price[upto - 1]);
    }
    return out;
}

std::vector<double> increments(const std::vector<double>& series, std::size_t lag) {
    if (lag == 0) {
        throw std::domain_error("increment lag must be positive");
    }
    std::vector<double> out;
    if (series.size() <= lag) {
        return out;
    }
    out.reserve(series.size() - lag);
    for (std::size_t i = lag; i < series.size(); ++i) {
        out.push_back(series[i] - series[i - lag]);
    }
    return out;
}

std::vector<double> grid_increments(const GridSamples& grid) {
    std::vector<double> anchored;
    anchored.reserve(grid.g.size() + 1);
    anchored.push_back(0.0);
    anchored.insert(anchored.end(), grid.g.begin(), grid.g.end());
    return increments(anchored, 1);
}

TransitionPair transition_pair(const CogarchParams& params, const std::vector<double>& arrivals,
                               const std::vector<double>& jumps, double s, double t) {
    if (!(s <= t)) {
        throw std::domain_error("transition_pair requires s <= t");
    }
    if (arrivals.size() != jumps.size()) {
        throw IntegrityError("transition_pair: arrival and jump counts differ");
    }
    TransitionPair out;
    out.s = s;
    out.t = t;
    out.J = Eigen::MatrixXd::Identity(params.q, params.q);
    out.K = Eigen::VectorXd::Zero(params.q);
    double cur = s;
    for (std::size_t k = 0; k < arrivals.size(); ++k) {
        const double u = arrivals[k];
        if (!(u > s && u <= t) || u < cur) {
            throw IntegrityError("transition_pair: arrival " + std::to_string(u) + " is outside (s, t] or out of order");
        }
        const Eigen::MatrixXd E = params.propagator(u - cur);
        out.J = E * out.J;
        out.K = E * out.K;
        const double z2 = jumps[k] * jumps[k];
        params.apply_jump_factor(out.J, z2);
        out.K(params.q - 1) += z2 * params.a.dot(out.K) + params.alpha0 * z2;
        cur = u;
    }
    const Eigen::MatrixXd E = params.propagator(t - cur);
    out.J = E * out.J;
    out.K = E * out.K;
    return out;
}

TransitionPair transition_pair(const CogarchParams& params, const SemiLevyPath& path, double s, double t) {
    const auto first = std::upper_bound(path.arrivals.begin(), path.arrivals.end(), s);
    const auto last = std::upper_bound(first, path.arrivals.end(), t);
    const auto i0 = first - path.arrivals.begin();
    const auto i1 = last - path.arrivals.begin();
    std::vector<double> arrivals(first, last);
    std::vector<double> jumps(path.jumps.begin() + i0, path.jumps.begin() + i1);
    return transition_pair(params, arrivals, jumps, s, t);
}

}  // namespace pergarch
