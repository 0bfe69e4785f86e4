#include "pergarch/moments.hpp"

#include "pergarch/detail/parallel.hpp"
#include "pergarch/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace pergarch {

namespace {

struct BatchRange {
    std::size_t begin;
    std::size_t end;
};

BatchRange batch_range(std::size_t b, std::size_t batches, std::size_t replicates) {
    return {b * replicates / batches, (b + 1) * replicates / batches};
}

// Pooled value and batch-spread standard error of an Eigen-valued functional.
template <class Mat, class F>
std::pair<Mat, Mat> pool(const std::vector<OperatorBatch>& batches, F&& extract) {
    std::size_t total = 0;
    Mat mean = extract(batches.front());
    mean.setZero();
    for (const auto& b : batches) {
        mean += static_cast<double>(b.count) * extract(b);
        total += b.count;
    }
    mean /= static_cast<double>(total);
    Mat ss = Mat::Zero(mean.rows(), mean.cols());
    for (const auto& b : batches) {
        const Mat d = extract(b) - mean;
        ss += static_cast<double>(b.count) * d.cwiseProduct(d);
    }
    const double denom = static_cast<double>(batches.size() - 1) * static_cast<double>(total);
    Mat se = batches.size() > 1 ? Mat((ss / denom).cwiseSqrt()) : Mat(Mat::Zero(mean.rows(), mean.cols()));
    return {mean, se};
}

template <class Mat>
Mat spread(const std::vector<Mat>& values, const std::vector<std::size_t>& counts, const Mat& center) {
    std::size_t total = 0;
    Mat ss = Mat::Zero(center.rows(), center.cols());
    for (std::size_t b = 0; b < values.size(); ++b) {
        const Mat d = values[b] - center;
        ss += static_cast<double>(counts[b]) * d.cwiseProduct(d);
        total += counts[b];
    }
    if (values.size() < 2) {
        return Mat::Zero(center.rows(), center.cols());
    }
    return (ss / (static_cast<double>(values.size() - 1) * static_cast<double>(total))).cwiseSqrt();
}

double spread(const std::vector<double>& values, const std::vector<std::size_t>& counts, double center) {
    std::size_t total = 0;
    double ss = 0.0;
    for (std::size_t b = 0; b < values.size(); ++b) {
        ss += static_cast<double>(counts[b]) * (values[b] - center) * (values[b] - center);
        total += counts[b];
    }
    if (values.size() < 2) {
        return 0.0;
    }
    return std::sqrt(ss / (static_cast<double>(values.size() - 1) * static_cast<double>(total)));
}

double spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double wrap(double t, double tau) {
    double x = t - std::floor(t / tau) * tau;
    if (x < 0.0 || x >= tau) {
        x = 0.0;
    }
    return x;
}

}  // namespace

std::vector<double> default_s_grid(const SemiLevyModel& model, std::size_t steps) {
    if (steps == 0) {
        throw std::domain_error("s-grid needs at least one step");
    }
    const double tau = model.period();
    std::vector<double> grid;
    grid.reserve(steps + model.partition.size() + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        grid.push_back(tau * static_cast<double>(i) / static_cast<double>(steps));
    }
    for (double b : model.partition.boundaries()) {
        grid.push_back(b);
    }
    grid.back() = tau;
    std::sort(grid.begin(), grid.end());
    const double tol = 1e-12 * tau;
    grid.erase(std::unique(grid.begin(), grid.end(), [tol](double x, double y) { return std::abs(x - y) <= tol; }),
               grid.end());
    grid.front() = 0.0;
    grid.back() = tau;
    return grid;
}

PeriodOperators estimate_period_operators(const SemiLevyModel& model, const CogarchParams& params,
                                          std::size_t replicates, const std::vector<double>& s_grid,
                                          const RandomStream& rng, unsigned threads, std::size_t batches) {
    if (replicates < 1000) {
        throw std::domain_error("estimate_period_operators requires at least 1000 replicates");
    }
    if (batches < 2 || batches > replicates) {
        throw std::domain_error("batch count must be in [2, replicates]");
    }
    const double tau = model.period();
    if (s_grid.size() < 2 || s_grid.front() != 0.0 || std::abs(s_grid.back() - tau) > 1e-12 * tau) {
        throw std::domain_error("s-grid must start at 0 and end at tau");
    }
    for (std::size_t g = 1; g < s_grid.size(); ++g) {
        if (!(s_grid[g] > s_grid[g - 1])) {
            throw std::domain_error("s-grid must be strictly increasing");
        }
    }
    std::vector<double> grid = s_grid;
    grid.back() = tau;
    const int q = params.q;
    const std::size_t G = grid.size();

    std::vector<Eigen::MatrixXd> step_exp(G);
    step_exp[0] = Eigen::MatrixXd::Identity(q, q);
    for (std::size_t g = 1; g < G; ++g) {
        step_exp[g] = params.propagator(grid[g] - grid[g - 1]);
    }

    std::vector<OperatorBatch> out_batches(batches);
    detail::parallel_for(batches, threads, [&](std::size_t b) {
        OperatorBatch acc;
        acc.J.assign(G, Eigen::MatrixXd::Zero(q, q));
        acc.K.assign(G, Eigen::VectorXd::Zero(q));
        acc.JJ = Eigen::MatrixXd::Zero(q * q, q * q);
        acc.KJ = Eigen::MatrixXd::Zero(q * q, q);
        acc.JK = Eigen::MatrixXd::Zero(q * q, q);
        acc.KK = Eigen::MatrixXd::Zero(q, q);
        const auto range = batch_range(b, batches, replicates);
        for (std::size_t i = range.begin; i < range.end; ++i) {
            const SemiLevyPath path = sample_path(model, tau, rng.child(i));
            Eigen::MatrixXd J = Eigen::MatrixXd::Identity(q, q);
            Eigen::VectorXd K = Eigen::VectorXd::Zero(q);
            double cur = 0.0;
            std::size_t k = 0;
            for (std::size_t g = 0; g < G; ++g) {
                const double s = grid[g];
                bool jumped = false;
                while (k < path.size() && path.arrivals[k] <= s) {
                    const Eigen::MatrixXd E = params.propagator(path.arrivals[k] - cur);
                    J = E * J;
                    K = E * K;
                    const double z2 = path.jumps[k] * path.jumps[k];
                    params.apply_jump_factor(J, z2);
                    K(q - 1) += z2 * params.a.dot(K) + params.alpha0 * z2;
                    cur = path.arrivals[k];
                    jumped = true;
                    ++k;
                }
                const Eigen::MatrixXd E = jumped || g == 0 ? params.propagator(s - cur) : step_exp[g];
                J = E * J;
                K = E * K;
                cur = s;
                acc.J[g] += J;
                acc.K[g] += K;
            }
            acc.JJ += Eigen::kroneckerProduct(J, J).eval();
            acc.KJ += Eigen::kroneckerProduct(K, J).eval();
            acc.JK += Eigen::kroneckerProduct(J, K).eval();
            acc.KK += K * K.transpose();
        }
        acc.count = range.end - range.begin;
        const double inv = 1.0 / static_cast<double>(acc.count);
        for (std::size_t g = 0; g < G; ++g) {
            acc.J[g] *= inv;
            acc.K[g] *= inv;
        }
        acc.JJ *= inv;
        acc.KJ *= inv;
        acc.JK *= inv;
        acc.KK *= inv;
        out_batches[b] = std::move(acc);
    });

    PeriodOperators ops;
    ops.q = q;
    ops.tau = tau;
    ops.s_grid = std::move(grid);
    ops.replicates = replicates;
    ops.J.resize(G);
    ops.K.resize(G);
    ops.J_se.resize(G);
    ops.K_se.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        std::tie(ops.J[g], ops.J_se[g]) =
            pool<Eigen::MatrixXd>(out_batches, [g](const OperatorBatch& x) -> const Eigen::MatrixXd& { return x.J[g]; });
        std::tie(ops.K[g], ops.K_se[g]) =
            pool<Eigen::VectorXd>(out_batches, [g](const OperatorBatch& x) -> const Eigen::VectorXd& { return x.K[g]; });
    }
    std::tie(ops.JJ, ops.JJ_se) =
        pool<Eigen::MatrixXd>(out_batches, [](const OperatorBatch& x) -> const Eigen::MatrixXd& { return x.JJ; });
    std::tie(ops.KJ, ops.KJ_se) =
        pool<Eigen::MatrixXd>(out_batches, [](const OperatorBatch& x) -> const Eigen::MatrixXd& { return x.KJ; });
    std::tie(ops.JK, ops.JK_se) =
        pool<Eigen::MatrixXd>(out_batches, [](const OperatorBatch& x) -> const Eigen::MatrixXd& { return x.JK; });
    std::tie(ops.KK, ops.KK_se) =
        pool<Eigen::MatrixXd>(out_batches, [](const OperatorBatch& x) -> const Eigen::MatrixXd& { return x.KK; });
    ops.batches = std::move(out_batches);
    return ops;
}

PeriodOperators PeriodOperators::batch_view(std::size_t b) const {
    const OperatorBatch& src = batches.at(b);
    PeriodOperators out;
    out.q = q;
    out.tau = tau;
    out.s_grid = s_grid;
    out.replicates = src.count;
    out.J = src.J;
    out.K = src.K;
    out.JJ = src.JJ;
    out.KJ = src.KJ;
    out.JK = src.JK;
    out.KK = src.KK;
    return out;
}

Eigen::MatrixXd PeriodOperators::J_at(double s) const {
    if (!(s >= 0.0) || s > tau * (1.0 + 1e-12)) {
        throw std::domain_error("J_at requires 0 <= s <= tau");
    }
    const auto it = std::upper_bound(s_grid.begin(), s_grid.end(), s);
    if (it == s_grid.end()) {
        return J.back();
    }
    const auto hi = static_cast<std::size_t>(it - s_grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (s - s_grid[lo]) / (s_grid[hi] - s_grid[lo]);
    return (1.0 - w) * J[lo] + w * J[hi];
}

Eigen::VectorXd PeriodOperators::K_at(double s) const {
    if (!(s >= 0.0) || s > tau * (1.0 + 1e-12)) {
        throw std::domain_error("K_at requires 0 <= s <= tau");
    }
    const auto it = std::upper_bound(s_grid.begin(), s_grid.end(), s);
    if (it == s_grid.end()) {
        return K.back();
    }
    const auto hi = static_cast<std::size_t>(it - s_grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (s - s_grid[lo]) / (s_grid[hi] - s_grid[lo]);
    return (1.0 - w) * K[lo] + w * K[hi];
}

Eigen::VectorXd stationary_mean(const PeriodOperators& ops) {
    const Eigen::MatrixXd& EJ = ops.J_tau();
    const double rho = spectral_radius(EJ);
    if (!(rho < 1.0)) {
        throw StationarityError("spectral radius of E(J_{0,tau}) is " + std::to_string(rho) +
                                " >= 1; no stationary mean exists");
    }
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(ops.q, ops.q) - EJ;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        throw StationarityError("I - E(J_{0,tau}) is singular");
    }
    return lu.solve(ops.K_tau());
}

Eigen::MatrixXd stationary_second_moment(const PeriodOperators& ops) {
    const int q = ops.q;
    const double rho = spectral_radius(ops.JJ);
    if (!(rho < 1.0)) {
        throw StationarityError("spectral radius of E(J (x) J) is " + std::to_string(rho) +
                                " >= 1; the second moment is not finite");
    }
    const Eigen::VectorXd u = stationary_mean(ops);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(q * q, q * q) - ops.JJ;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        throw StationarityError("I - E(J (x) J) is singular");
    }
    const Eigen::Map<const Eigen::VectorXd> vecKK(ops.KK.data(), q * q);
    const Eigen::VectorXd rhs = (ops.KJ + ops.JK) * u + vecKK;
    const Eigen::VectorXd vecS = lu.solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(vecS.data(), q, q);
}

VectorEstimate stationary_mean_estimate(const PeriodOperators& ops) {
    VectorEstimate out;
    out.value = stationary_mean(ops);
    std::vector<Eigen::VectorXd> values;
    std::vector<std::size_t> counts;
    for (std::size_t b = 0; b < ops.batches.size(); ++b) {
        values.push_back(stationary_mean(ops.batch_view(b)));
        counts.push_back(ops.batches[b].count);
    }
    out.std_error = spread(values, counts, out.value);
    return out;
}

MatrixEstimate stationary_second_moment_estimate(const PeriodOperators& ops) {
    MatrixEstimate out;
    out.value = stationary_second_moment(ops);
    std::vector<Eigen::MatrixXd> values;
    std::vector<std::size_t> counts;
    for (std::size_t b = 0; b < ops.batches.size(); ++b) {
        values.push_back(stationary_second_moment(ops.batch_view(b)));
        counts.push_back(ops.batches[b].count);
    }
    out.std_error = spread(values, counts, out.value);
    return out;
}

Eigen::VectorXd state_mean(const PeriodOperators& ops, const Eigen::VectorXd& u, double t) {
    if (!(t >= 0.0)) {
        throw std::domain_error("state_mean requires t >= 0");
    }
    const double t1 = wrap(t, ops.tau);
    return ops.J_at(t1) * u + ops.K_at(t1);
}

Eigen::VectorXd state_mean(const PeriodOperators& ops, double t) {
    return state_mean(ops, stationary_mean(ops), t);
}

double volatility_mean(const PeriodOperators& ops, const CogarchParams& params, double t) {
    return params.alpha0 + params.a.dot(state_mean(ops, t));
}

StateCovariance state_cov(const PeriodOperators& ops, const SemiLevyModel& model, const CogarchParams& params,
                          double t, double h, std::size_t replicates, const RandomStream& rng, unsigned threads) {
    if (!(t >= 0.0) || !(h >= 0.0)) {
        throw std::domain_error("state_cov requires t >= 0 and h >= 0");
    }
    if (replicates < 40) {
        throw std::domain_error("state_cov requires at least 40 replicates");
    }
    const double tau = ops.tau;
    const auto m = static_cast<long>(std::floor(t / tau));
    const auto n = static_cast<long>(std::floor((t + h) / tau));
    if (n < m) {
        throw std::domain_error("state_cov: later time falls in an earlier period");
    }
    const double t1 = wrap(t, tau);
    const double t2 = wrap(t + h, tau);
    const double later = n == m ? t2 : tau;

    const Eigen::VectorXd u = stationary_mean(ops);
    const Eigen::MatrixXd S = stationary_second_moment(ops);
    const int q = ops.q;

    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(q, q);
    for (long k = 0; k + 1 < n - m; ++k) {
        power = ops.J_tau() * power;
    }

    constexpr std::size_t batches = 20;
    struct Acc {
        Eigen::MatrixXd X, J2;
        Eigen::VectorXd ya, yb;
        std::size_t count = 0;
    };
    std::vector<Acc> acc(batches);
    const RandomStream base = rng.child("state_cov");
    detail::parallel_for(batches, threads, [&](std::size_t b) {
        Acc a{Eigen::MatrixXd::Zero(q, q), Eigen::MatrixXd::Zero(q, q), Eigen::VectorXd::Zero(q),
              Eigen::VectorXd::Zero(q), 0};
        const auto range = batch_range(b, batches, replicates);
        for (std::size_t i = range.begin; i < range.end; ++i) {
            const SemiLevyPath path = sample_path(model, tau, base.child(i));
            const TransitionPair pa = transition_pair(params, path, 0.0, t1);
            const TransitionPair pb = transition_pair(params, path, 0.0, later);
            const Eigen::VectorXd ma = pa.J * u + pa.K;
            const Eigen::VectorXd mb = pb.J * u + pb.K;
            a.X += pb.J * S * pa.J.transpose() + pb.J * u * pa.K.transpose() + pb.K * u.transpose() * pa.J.transpose() +
                   pb.K * pa.K.transpose();
            a.ya += ma;
            a.yb += mb;
            if (n > m) {
                a.J2 += transition_pair(params, path, 0.0, t2).J;
            }
        }
        a.count = range.end - range.begin;
        acc[b] = std::move(a);
    });

    auto assemble = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& ya, const Eigen::VectorXd& yb,
                        const Eigen::MatrixXd& J2, double count) -> Eigen::MatrixXd {
        const Eigen::MatrixXd bracket = X / count - (yb / count) * (ya / count).transpose();
        if (n == m) {
            return bracket;
        }
        return (J2 / count) * power * bracket;
    };

    Acc total{Eigen::MatrixXd::Zero(q, q), Eigen::MatrixXd::Zero(q, q), Eigen::VectorXd::Zero(q),
              Eigen::VectorXd::Zero(q), 0};
    for (const auto& a : acc) {
        total.X += a.X;
        total.J2 += a.J2;
        total.ya += a.ya;
        total.yb += a.yb;
        total.count += a.count;
    }
    StateCovariance out;
    out.period_gap = n - m;
    out.cov.value = assemble(total.X, total.ya, total.yb, total.J2, static_cast<double>(total.count));
    out.volatility_cov.value = params.a.dot(out.cov.value * params.a);

    std::vector<Eigen::MatrixXd> values;
    std::vector<double> vol_values;
    std::vector<std::size_t> counts;
    for (const auto& a : acc) {
        values.push_back(assemble(a.X, a.ya, a.yb, a.J2, static_cast<double>(a.count)));
        vol_values.push_back(params.a.dot(values.back() * params.a));
        counts.push_back(a.count);
    }
    out.cov.std_error = spread(values, counts, out.cov.value);
    out.volatility_cov.std_error = spread(vol_values, counts, out.volatility_cov.value);
    return out;
}

namespace {

double increment_variance(const SemiLevyModel& model, const CogarchParams& params, const PeriodOperators& ops,
                          double t, double p) {
    const Eigen::VectorXd u = stationary_mean(ops);
    const double tau = ops.tau;
    auto integrand = [&](double s) {
        const double ev = params.alpha0 + params.a.dot(state_mean(ops, u, s));
        return ev * model.intensity.rate(s);
    };
    double total = 0.0;
    for (const auto& piece : season_pieces(model.partition, t, t + p)) {
        // split at the operator grid so each quadrature cell sees a smooth integrand
        std::vector<double> cuts{piece.start};
        const double k = std::floor(piece.start / tau);
        for (double base = k * tau; base < piece.end; base += tau) {
            for (double g : ops.s_grid) {
                const double x = base + g;
                if (x > piece.start && x < piece.end) {
                    cuts.push_back(x);
                }
            }
        }
        cuts.push_back(piece.end);
        std::sort(cuts.begin(), cuts.end());
        double integral = 0.0;
        for (std::size_t c = 1; c < cuts.size(); ++c) {
            if (cuts[c] > cuts[c - 1]) {
                integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, cuts[c - 1],
                                                                                          cuts[c], 5, 1e-12);
            }
        }
        total += model.partition.law(piece.season).second_moment() * integral;
    }
    return total;
}

}  // namespace

IncrementMoments increment_moments(const SemiLevyModel& model, const CogarchParams& params,
                                   const PeriodOperators& ops, double t, double p) {
    if (!model.partition.centered()) {
        throw PreconditionError("increment moments require a zero-mean driver: every season law must have mean 0 "
                                "(enable center_jumps)");
    }
    if (!(t >= 0.0) || !(p > 0.0)) {
        throw std::domain_error("increment_moments requires t >= 0 and p > 0");
    }
    IncrementMoments out;
    out.mean = 0.0;
    out.variance.value = increment_variance(model, params, ops, t, p);
    std::vector<double> values;
    std::vector<std::size_t> counts;
    for (std::size_t b = 0; b < ops.batches.size(); ++b) {
        values.push_back(increment_variance(model, params, ops.batch_view(b), t, p));
        counts.push_back(ops.batches[b].count);
    }
    out.variance.std_error = spread(values, counts, out.variance.value);
    return out;
}

SquaredIncrementCov squared_increment_cov_mc(const SemiLevyModel& model, const CogarchParams& params,
                                             const Eigen::VectorXd& y0, double t, double h, double p,
                                             std::size_t replicates, const RandomStream& rng,
                                             std::size_t burn_in_periods, unsigned threads) {
    if (!(t >= 0.0) || !(h >= 0.0) || !(p > 0.0)) {
        throw std::domain_error("squared_increment_cov_mc requires t >= 0, h >= 0, p > 0");
    }
    if (replicates < 100) {
        throw std::domain_error("squared_increment_cov_mc requires at least 100 replicates");
    }
    const double tau = model.period();
    const double t0 = static_cast<double>(burn_in_periods) * tau + t;
    const double horizon = t0 + tau + h + p;
    std::vector<std::array<double, 4>> samples(replicates);
    detail::parallel_for(replicates, threads, [&](std::size_t i) {
        const SemiLevyPath path = sample_path(model, horizon, rng.child(i));
        const CogarchPath cp = simulate(params, path, y0);
        auto sq_inc = [&](double s) {
            const double d = log_price_at(cp, s + p) - log_price_at(cp, s);
            return d * d;
        };
        samples[i] = {sq_inc(t0), sq_inc(t0 + h), sq_inc(t0 + tau), sq_inc(t0 + tau + h)};
    });

    const auto R = static_cast<double>(replicates);
    std::array<double, 4> mean{};
    for (const auto& s : samples) {
        for (std::size_t k = 0; k < 4; ++k) {
            mean[k] += s[k] / R;
        }
    }
    double c1 = 0.0;
    double c2 = 0.0;
    for (const auto& s : samples) {
        c1 += (s[0] - mean[0]) * (s[1] - mean[1]);
        c2 += (s[2] - mean[2]) * (s[3] - mean[3]);
    }
    c1 /= R;
    c2 /= R;
    double v1 = 0.0;
    double v2 = 0.0;
    double vd = 0.0;
    for (const auto& s : samples) {
        const double phi1 = (s[0] - mean[0]) * (s[1] - mean[1]) - c1;
        const double phi2 = (s[2] - mean[2]) * (s[3] - mean[3]) - c2;
        v1 += phi1 * phi1;
        v2 += phi2 * phi2;
        vd += (phi1 - phi2) * (phi1 - phi2);
    }
    SquaredIncrementCov out;
    out.replicates = replicates;
    out.base = {c1, std::sqrt(v1 / (R - 1.0) / R)};
    out.shifted = {c2, std::sqrt(v2 / (R - 1.0) / R)};
    const double sd = std::sqrt(vd / (R - 1.0) / R);
    out.shift_z = sd > 0.0 ? (c1 - c2) / sd : 0.0;
    return out;
}

BoundingCheck bounding_process_check(const CogarchParams& params, const CogarchPath& path, NormIndex r, double h) {
    if (!(h > 0.0)) {
        throw std::domain_error("bounding check grid step must be positive");
    }
    const double c = b_norm(params.e * params.a.transpose(), params, r);
    const double e_norm = b_vector_norm(params.e, params, r);
    const double y0_norm = b_vector_norm(path.y0, params, r);

    BoundingCheck out;
    auto check = [&](double t, const Eigen::VectorXd& y, double log_prod, double sum_z2) {
        const double bound = std::exp(params.eta * t + log_prod) * y0_norm +
                             params.alpha0 * e_norm * std::exp(log_prod) * sum_z2;
        const double lhs = b_vector_norm(y, params, r);
        if (bound > 0.0) {
            out.max_ratio = std::max(out.max_ratio, lhs / bound);
        }
        if (lhs > bound * (1.0 + 1e-9) + 1e-12) {
            out.holds = false;
        }
        ++out.points;
    };

    double log_prod = 0.0;
    double sum_z2 = 0.0;
    std::size_t k = 0;
    const auto steps = static_cast<std::size_t>(std::floor(path.horizon / h));
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * h;
        while (k < path.size() && path.times[k] <= t) {
            const double z2 = path.jumps[k] * path.jumps[k];
            log_prod += std::log1p(c * z2);
            sum_z2 += z2;
            check(path.times[k], path.states[k], log_prod, sum_z2);
            ++k;
        }
        const Eigen::VectorXd y = k == 0 ? Eigen::VectorXd(params.propagator(t) * path.y0)
                                         : Eigen::VectorXd(params.propagator(t - path.times[k - 1]) * path.states[k - 1]);
        check(t, y, log_prod, sum_z2);
    }
    return out;
}

}  // namespace pergarch
