#include "pergarch/errors.hpp"
#include "pergarch/moments.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace pergarch;
using Catch::Matchers::WithinAbs;

namespace {

const double kMu[] = {3.0, 0.0, 1.25, 4.0, 0.0};
const double kVar[] = {1.0, 1.0, 1.25, 1.0, 1.5};

SemiLevyModel example_model(bool centered = false) {
    std::vector<JumpLaw> laws;
    for (int j = 0; j < 5; ++j) {
        laws.push_back(JumpLaw::normal(centered ? 0.0 : kMu[j], kVar[j]));
    }
    return SemiLevyModel(PeriodicIntensity::cosine(4.0, 1.0, 12.0), SeasonPartition({2, 2, 2, 3, 3}, laws));
}

CogarchParams example_params() {
    return CogarchParams::make(1.0, {0.03}, {5.0, 9.0, 5.0});
}

const PeriodOperators& example_ops() {
    static const PeriodOperators ops = estimate_period_operators(example_model(), example_params(), 4000,
                                                                 default_s_grid(example_model(), 240),
                                                                 RandomStream(77), 2);
    return ops;
}

struct MeanOde {
    Eigen::MatrixXd J;
    Eigen::VectorXd K;
};

// d/ds E(J) = (B + λ(s)m₂(s)eaᵀ)E(J),  d/ds E(K) = (B + λ(s)m₂(s)eaᵀ)E(K) + λ(s)m₂(s)α₀e
MeanOde integrate_means(const CogarchParams& params, double s_end, int steps_per_unit = 400) {
    auto second_moment = [](double s) {
        const double b[] = {0, 2, 4, 6, 9, 12};
        int j = 4;
        for (int i = 0; i < 5; ++i) {
            if (s >= b[i] && s < b[i + 1]) {
                j = i;
                break;
            }
        }
        return kMu[j] * kMu[j] + kVar[j];
    };
    auto rate = [](double s) { return 4.0 - std::cos(std::numbers::pi * s / 6.0); };
    const int q = params.q;
    const Eigen::MatrixXd ea = params.e * params.a.transpose();

    MeanOde y{Eigen::MatrixXd::Identity(q, q), Eigen::VectorXd::Zero(q)};
    // integrate season by season so the jump law is constant inside each RK4 step
    const double breaks[] = {0, 2, 4, 6, 9, 12};
    for (int piece = 0; piece < 5 && breaks[piece] < s_end; ++piece) {
        const double lo = breaks[piece];
        const double hi = std::min(breaks[piece + 1], s_end);
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) * steps_per_unit)));
        const double dt = (hi - lo) / n;
        const double mid_season = 0.5 * (lo + breaks[piece + 1]);
        const double m2 = second_moment(mid_season);
        auto gen = [&](double s) -> Eigen::MatrixXd { return params.B + rate(s) * m2 * ea; };
        auto frc = [&](double s) -> Eigen::VectorXd { return rate(s) * m2 * params.alpha0 * params.e; };
        for (int i = 0; i < n; ++i) {
            const double s = lo + i * dt;
            const Eigen::MatrixXd k1 = gen(s) * y.J;
            const Eigen::MatrixXd k2 = gen(s + dt / 2) * (y.J + dt / 2 * k1);
            const Eigen::MatrixXd k3 = gen(s + dt / 2) * (y.J + dt / 2 * k2);
            const Eigen::MatrixXd k4 = gen(s + dt) * (y.J + dt * k3);
            const Eigen::VectorXd l1 = gen(s) * y.K + frc(s);
            const Eigen::VectorXd l2 = gen(s + dt / 2) * (y.K + dt / 2 * l1) + frc(s + dt / 2);
            const Eigen::VectorXd l3 = gen(s + dt / 2) * (y.K + dt / 2 * l2) + frc(s + dt / 2);
            const Eigen::VectorXd l4 = gen(s + dt) * (y.K + dt * l3) + frc(s + dt);
            y.J += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            y.K += dt / 6 * (l1 + 2 * l2 + 2 * l3 + l4);
        }
    }
    return y;
}

}  // namespace

TEST_CASE("default grid contains the season boundaries", "[moments]") {
    const auto grid = default_s_grid(example_model(), 240);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 12.0);
    for (double b : {2.0, 4.0, 6.0, 9.0}) {
        CHECK(std::find(grid.begin(), grid.end(), b) != grid.end());
    }
    CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("mean operators agree with the mean ODE", "[moments]") {
    const auto& ops = example_ops();
    const auto params = example_params();
    for (double s : {1.0, 4.0, 7.5, 12.0}) {
        const auto ode = integrate_means(params, s);
        const Eigen::MatrixXd J = ops.J_at(s);
        const Eigen::VectorXd K = ops.K_at(s);
        const auto g = static_cast<std::size_t>(std::find(ops.s_grid.begin(), ops.s_grid.end(), s) - ops.s_grid.begin());
        REQUIRE(g < ops.s_grid.size());
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                CHECK(std::abs(J(i, j) - ode.J(i, j)) <= 5.0 * ops.J_se[g](i, j) + 1e-9);
            }
            CHECK(std::abs(K(i) - ode.K(i)) <= 5.0 * ops.K_se[g](i) + 1e-9);
        }
    }
}

TEST_CASE("scalar operators against closed forms", "[moments]") {
    const double alpha1 = 0.25;
    const double beta1 = 0.8;
    const auto params = CogarchParams::make(1.0, {alpha1}, {beta1});
    const SemiLevyModel model(PeriodicIntensity::cosine(1.5, 0.5, 3.0),
                              SeasonPartition({1.0, 2.0}, {JumpLaw::normal(0.5, 1.0), JumpLaw::point_mass(1.0)}));
    const double m0 = model.intensity.cumulative(1.0);
    const double m1 = model.intensity.cumulative(3.0) - m0;
    // E Π(1 + α₁Z²) over a Poisson count is exp(Λ·α₁E Z²); the square uses E[(1 + α₁Z²)² − 1]
    const double ez2 = 1.25;
    const double ez4 = JumpLaw::normal(0.5, 1.0).fourth_moment();
    const double mean_j = std::exp(-beta1 * 3.0 + alpha1 * (m0 * ez2 + m1 * 1.0));
    const double second_j =
        std::exp(-2.0 * beta1 * 3.0 + m0 * (2 * alpha1 * ez2 + alpha1 * alpha1 * ez4) + m1 * (2 * alpha1 + alpha1 * alpha1));

    const auto ops = estimate_period_operators(model, params, 20000, default_s_grid(model, 30), RandomStream(3));
    CHECK(std::abs(ops.J_tau()(0, 0) - mean_j) <= 4.0 * ops.J_se.back()(0, 0));
    CHECK(std::abs(ops.JJ(0, 0) - second_j) <= 4.0 * ops.JJ_se(0, 0));
    CHECK(ops.JJ_se(0, 0) < 0.05 * second_j);

    const Eigen::VectorXd u = stationary_mean(ops);
    CHECK_THAT(u(0), WithinAbs(ops.K_tau()(0) / (1.0 - ops.J_tau()(0, 0)), 1e-12));
}

TEST_CASE("stationary mean is the fixed point of the period map", "[moments]") {
    const auto& ops = example_ops();
    const Eigen::VectorXd u = stationary_mean(ops);
    const Eigen::VectorXd again = ops.J_tau() * u + ops.K_tau();
    CHECK((again - u).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + u.norm()));
    CHECK((state_mean(ops, 0.0) - u).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((state_mean(ops, 12.0) - u).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + u.norm()));
    CHECK((state_mean(ops, 12.0 * 7 + 3.0) - state_mean(ops, 3.0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THAT(volatility_mean(ops, example_params(), 5.0), WithinAbs(1.0 + 0.03 * state_mean(ops, 5.0)(0), 1e-14));

    const auto est = stationary_mean_estimate(ops);
    CHECK(est.value == u);
    CHECK(est.std_error.minCoeff() > 0.0);
}

TEST_CASE("stationary second moment solves the vectorized recursion", "[moments]") {
    const auto& ops = example_ops();
    const Eigen::VectorXd u = stationary_mean(ops);
    const Eigen::MatrixXd S = stationary_second_moment(ops);
    // Y' = JY + K with Y independent of (J, K):
    // vec E(Y'Y'ᵀ) = E(J⊗J)vec S + E(K⊗J)u + E(J⊗K)u + vec E(KKᵀ)
    const Eigen::Map<const Eigen::VectorXd> vecS(S.data(), 9);
    const Eigen::Map<const Eigen::VectorXd> vecKK(ops.KK.data(), 9);
    const Eigen::VectorXd residual = ops.JJ * vecS + ops.KJ * u + ops.JK * u + vecKK - vecS;
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-9 * (1.0 + S.norm()));
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-8 * S.norm());
    const Eigen::MatrixXd cov = S - u * u.transpose();
    CHECK(cov(0, 0) > 0.0);
    CHECK(cov(2, 2) > 0.0);
}

TEST_CASE("a silent driver has deterministic operators", "[moments]") {
    const SemiLevyModel model(PeriodicIntensity::constant(0.0, 4.0), SeasonPartition({4.0}, {JumpLaw::normal(0, 1)}));
    const auto params = example_params();
    const auto ops = estimate_period_operators(model, params, 1000, default_s_grid(model, 16), RandomStream(1));
    CHECK((ops.J_tau() - params.propagator(4.0)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(ops.K_tau().cwiseAbs().maxCoeff() == 0.0);
    CHECK(ops.J_se.back().cwiseAbs().maxCoeff() < 1e-14);
    CHECK(stationary_mean(ops).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(stationary_second_moment(ops).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("operator estimation preconditions", "[moments]") {
    const auto model = example_model();
    const auto params = example_params();
    CHECK_THROWS(estimate_period_operators(model, params, 999, default_s_grid(model), RandomStream(1)));
    CHECK_THROWS(estimate_period_operators(model, params, 1000, {0.0, 5.0}, RandomStream(1)));

    const auto explosive = CogarchParams::make(1.0, {0.9}, {0.1});
    const auto ops = estimate_period_operators(model, explosive, 1000, default_s_grid(model, 12), RandomStream(1));
    CHECK_THROWS_AS(stationary_mean(ops), StationarityError);
}

TEST_CASE("operator estimates are reproducible and thread independent", "[moments]") {
    const auto model = example_model();
    const auto params = example_params();
    const auto grid = default_s_grid(model, 24);
    const auto a = estimate_period_operators(model, params, 1000, grid, RandomStream(9), 1);
    const auto b = estimate_period_operators(model, params, 1000, grid, RandomStream(9), 4);
    CHECK(a.J_tau() == b.J_tau());
    CHECK(a.KK == b.KK);
    REQUIRE(a.batches.size() == 20);
    CHECK(a.batch_view(3).replicates == 50);
}

TEST_CASE("state covariance at the period start", "[moments]") {
    const auto& ops = example_ops();
    const auto model = example_model();
    const auto params = example_params();
    const Eigen::VectorXd u = stationary_mean(ops);
    const Eigen::MatrixXd S = stationary_second_moment(ops);
    const Eigen::MatrixXd var = S - u * u.transpose();

    const auto at_zero = state_cov(ops, model, params, 0.0, 0.0, 40, RandomStream(4));
    CHECK(at_zero.period_gap == 0);
    CHECK((at_zero.cov.value - var).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + var.norm()));
    CHECK_THAT(at_zero.volatility_cov.value, WithinAbs(0.03 * 0.03 * var(0, 0), 1e-9));

    // one period ahead: Cov(Y_τ, Y_0) = E(J_{0,τ})(S − uuᵀ)
    const auto ahead = state_cov(ops, model, params, 0.0, 12.0, 2000, RandomStream(4));
    CHECK(ahead.period_gap == 1);
    const Eigen::MatrixXd expected = ops.J_tau() * var;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(ahead.cov.value(i, j) - expected(i, j)) <=
                  5.0 * ahead.cov.std_error(i, j) + 5.0 * ops.J_se.back().row(i).transpose().cwiseProduct(var.col(j).cwiseAbs()).sum() +
                      1e-9);
        }
    }

    CHECK_THROWS(state_cov(ops, model, params, 1.0, 1.0, 39, RandomStream(4)));
}

TEST_CASE("increment moments need a centered driver", "[moments]") {
    const auto params = example_params();
    CHECK_THROWS_AS(increment_moments(example_model(), params, example_ops(), 0.0, 1.0), PreconditionError);

    const auto centered = example_model(true);
    const auto ops = estimate_period_operators(centered, params, 2000, default_s_grid(centered, 120), RandomStream(12));
    const auto m = increment_moments(centered, params, ops, 3.0, 1.0);
    CHECK(m.mean == 0.0);
    CHECK(m.variance.value > 0.0);
    CHECK(m.variance.std_error > 0.0);

    // variance is additive over adjacent windows and repeats with the period
    const auto first = increment_moments(centered, params, ops, 3.0, 0.5);
    const auto second = increment_moments(centered, params, ops, 3.5, 0.5);
    CHECK_THAT(first.variance.value + second.variance.value, WithinAbs(m.variance.value, 1e-9));
    CHECK_THAT(increment_moments(centered, params, ops, 15.0, 1.0).variance.value,
               WithinAbs(m.variance.value, 1e-9));
}

TEST_CASE("a silent driver has no increment variance", "[moments]") {
    const SemiLevyModel silent(PeriodicIntensity::constant(0.0, 4.0), SeasonPartition({4.0}, {JumpLaw::normal(0, 1)}));
    const auto params = example_params();
    const auto ops = estimate_period_operators(silent, params, 1000, default_s_grid(silent, 8), RandomStream(1));
    CHECK(increment_moments(silent, params, ops, 0.0, 2.0).variance.value == 0.0);
}

TEST_CASE("squared increment covariance repeats with the period", "[moments]") {
    const auto model = example_model(true);
    const auto params = example_params();
    const auto res = squared_increment_cov_mc(model, params, Eigen::Vector3d(8.3580, 2.3377, 0.9040), 2.0, 1.0, 1.0,
                                              800, RandomStream(8), 5, 2);
    CHECK(res.replicates == 800);
    CHECK(res.base.std_error > 0.0);
    CHECK(std::abs(res.shift_z) < 4.0);
    CHECK_THROWS(squared_increment_cov_mc(model, params, Eigen::Vector3d::Zero(), 0.0, 1.0, 1.0, 99, RandomStream(8)));
}

TEST_CASE("the bounding process dominates the state", "[moments]") {
    const auto params = example_params();
    const auto noise = sample_path(example_model(), 120.0, RandomStream(6));
    const auto path = simulate(params, noise, Eigen::Vector3d(8.3580, 2.3377, 0.9040));
    for (auto r : {NormIndex::One, NormIndex::Two, NormIndex::Infinity}) {
        const auto check = bounding_process_check(params, path, r);
        CHECK(check.holds);
        CHECK(check.max_ratio <= 1.0 + 1e-9);
        CHECK(check.points >= 121 + noise.size());
    }
}
