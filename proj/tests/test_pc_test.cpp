#include "pergarch/pc_test.hpp"
#include "pergarch/random.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

using namespace pergarch;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// X_j = Σ_{t=1}^{N} x_t e^{−iλ_j t}, λ_j = 2πj/N, evaluated term by term
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 1; t <= n; ++t) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(j * t % n) / static_cast<double>(n);
            acc += x[t - 1] * std::polar(1.0, angle);
        }
        out[j] = acc;
    }
    return out;
}

double naive_coherence(const std::vector<std::complex<double>>& X, std::size_t M, std::size_t r, std::size_t s) {
    const std::size_t n = X.size();
    std::complex<double> num = 0.0;
    double pr = 0.0;
    double ps = 0.0;
    for (std::size_t m = 1; m < M; ++m) {
        const std::size_t a = (r + n + m - M / 2) % n;
        const std::size_t b = (s + n + m - M / 2) % n;
        num += X[a] * std::conj(X[b]);
        pr += std::norm(X[a]);
        ps += std::norm(X[b]);
    }
    return std::norm(num) / (pr * ps);
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) {
        v = rng.normal(0.0, 1.0);
    }
    return x;
}

// variance switches between two levels within each period of 12
std::vector<double> modulated_noise(std::size_t n, std::uint64_t seed) {
    auto x = white_noise(n, seed);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] *= (t % 12) < 3 ? 4.0 : 1.0;
    }
    return x;
}

}  // namespace

TEST_CASE("threshold values", "[pc_test]") {
    CHECK_THAT(alpha_threshold(0.05, 240), WithinRel(0.012456215701070028, 1e-12));
    CHECK_THAT(alpha_threshold(0.05, 2), WithinRel(0.95, 1e-14));
    CHECK_THAT(alpha_threshold(0.01, 11), WithinRel(1.0 - std::pow(0.01, 0.1), 1e-13));
    CHECK_THROWS(alpha_threshold(0.0, 240));
    CHECK_THROWS(alpha_threshold(0.05, 1));
}

TEST_CASE("dft against a direct sum", "[pc_test]") {
    const auto x = white_noise(37, 1);
    const auto fast = dft(x);
    const auto slow = naive_dft(x);
    REQUIRE(fast.size() == 37);
    for (std::size_t j = 0; j < x.size(); ++j) {
        CHECK(std::abs(fast[j] - slow[j]) < 1e-11);
    }
}

TEST_CASE("dft satisfies Parseval and conjugate symmetry", "[pc_test]") {
    const auto x = white_noise(480, 2);
    const auto X = dft(x);
    double energy = 0.0;
    double spectral = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        energy += x[t] * x[t];
        spectral += std::norm(X[t]);
    }
    CHECK_THAT(spectral, WithinRel(480.0 * energy, 1e-12));
    for (std::size_t j = 1; j < 480; ++j) {
        CHECK(std::abs(X[480 - j] - std::conj(X[j])) < 1e-10);
    }
}

TEST_CASE("coherence cells against a direct evaluation", "[pc_test]") {
    const auto x = white_noise(96, 3);
    const std::size_t M = 16;
    const auto gamma = squared_coherence(x, M);
    const auto X = naive_dft(x);
    REQUIRE(gamma.size() == 96);
    for (auto [r, s] : {std::pair<std::size_t, std::size_t>{0, 5}, {10, 40}, {90, 3}, {47, 48}, {7, 55}, {60, 12}}) {
        CHECK_THAT(gamma(r, s), WithinAbs(naive_coherence(X, M, r, s), 1e-12));
    }
}

TEST_CASE("coherence is symmetric with a unit diagonal", "[pc_test]") {
    const auto x = white_noise(120, 4);
    const auto gamma = squared_coherence(x, 20);
    for (std::size_t r = 0; r < 120; ++r) {
        CHECK(gamma(r, r) == 1.0);
        for (std::size_t s = 0; s < 120; s += 7) {
            CHECK(gamma(r, s) == gamma(s, r));
            CHECK(gamma(r, s) >= 0.0);
            CHECK(gamma(r, s) <= 1.0);
        }
    }
    CHECK_THROWS(squared_coherence(x, 7));
    CHECK_THROWS(squared_coherence(x, 240));
}

TEST_CASE("periodic mean removal", "[pc_test]") {
    std::vector<double> x(60);
    for (std::size_t t = 0; t < x.size(); ++t) {
        x[t] = static_cast<double>(t % 5) * 2.0 - 1.0;
    }
    for (double v : remove_periodic_mean(x, 5)) {
        CHECK(v == 0.0);
    }
    const auto noise = white_noise(48, 5);
    const auto cleaned = remove_periodic_mean(noise, 12);
    for (std::size_t phase = 0; phase < 12; ++phase) {
        double sum = 0.0;
        for (std::size_t t = phase; t < 48; t += 12) {
            sum += cleaned[t];
        }
        CHECK_THAT(sum, WithinAbs(0.0, 1e-12));
    }
    CHECK_THROWS(remove_periodic_mean(noise, 0));
    CHECK_THROWS(remove_periodic_mean(noise, 49));
}

TEST_CASE("autocorrelation of an AR(1) series", "[pc_test]") {
    RandomStream rng(6);
    const double phi = 0.6;
    std::vector<double> x(40000);
    double prev = 0.0;
    for (auto& v : x) {
        prev = phi * prev + rng.normal(0.0, 1.0);
        v = prev;
    }
    const auto acf = sample_autocorrelation(x, 3);
    REQUIRE(acf.size() == 4);
    CHECK(acf[0] == 1.0);
    CHECK_THAT(acf[1], WithinAbs(0.6, 0.02));
    CHECK_THAT(acf[2], WithinAbs(0.36, 0.02));
    CHECK_THAT(acf[3], WithinAbs(0.216, 0.02));
}

TEST_CASE("period of a variance-switching series is found", "[pc_test]") {
    const auto x = modulated_noise(480, 7);
    const auto report = run_pc_test(x, 240, 0.05, 12);
    CHECK(report.N == 480);
    CHECK(report.removed_period == std::optional<std::size_t>(12));
    CHECK_FALSE(report.degenerate);
    REQUIRE(report.detection.period.has_value());
    CHECK(*report.detection.period == 12);
    CHECK(*report.detection.d_star == 40);
    CHECK_FALSE(report.detection.supporting_harmonics.empty());
    CHECK(report.detection.diagonals[39].primary);
}

TEST_CASE("white noise yields no period", "[pc_test]") {
    std::size_t detections = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto report = run_pc_test(white_noise(480, seed), 240, 0.05, std::nullopt, {}, false);
        CHECK(report.exceedances.empty());
        CHECK(report.exceedance_fraction > 0.0);
        CHECK(report.exceedance_fraction < 1.0);
        detections += report.detection.period ? 1 : 0;
    }
    CHECK(detections <= 1);
}

TEST_CASE("exceedances are listed above the threshold", "[pc_test]") {
    const auto x = modulated_noise(240, 8);
    const auto report = run_pc_test(x, 120, 0.05);
    CHECK_THAT(report.threshold, WithinRel(alpha_threshold(0.05, 120), 1e-15));
    REQUIRE_FALSE(report.exceedances.empty());
    for (const auto& e : report.exceedances) {
        CHECK(e.value > report.threshold);
        CHECK(e.r != e.s);
    }
}

TEST_CASE("a fully periodic series is degenerate after mean removal", "[pc_test]") {
    std::vector<double> x(480);
    for (std::size_t t = 0; t < x.size(); ++t) {
        x[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 12.0);
    }
    const auto report = run_pc_test(x, 240, 0.05, 12);
    CHECK(report.degenerate);
    CHECK_FALSE(report.detection.period.has_value());
}
