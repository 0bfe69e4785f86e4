#pragma once

#include "pergarch/random.hpp"

#include <complex>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace pergarch {

/**
 * @brief Non-negative periodic intensity λ(t) of the arrival process.
 *
 * Two forms are supported: the parametric `a − b·cos(2πt/τ)` and a
 * piecewise-constant table over one period. Both have closed-form
 * cumulative intensities, so no quadrature is needed on the hot path.
 */
class PeriodicIntensity {
public:
    struct Cosine {
        double a = 0.0;
        double b = 0.0;
    };
    struct Piecewise {
        std::vector<double> breaks;  // 0 = breaks[0] < ... < τ
        std::vector<double> rates;   // same length as breaks
        std::vector<double> cumulative;  // Λ at each break
    };

    static PeriodicIntensity cosine(double a, double b, double tau);
    static PeriodicIntensity piecewise(double tau, std::vector<double> breaks, std::vector<double> rates);
    static PeriodicIntensity constant(double rate, double tau);

    [[nodiscard]] double period() const noexcept { return tau_; }
    [[nodiscard]] double rate(double t) const;
    /// Λ(t) = ∫₀ᵗ λ(u) du, t ≥ 0.
    [[nodiscard]] double cumulative(double t) const;
    /// Λ(τ), the expected number of arrivals per period.
    [[nodiscard]] double per_period() const noexcept { return per_period_; }
    /// Smallest t with Λ(t) ≥ x. Flat regions resolve to their left endpoint.
    [[nodiscard]] double inverse_cumulative(double x) const;

    [[nodiscard]] bool is_cosine() const noexcept { return std::holds_alternative<Cosine>(form_); }
    [[nodiscard]] const Cosine* as_cosine() const noexcept { return std::get_if<Cosine>(&form_); }
    [[nodiscard]] const Piecewise* as_piecewise() const noexcept { return std::get_if<Piecewise>(&form_); }

private:
    PeriodicIntensity(double tau, std::variant<Cosine, Piecewise> form);
    [[nodiscard]] double within_period(double u) const;
    [[nodiscard]] double solve_within_period(double target) const;

    double tau_;
    std::variant<Cosine, Piecewise> form_;
    double per_period_ = 0.0;
};

/// Closed descriptor set for per-season jump laws.
struct JumpLaw {
    enum class Kind { Normal, PointMass, Uniform };

    Kind kind = Kind::Normal;
    double mu = 0.0;      // mean (location for point mass)
    double sigma2 = 0.0;  // variance; uniform laws are parameterized by mean and variance too

    static JumpLaw normal(double mu, double sigma2);
    static JumpLaw point_mass(double c);
    static JumpLaw uniform(double mu, double sigma2);
    static JumpLaw parse(const std::string& type, double mu, double sigma2);

    [[nodiscard]] double mean() const noexcept { return mu; }
    [[nodiscard]] double second_moment() const noexcept { return mu * mu + sigma2; }
    [[nodiscard]] double fourth_moment() const noexcept;
    [[nodiscard]] std::complex<double> cf(double w) const;
    [[nodiscard]] double sample(RandomStream& rng) const;
    /// E[g(Z)] by adaptive quadrature (normal truncated at ±12σ) or exactly for point masses.
    template <class F>
    [[nodiscard]] double expect(F&& g, double tolerance = 1e-9) const;

    [[nodiscard]] JumpLaw centered() const;
    [[nodiscard]] std::string type_name() const;
    bool operator==(const JumpLaw&) const = default;
};

/// Seasons A_1..A_l partitioning one period; absolute time u belongs to season j iff (u mod τ) ∈ [t_{j−1}, t_j).
class SeasonPartition {
public:
    SeasonPartition(std::vector<double> lengths, std::vector<JumpLaw> laws);

    [[nodiscard]] std::size_t size() const noexcept { return laws_.size(); }
    [[nodiscard]] double period() const noexcept { return boundaries_.back(); }
    [[nodiscard]] const std::vector<double>& lengths() const noexcept { return lengths_; }
    /// t_0 = 0 < t_1 < ... < t_l = τ
    [[nodiscard]] const std::vector<double>& boundaries() const noexcept { return boundaries_; }
    [[nodiscard]] const std::vector<JumpLaw>& laws() const noexcept { return laws_; }
    [[nodiscard]] const JumpLaw& law(std::size_t season) const { return laws_.at(season); }

    /// 0-based season index of absolute time u ≥ 0.
    [[nodiscard]] std::size_t season_of(double u) const;
    [[nodiscard]] bool centered() const noexcept;
    [[nodiscard]] SeasonPartition with_centered_laws() const;

private:
    std::vector<double> lengths_;
    std::vector<double> boundaries_;
    std::vector<JumpLaw> laws_;
};

/// Deterministic periodic drift with D_0 = 0.
struct DriftFunction {
    enum class Form { Zero, Sine };
    Form form = Form::Zero;
    double amplitude = 0.0;
    double tau = 1.0;

    static DriftFunction zero() { return {}; }
    static DriftFunction sine(double amplitude, double tau) { return {Form::Sine, amplitude, tau}; }
    [[nodiscard]] double operator()(double t) const;
};

struct SemiLevyModel {
    PeriodicIntensity intensity;
    SeasonPartition partition;
    DriftFunction drift;

    SemiLevyModel(PeriodicIntensity intensity, SeasonPartition partition, DriftFunction drift = {});
    [[nodiscard]] double period() const noexcept { return intensity.period(); }
};

/// Arrivals Υ_1 < Υ_2 < ... in (0, T] with 0-based season marks and jump sizes.
struct SemiLevyPath {
    double horizon = 0.0;
    std::vector<double> arrivals;
    std::vector<std::size_t> seasons;
    std::vector<double> jumps;

    [[nodiscard]] std::size_t size() const noexcept { return arrivals.size(); }
};

/// A maximal sub-interval (start, end] of one season.
struct SeasonPiece {
    double start;
    double end;
    std::size_t season;
};

/// Decompose (s, t] into within-season pieces, in time order.
std::vector<SeasonPiece> season_pieces(const SeasonPartition& partition, double s, double t);

double cumulative_intensity(const SemiLevyModel& model, double t);
double inverse_cumulative_intensity(const SemiLevyModel& model, double x);

/// Arrival times by inversion of Λ; jump sizes are left at zero.
SemiLevyPath generate_arrivals(const SemiLevyModel& model, double horizon, RandomStream& rng);
SemiLevyPath sample_jumps(SemiLevyPath path, const SeasonPartition& partition, RandomStream& rng);
/// Arrivals from the "arrivals" child and jumps from the "jumps" child of `rng`.
SemiLevyPath sample_path(const SemiLevyModel& model, double horizon, const RandomStream& rng);

/// S_t = D_t + Σ_{Υ_n ≤ t} Z_n
double path_value(const SemiLevyPath& path, const DriftFunction& drift, double t);

/// E[exp(iwS_t)]
std::complex<double> characteristic_function(const SemiLevyModel& model, double t, double w);
/// E[exp(iw(S_t − S_s))], 0 ≤ s ≤ t.
std::complex<double> increment_characteristic_function(const SemiLevyModel& model, double s, double t, double w);

struct LocalLevyMeasure {
    double rate;
    std::size_t season;
    JumpLaw law;
};

/// ν_s(dz) = λ(s)·F_{j(s)}(dz)
LocalLevyMeasure local_levy_measure(const SemiLevyModel& model, double s);

}  // namespace pergarch

#include "pergarch/detail/jump_law_expect.hpp"
