#include "pergarch/semi_levy.hpp"

#include "pergarch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pergarch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw ConfigError(std::string(what) + " must be finite");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicIntensity
// ---------------------------------------------------------------------------

PeriodicIntensity::PeriodicIntensity(double tau, std::variant<Cosine, Piecewise> form)
    : tau_(tau), form_(std::move(form)) {
    per_period_ = within_period(tau_);
}

PeriodicIntensity PeriodicIntensity::cosine(double a, double b, double tau) {
    require_finite(a, "intensity.a");
    require_finite(b, "intensity.b");
    require_finite(tau, "intensity.tau");
    if (tau <= 0.0) {
        throw ConfigError("intensity.tau must be positive");
    }
    // min over a period of a − b·cos(·) is a − |b|
    if (a < std::abs(b)) {
        throw ConfigError("intensity a - b*cos(2*pi*t/tau) must be non-negative: need a >= |b|");
    }
    return PeriodicIntensity(tau, Cosine{a, b});
}

PeriodicIntensity PeriodicIntensity::piecewise(double tau, std::vector<double> breaks, std::vector<double> rates) {
    require_finite(tau, "intensity.tau");
    if (tau <= 0.0) {
        throw ConfigError("intensity.tau must be positive");
    }
    if (breaks.empty() || breaks.size() != rates.size()) {
        throw ConfigError("piecewise intensity needs matching non-empty breaks and rates");
    }
    if (breaks.front() != 0.0) {
        throw ConfigError("piecewise intensity breaks must start at 0");
    }
    for (std::size_t k = 0; k < breaks.size(); ++k) {
        require_finite(breaks[k], "intensity.breaks");
        require_finite(rates[k], "intensity.rates");
        if (rates[k] < 0.0) {
            throw ConfigError("piecewise intensity rates must be non-negative");
        }
        if (k > 0 && breaks[k] <= breaks[k - 1]) {
            throw ConfigError("piecewise intensity breaks must be strictly increasing");
        }
    }
    if (breaks.back() >= tau) {
        throw ConfigError("piecewise intensity breaks must lie in [0, tau)");
    }
    Piecewise pw{std::move(breaks), std::move(rates), {}};
    pw.cumulative.resize(pw.breaks.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < pw.breaks.size(); ++k) {
        pw.cumulative[k] = acc;
        const double end = (k + 1 < pw.breaks.size()) ? pw.breaks[k + 1] : tau;
        acc += pw.rates[k] * (end - pw.breaks[k]);
    }
    return PeriodicIntensity(tau, std::move(pw));
}

PeriodicIntensity PeriodicIntensity::constant(double rate, double tau) {
    return piecewise(tau, {0.0}, {rate});
}

double PeriodicIntensity::rate(double t) const {
    double u = t - std::floor(t / tau_) * tau_;
    if (u >= tau_ || u < 0.0) {
        u = 0.0;
    }
    if (const auto* c = std::get_if<Cosine>(&form_)) {
        return c->a - c->b * std::cos(kTwoPi * u / tau_);
    }
    const auto& pw = std::get<Piecewise>(form_);
    const auto it = std::upper_bound(pw.breaks.begin(), pw.breaks.end(), u);
    return pw.rates[static_cast<std::size_t>(it - pw.breaks.begin()) - 1];
}

double PeriodicIntensity::within_period(double u) const {
    if (const auto* c = std::get_if<Cosine>(&form_)) {
        return c->a * u - c->b * tau_ / kTwoPi * std::sin(kTwoPi * u / tau_);
    }
    const auto& pw = std::get<Piecewise>(form_);
    const auto it = std::upper_bound(pw.breaks.begin(), pw.breaks.end(), u);
    const auto k = static_cast<std::size_t>(it - pw.breaks.begin()) - 1;
    return pw.cumulative[k] + pw.rates[k] * (u - pw.breaks[k]);
}

double PeriodicIntensity::cumulative(double t) const {
    if (!(t >= 0.0)) {
        throw std::domain_error("cumulative intensity requires t >= 0");
    }
    const double m = std::floor(t / tau_);
    double u = t - m * tau_;
    if (u < 0.0) {
        u = 0.0;
    }
    return m * per_period_ + within_period(std::min(u, tau_));
}

double PeriodicIntensity::solve_within_period(double target) const {
    if (target <= 0.0) {
        return 0.0;
    }
    if (const auto* pw = std::get_if<Piecewise>(&form_)) {
        for (std::size_t k = 0; k < pw->breaks.size(); ++k) {
            const double end = (k + 1 < pw->breaks.size()) ? pw->breaks[k + 1] : tau_;
            const double cum_end = pw->cumulative[k] + pw->rates[k] * (end - pw->breaks[k]);
            if (cum_end >= target) {
                if (pw->rates[k] <= 0.0) {
                    return pw->breaks[k];
                }
                const double u = pw->breaks[k] + (target - pw->cumulative[k]) / pw->rates[k];
                return std::clamp(u, pw->breaks[k], end);
            }
        }
        return tau_;
    }

    // Safeguarded Newton on the monotone residual Λ(u) − target over [0, τ].
    const auto& c = std::get<Cosine>(form_);
    const double tol = 1e-14 * std::max(1.0, per_period_);
    double lo = 0.0;
    double hi = tau_;
    double u = c.a > 0.0 ? std::clamp(target / c.a, 0.0, tau_) : 0.5 * tau_;
    for (int iter = 0; iter < 200; ++iter) {
        const double f = within_period(u) - target;
        if (std::abs(f) <= tol) {
            return u;
        }
        if (f > 0.0) {
            hi = u;
        } else {
            lo = u;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
            return hi;
        }
        const double slope = rate(u);
        double next = slope > 0.0 ? u - f / slope : lo - 1.0;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        u = next;
    }
    return hi;
}

double PeriodicIntensity::inverse_cumulative(double x) const {
    if (!(x >= 0.0)) {
        throw std::domain_error("inverse cumulative intensity requires x >= 0");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (per_period_ <= 0.0) {
        throw std::domain_error("intensity vanishes identically; cumulative intensity is not invertible");
    }
    double m = std::floor(x / per_period_);
    double r = x - m * per_period_;
    if (r <= 0.0 && m > 0.0) {
        // keep the left endpoint when the target sits on a period boundary
        m -= 1.0;
        r = per_period_;
    }
    return m * tau_ + solve_within_period(r);
}

// ---------------------------------------------------------------------------
// JumpLaw
// ---------------------------------------------------------------------------

JumpLaw JumpLaw::normal(double mu, double sigma2) {
    require_finite(mu, "jump law mu");
    require_finite(sigma2, "jump law sigma2");
    if (sigma2 < 0.0) {
        throw ConfigError("jump law variance must be non-negative");
    }
    return {Kind::Normal, mu, sigma2};
}

JumpLaw JumpLaw::point_mass(double c) {
    require_finite(c, "jump law mu");
    return {Kind::PointMass, c, 0.0};
}

JumpLaw JumpLaw::uniform(double mu, double sigma2) {
    JumpLaw law = normal(mu, sigma2);
    law.kind = Kind::Uniform;
    return law;
}

JumpLaw JumpLaw::parse(const std::string& type, double mu, double sigma2) {
    if (type == "normal") {
        return normal(mu, sigma2);
    }
    if (type == "point_mass" || type == "point-mass") {
        return point_mass(mu);
    }
    if (type == "uniform") {
        return uniform(mu, sigma2);
    }
    throw ConfigError("unknown jump law type '" + type + "' (expected normal, point_mass or uniform)");
}

std::string JumpLaw::type_name() const {
    switch (kind) {
    case Kind::PointMass:
        return "point_mass";
    case Kind::Uniform:
        return "uniform";
    case Kind::Normal:
    default:
        return "normal";
    }
}

double JumpLaw::fourth_moment() const noexcept {
    const double m2 = mu * mu;
    switch (kind) {
    case Kind::PointMass:
        return m2 * m2;
    case Kind::Uniform:
        return m2 * m2 + 6.0 * m2 * sigma2 + 1.8 * sigma2 * sigma2;
    case Kind::Normal:
    default:
        return m2 * m2 + 6.0 * m2 * sigma2 + 3.0 * sigma2 * sigma2;
    }
}

std::complex<double> JumpLaw::cf(double w) const {
    const std::complex<double> shift = std::exp(std::complex<double>(0.0, mu * w));
    switch (kind) {
    case Kind::PointMass:
        return shift;
    case Kind::Uniform: {
        const double hw = std::sqrt(3.0 * sigma2) * w;
        return hw == 0.0 ? shift : shift * (std::sin(hw) / hw);
    }
    case Kind::Normal:
    default:
        return shift * std::exp(-0.5 * sigma2 * w * w);
    }
}

double JumpLaw::sample(RandomStream& rng) const {
    switch (kind) {
    case Kind::PointMass:
        return mu;
    case Kind::Uniform: {
        const double half = std::sqrt(3.0 * sigma2);
        return mu + half * (2.0 * rng.uniform() - 1.0);
    }
    case Kind::Normal:
    default:
        return sigma2 > 0.0 ? rng.normal(mu, std::sqrt(sigma2)) : mu;
    }
}

JumpLaw JumpLaw::centered() const {
    JumpLaw out = *this;
    out.mu = 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// SeasonPartition / drift / model
// ---------------------------------------------------------------------------

SeasonPartition::SeasonPartition(std::vector<double> lengths, std::vector<JumpLaw> laws)
    : lengths_(std::move(lengths)), laws_(std::move(laws)) {
    if (lengths_.empty()) {
        throw ConfigError("partition needs at least one season");
    }
    if (lengths_.size() != laws_.size()) {
        throw ConfigError("partition.lengths and partition.laws must have the same length");
    }
    boundaries_.reserve(lengths_.size() + 1);
    boundaries_.push_back(0.0);
    for (double len : lengths_) {
        require_finite(len, "partition.lengths");
        if (len <= 0.0) {
            throw ConfigError("season lengths must be positive");
        }
        boundaries_.push_back(boundaries_.back() + len);
    }
}

std::size_t SeasonPartition::season_of(double u) const {
    const double tau = period();
    double x = u - std::floor(u / tau) * tau;
    if (x >= tau || x < 0.0) {
        x = 0.0;
    }
    const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
    const auto j = static_cast<std::size_t>(it - boundaries_.begin());
    return std::min(j == 0 ? 0 : j - 1, laws_.size() - 1);
}

bool SeasonPartition::centered() const noexcept {
    return std::all_of(laws_.begin(), laws_.end(), [](const JumpLaw& l) { return l.mean() == 0.0; });
}

SeasonPartition SeasonPartition::with_centered_laws() const {
    std::vector<JumpLaw> laws;
    laws.reserve(laws_.size());
    for (const auto& l : laws_) {
        laws.push_back(l.centered());
    }
    return SeasonPartition(lengths_, std::move(laws));
}

double DriftFunction::operator()(double t) const {
    if (form == Form::Zero) {
        return 0.0;
    }
    return amplitude * std::sin(kTwoPi * t / tau);
}

SemiLevyModel::SemiLevyModel(PeriodicIntensity intensity_, SeasonPartition partition_, DriftFunction drift_)
    : intensity(std::move(intensity_)), partition(std::move(partition_)), drift(drift_) {
    const double tau = intensity.period();
    if (std::abs(partition.period() - tau) > 1e-12 * tau) {
        throw ConfigError("season lengths must sum to the intensity period tau");
    }
    if (drift.form != DriftFunction::Form::Zero && std::abs(drift.tau - tau) > 1e-12 * tau) {
        throw ConfigError("drift period must equal the intensity period tau");
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<SeasonPiece> season_pieces(const SeasonPartition& partition, double s, double t) {
    if (!(s >= 0.0) || !(t >= s)) {
        throw std::domain_error("season_pieces requires 0 <= s <= t");
    }
    std::vector<SeasonPiece> out;
    const double tau = partition.period();
    const auto& b = partition.boundaries();
    const std::size_t l = partition.size();
    double cur = s;
    double k = std::floor(cur / tau);
    std::size_t j = partition.season_of(cur);
    // season_of may disagree with k at exact period multiples after rounding
    if (cur - k * tau >= b[j + 1]) {
        j = 0;
        k += 1.0;
    }
    while (cur < t) {
        double end = k * tau + b[j + 1];
        if (end <= cur) {
            if (++j == l) {
                j = 0;
                k += 1.0;
            }
            continue;
        }
        end = std::min(end, t);
        out.push_back({cur, end, j});
        cur = end;
        if (++j == l) {
            j = 0;
            k += 1.0;
        }
    }
    return out;
}

double cumulative_intensity(const SemiLevyModel& model, double t) {
    return model.intensity.cumulative(t);
}

double inverse_cumulative_intensity(const SemiLevyModel& model, double x) {
    return model.intensity.inverse_cumulative(x);
}

SemiLevyPath generate_arrivals(const SemiLevyModel& model, double horizon, RandomStream& rng) {
    if (!(horizon > 0.0)) {
        throw std::domain_error("horizon must be positive");
    }
    SemiLevyPath path;
    path.horizon = horizon;
    if (model.intensity.per_period() <= 0.0) {
        return path;
    }
    // Λ(Υ_n) = Λ(Υ_{n−1}) − ln(1 − U_n): accumulate the target directly
    double target = 0.0;
    double prev = 0.0;
    while (true) {
        target += -std::log1p(-rng.uniform_open());
        double t = model.intensity.inverse_cumulative(target);
        if (t > horizon) {
            break;
        }
        if (t <= prev) {
            t = std::nextafter(prev, std::numeric_limits<double>::infinity());
        }
        path.arrivals.push_back(t);
        path.seasons.push_back(model.partition.season_of(t));
        prev = t;
    }
    path.jumps.assign(path.arrivals.size(), 0.0);
    return path;
}

SemiLevyPath sample_jumps(SemiLevyPath path, const SeasonPartition& partition, RandomStream& rng) {
    path.jumps.resize(path.arrivals.size());
    for (std::size_t n = 0; n < path.arrivals.size(); ++n) {
        const std::size_t j = path.seasons.at(n);
        if (j >= partition.size()) {
            throw ConfigError("season mark " + std::to_string(j + 1) + " has no jump law");
        }
        path.jumps[n] = partition.law(j).sample(rng);
    }
    return path;
}

SemiLevyPath sample_path(const SemiLevyModel& model, double horizon, const RandomStream& rng) {
    RandomStream arrivals = rng.child("arrivals");
    RandomStream jumps = rng.child("jumps");
    return sample_jumps(generate_arrivals(model, horizon, arrivals), model.partition, jumps);
}

double path_value(const SemiLevyPath& path, const DriftFunction& drift, double t) {
    if (!(t >= 0.0) || t > path.horizon) {
        throw std::domain_error("path_value requires 0 <= t <= horizon");
    }
    const auto end = std::upper_bound(path.arrivals.begin(), path.arrivals.end(), t);
    const auto count = static_cast<std::size_t>(end - path.arrivals.begin());
    double sum = 0.0;
    for (std::size_t n = 0; n < count; ++n) {
        sum += path.jumps[n];
    }
    return drift(t) + sum;
}

std::complex<double> increment_characteristic_function(const SemiLevyModel& model, double s, double t, double w) {
    if (!(s >= 0.0) || !(t >= s)) {
        throw std::domain_error("characteristic function requires 0 <= s <= t");
    }
    std::complex<double> exponent(0.0, w * (model.drift(t) - model.drift(s)));
    for (const auto& piece : season_pieces(model.partition, s, t)) {
        const double mass = model.intensity.cumulative(piece.end) - model.intensity.cumulative(piece.start);
        exponent += mass * (model.partition.law(piece.season).cf(w) - 1.0);
    }
    return std::exp(exponent);
}

std::complex<double> characteristic_function(const SemiLevyModel& model, double t, double w) {
    return increment_characteristic_function(model, 0.0, t, w);
}

LocalLevyMeasure local_levy_measure(const SemiLevyModel& model, double s) {
    if (!(s >= 0.0)) {
        throw std::domain_error("local_levy_measure requires s >= 0");
    }
    const std::size_t j = model.partition.season_of(s);
    return {model.intensity.rate(s), j, model.partition.law(j)};
}

}  // namespace pergarch
