#include "pergarch/pc_test.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace pergarch {

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

double median(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) {
        return hi;
    }
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

std::size_t binomial_upper(std::size_t n, double p, double level) {
    boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
    return static_cast<std::size_t>(std::ceil(boost::math::quantile(dist, level)));
}

}  // namespace

std::vector<std::complex<double>> dft(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n == 0) {
        throw std::domain_error("dft of an empty series");
    }
    if (n < 2) {
        throw std::domain_error("dft requires at least 2 samples");
    }
    std::vector<std::complex<double>> in(series.begin(), series.end());
    std::vector<std::complex<double>> out(n);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    // samples are indexed from 1, so every bin carries the phase e^{−iλ_j}
    for (std::size_t j = 0; j < n; ++j) {
        const double lambda = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        out[j] *= std::polar(1.0, -lambda);
    }
    return out;
}

double alpha_threshold(double alpha, std::size_t M) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("alpha must lie in (0, 1)");
    }
    if (M < 2) {
        throw std::domain_error("window M must be at least 2");
    }
    return -std::expm1(std::log(alpha) / static_cast<double>(M - 1));
}

std::vector<double> remove_periodic_mean(const std::vector<double>& series, std::size_t period) {
    if (period < 1) {
        throw std::domain_error("period must be at least 1");
    }
    if (period > series.size()) {
        throw std::domain_error("period exceeds the series length");
    }
    std::vector<double> sums(period, 0.0);
    std::vector<std::size_t> counts(period, 0);
    for (std::size_t k = 0; k < series.size(); ++k) {
        sums[k % period] += series[k];
        ++counts[k % period];
    }
    std::vector<double> out(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) {
        out[k] = series[k] - sums[k % period] / static_cast<double>(counts[k % period]);
    }
    return out;
}

CoherenceMatrix::CoherenceMatrix(std::size_t n, std::size_t window, std::vector<std::vector<double>> diagonals)
    : n_(n), window_(window), diagonals_(std::move(diagonals)) {
    if (diagonals_.size() != n_ / 2 + 1) {
        throw std::invalid_argument("coherence matrix needs diagonals 0..N/2");
    }
}

double CoherenceMatrix::operator()(std::size_t r, std::size_t s) const {
    if (r >= n_ || s >= n_) {
        throw std::out_of_range("coherence index out of range");
    }
    const std::size_t d = (s + n_ - r) % n_;
    if (2 * d == n_) {
        return diagonals_[d][std::min(r, s)];
    }
    if (d <= n_ / 2) {
        return diagonals_[d][r];
    }
    return diagonals_[n_ - d][s];
}

CoherenceMatrix squared_coherence(const std::vector<double>& series, std::size_t M) {
    const std::size_t n = series.size();
    if (M < 2 || M % 2 != 0) {
        throw std::domain_error("window M must be even and at least 2");
    }
    if (M > n) {
        throw std::domain_error("window M exceeds the series length");
    }
    const auto X = dft(series);
    const std::size_t half = M / 2;
    // window of frequency r covers r − M/2 + m, m = 1..M−1 (mod N)
    auto first = [&](std::size_t r) { return (r + n - half + 1) % n; };
    const std::size_t len = M - 1;

    std::vector<double> power(n);
    for (std::size_t k = 0; k < n; ++k) {
        power[k] = std::norm(X[k]);
    }
    std::vector<double> den(n);
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        const std::size_t k0 = first(r);
        for (std::size_t m = 0; m < len; ++m) {
            acc += power[(k0 + m) % n];
        }
        den[r] = acc;
    }

    std::vector<std::vector<double>> diagonals(n / 2 + 1, std::vector<double>(n, 0.0));
    std::fill(diagonals[0].begin(), diagonals[0].end(), 1.0);
    std::vector<std::complex<double>> prod(n);
    std::vector<std::complex<double>> prefix(n + 1);
    for (std::size_t d = 1; d <= n / 2; ++d) {
        for (std::size_t k = 0; k < n; ++k) {
            prod[k] = X[k] * std::conj(X[(k + d) % n]);
        }
        prefix[0] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            prefix[k + 1] = prefix[k] + prod[k];
        }
        auto window_sum = [&](std::size_t start) {
            const std::size_t end = start + len;
            if (end <= n) {
                return prefix[end] - prefix[start];
            }
            return (prefix[n] - prefix[start]) + prefix[end - n];
        };
        auto& diag = diagonals[d];
        for (std::size_t r = 0; r < n; ++r) {
            const std::complex<double> num = window_sum(first(r));
            const double denom = den[r] * den[(r + d) % n];
            double value = denom > 0.0 ? std::norm(num) / denom : 0.0;
            diag[r] = std::clamp(value, 0.0, 1.0);
        }
    }
    return CoherenceMatrix(n, M, std::move(diagonals));
}

PeriodDetection detect_period(const CoherenceMatrix& coherence, double alpha, const DetectionOptions& options) {
    const std::size_t n = coherence.size();
    PeriodDetection out;
    out.threshold = alpha_threshold(alpha, coherence.window());
    out.primary_bound = binomial_upper(n, alpha, options.primary_level);
    out.harmonic_bound = binomial_upper(n, alpha, options.harmonic_level);
    const std::size_t top = n / 2;
    if (top < 1) {
        return out;
    }
    out.diagonals.resize(top);
    std::vector<double> means(top);
    for (std::size_t d = 1; d <= top; ++d) {
        const auto& diag = coherence.diagonal(d);
        auto& st = out.diagonals[d - 1];
        st.d = d;
        st.cells = diag.size();
        double sum = 0.0;
        for (double v : diag) {
            sum += v;
            if (v > out.threshold) {
                ++st.exceedances;
            }
        }
        st.fraction = static_cast<double>(st.exceedances) / static_cast<double>(st.cells);
        st.mean = sum / static_cast<double>(st.cells);
        means[d - 1] = st.mean;
    }
    const double med = median(means);
    std::vector<double> dev(top);
    for (std::size_t i = 0; i < top; ++i) {
        dev[i] = std::abs(means[i] - med);
    }
    const double scale = 1.4826 * median(dev);
    if (!(scale > 1e-15 * std::max(med, 1e-300))) {
        return out;
    }
    for (auto& st : out.diagonals) {
        st.z = (st.mean - med) / scale;
        st.primary = st.z >= options.primary_z && st.exceedances > out.primary_bound;
    }

    const DiagonalStat* best = nullptr;
    for (const auto& st : out.diagonals) {
        if (st.primary && (best == nullptr || st.z > best->z)) {
            best = &st;
        }
    }
    if (best == nullptr) {
        return out;
    }
    const std::size_t d_max = best->d;
    out.d_max = d_max;
    auto supports = [&](const DiagonalStat& st) {
        return st.z >= options.harmonic_z && st.exceedances > out.harmonic_bound;
    };
    // the strongest line may be a low-order harmonic of the fundamental
    std::size_t d_star = d_max;
    for (std::size_t d = 1; d < d_max; ++d) {
        const auto k = std::llround(static_cast<double>(d_max) / static_cast<double>(d));
        if (k < 2 || k > static_cast<long long>(options.max_harmonic_order) ||
            std::llabs(k * static_cast<long long>(d) - static_cast<long long>(d_max)) > 1) {
            continue;
        }
        const auto& st = out.diagonals[d - 1];
        if (st.z >= options.fundamental_z && st.exceedances > out.harmonic_bound) {
            d_star = d;
            break;
        }
    }

    bool any_harmonic_in_range = false;
    for (std::size_t j = 2; j * d_star <= top + 1; ++j) {
        for (long delta = -1; delta <= 1; ++delta) {
            const long d = static_cast<long>(j * d_star) + delta;
            if (d < 1 || d > static_cast<long>(top)) {
                continue;
            }
            any_harmonic_in_range = true;
            const auto& st = out.diagonals[static_cast<std::size_t>(d) - 1];
            if (supports(st)) {
                out.supporting_harmonics.push_back(st.d);
            }
        }
    }
    if (any_harmonic_in_range && out.supporting_harmonics.empty()) {
        return out;
    }
    out.d_star = d_star;
    out.period = static_cast<std::size_t>(std::llround(static_cast<double>(n) / static_cast<double>(d_star)));
    return out;
}

std::vector<double> sample_autocorrelation(const std::vector<double>& series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (max_lag >= n) {
        throw std::domain_error("max_lag must be smaller than the series length");
    }
    double mean = 0.0;
    for (double x : series) {
        mean += x;
    }
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double x : series) {
        c0 += (x - mean) * (x - mean);
    }
    std::vector<double> out(max_lag + 1, 0.0);
    out[0] = 1.0;
    if (!(c0 > 0.0)) {
        return out;
    }
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double c = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) {
            c += (series[t] - mean) * (series[t + k] - mean);
        }
        out[k] = c / c0;
    }
    return out;
}

CoherenceReport run_pc_test(const std::vector<double>& series, std::size_t M, double alpha,
                            std::optional<std::size_t> remove_period, const DetectionOptions& options,
                            bool collect_exceedances) {
    CoherenceReport report;
    report.N = series.size();
    report.M = M;
    report.alpha = alpha;
    report.threshold = alpha_threshold(alpha, M);
    report.removed_period = remove_period;

    const std::vector<double> x = remove_period ? remove_periodic_mean(series, *remove_period) : series;
    double raw_energy = 0.0;
    double energy = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        raw_energy += series[k] * series[k];
        energy += x[k] * x[k];
    }
    report.degenerate = !(energy > 1e-24 * std::max(raw_energy, 1e-300)) || !(energy > 0.0);

    const CoherenceMatrix gamma = squared_coherence(x, M);
    const std::size_t n = gamma.size();
    std::size_t count = 0;
    for (std::size_t d = 1; d <= n / 2; ++d) {
        const auto& diag = gamma.diagonal(d);
        // the two triangles hold d and N − d; with even N, d = N/2 is its own mirror
        const std::size_t weight = (2 * d == n) ? 1 : 2;
        for (double v : diag) {
            if (v > report.threshold) {
                count += weight;
            }
        }
    }
    report.exceedance_fraction = static_cast<double>(count) / static_cast<double>(n * (n - 1));
    if (collect_exceedances) {
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t s = 0; s < n; ++s) {
                if (r != s) {
                    const double v = gamma(r, s);
                    if (v > report.threshold) {
                        report.exceedances.push_back({r, s, v});
                    }
                }
            }
        }
    }
    if (!report.degenerate) {
        report.detection = detect_period(gamma, alpha, options);
    } else {
        report.detection.threshold = report.threshold;
    }
    return report;
}

}  // namespace pergarch
