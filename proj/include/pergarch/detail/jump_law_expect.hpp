#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

namespace pergarch {

template <class F>
double JumpLaw::expect(F&& g, double tolerance) const {
    using boost::math::quadrature::gauss_kronrod;
    switch (kind) {
    case Kind::PointMass:
        return g(mu);
    case Kind::Uniform: {
        if (sigma2 <= 0.0) {
            return g(mu);
        }
        const double half = std::sqrt(3.0 * sigma2);
        const double density = 1.0 / (2.0 * half);
        auto f = [&](double z) { return g(z) * density; };
        return gauss_kronrod<double, 31>::integrate(f, mu - half, mu + half, 15, tolerance);
    }
    case Kind::Normal:
    default: {
        if (sigma2 <= 0.0) {
            return g(mu);
        }
        const double sd = std::sqrt(sigma2);
        const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
        auto f = [&](double z) {
            const double u = (z - mu) / sd;
            return g(z) * norm * std::exp(-0.5 * u * u);
        };
        return gauss_kronrod<double, 31>::integrate(f, mu - 12.0 * sd, mu + 12.0 * sd, 15, tolerance);
    }
    }
}

}  // namespace pergarch
