// Test-only oracles: brute-force quadratures kept independent of the
// library's Gauss-Legendre / FFT pipelines.  They share only the integrand
// definitions (the Gaussian amplitude and the plane-wave kernel).

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "stsqm/grid.hpp"
#include "stsqm/packets.hpp"

namespace oracles {

using stsqm::cplx;

// Composite Simpson on [a, b] with n (even) intervals.
inline cplx simpson(const std::function<cplx(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    cplx s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    return s * (h / 3.0);
}

// Transverse factor: the discretely normalized Gaussian samples on the p_y
// grid, identical to the amplitude constructor's definition.
inline std::vector<cplx> transverse_samples(const stsqm::GaussianPacketSpec& spec, std::size_t axis,
                                            const stsqm::UniformGrid1D& pg) {
    std::vector<cplx> s(static_cast<std::size_t>(pg.n));
    double n2 = 0.0;
    for (int k = 0; k < pg.n; ++k) {
        s[static_cast<std::size_t>(k)] = stsqm::gaussian_amplitude_value(spec, axis, pg.point(k));
        n2 += std::norm(s[static_cast<std::size_t>(k)]);
    }
    n2 *= pg.spacing;
    for (auto& v : s) v /= std::sqrt(n2);
    return s;
}

// Brute-force evaluation of one branch of the free space-conditional field for
// a Gaussian amplitude with one transverse axis:
//   phi^r(t,y|x) = (2 pi hbar)^-1 sum_j dp_y e^{i p_j y/hbar}
//                  * int_{p_lo}^{p_hi} dp sqrt(p/m) phi~(r p, p_j)
//                    e^{-i (p^2+p_j^2) t/(2 m hbar)} e^{i r p x/hbar}
inline cplx sc_field_2d(const stsqm::GaussianPacketSpec& spec, int branch, double p_lo, double p_hi,
                        const stsqm::UniformGrid1D& py_grid, double x, double t, double y,
                        int n_simpson, double hbar = 1.0, double m = 1.0) {
    const auto perp = transverse_samples(spec, 1, py_grid);
    const double r = branch >= 0 ? +1.0 : -1.0;
    cplx total(0.0);
    for (int j = 0; j < py_grid.n; ++j) {
        const double py = py_grid.point(j);
        auto integrand = [&](double p) -> cplx {
            const double eps = (p * p + py * py) / (2.0 * m);
            return std::sqrt(p / m) * stsqm::gaussian_amplitude_value(spec, 0, r * p) *
                   std::polar(1.0, (-eps * t + r * p * x) / hbar);
        };
        total += perp[static_cast<std::size_t>(j)] * py_grid.spacing *
                 std::polar(1.0, py * y / hbar) * simpson(integrand, p_lo, p_hi, n_simpson);
    }
    return total / (2.0 * std::numbers::pi * hbar);
}

// Same for the purely one-dimensional (t|x) case.
inline cplx sc_field_1d(const stsqm::GaussianPacketSpec& spec, int branch, double p_lo, double p_hi,
                        double x, double t, int n_simpson, double hbar = 1.0, double m = 1.0) {
    const double r = branch >= 0 ? +1.0 : -1.0;
    auto integrand = [&](double p) -> cplx {
        const double eps = p * p / (2.0 * m);
        return std::sqrt(p / m) * stsqm::gaussian_amplitude_value(spec, 0, r * p) *
               std::polar(1.0, (-eps * t + r * p * x) / hbar);
    };
    return simpson(integrand, p_lo, p_hi, n_simpson) / std::sqrt(2.0 * std::numbers::pi * hbar);
}

} // namespace oracles
