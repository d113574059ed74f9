#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stsqm {

// Uniform periodic grid with n points lo + k*spacing, k = 0..n-1.
// The right endpoint hi is excluded (one period of the transform window).
struct UniformGrid1D {
    int n = 0;
    double lo = 0.0;
    double hi = 0.0;
    double spacing = 0.0;

    double point(int k) const { return lo + k * spacing; }
    double length() const { return hi - lo; }

    std::vector<double> points() const {
        std::vector<double> p(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) p[static_cast<std::size_t>(k)] = point(k);
        return p;
    }

    // Index of the grid point nearest to x (clamped to the grid).
    int nearest_index(double x) const {
        int k = static_cast<int>(std::lround((x - lo) / spacing));
        if (k < 0) k = 0;
        if (k >= n) k = n - 1;
        return k;
    }
};

inline UniformGrid1D make_grid(int n, double lo, double hi) {
    if (n < 2) throw std::domain_error("make_grid: need n >= 2, got n = " + std::to_string(n));
    if (!(hi > lo)) throw std::domain_error("make_grid: need hi > lo");
    UniformGrid1D g;
    g.n = n;
    g.lo = lo;
    g.hi = hi;
    g.spacing = (hi - lo) / n;
    return g;
}

// Conjugate (transform-dual) grid: spacing 2*pi*hbar/(n*dx), centered so the
// n modes cover [-n/2, n/2) in units of the conjugate spacing.
inline UniformGrid1D conjugate_grid(const UniformGrid1D& g, double hbar = 1.0) {
    const double dk = 2.0 * std::numbers::pi * hbar / (g.n * g.spacing);
    const double klo = -dk * (g.n / 2);
    UniformGrid1D c;
    c.n = g.n;
    c.lo = klo;
    c.hi = klo + g.n * dk;
    c.spacing = dk;
    return c;
}

inline bool grids_compatible(const UniformGrid1D& a, const UniformGrid1D& b, double rel = 1e-12) {
    if (a.n != b.n) return false;
    const double scale = std::abs(a.spacing) + std::abs(b.spacing);
    return std::abs(a.spacing - b.spacing) <= rel * scale &&
           std::abs(a.lo - b.lo) <= rel * (std::abs(a.lo) + std::abs(b.lo) + scale);
}

} // namespace stsqm
