#pragma once

#include <complex>
#include <span>
#include <vector>

#include "stsqm/grid.hpp"

namespace stsqm {

using cplx = std::complex<double>;

// Sign convention per conjugate pair: a mode of conjugate value k appears in
// coordinate space as exp(i*sign*k*x/hbar).  Energy pairs with exp(-i*eps*t/hbar)
// (sign = -1), spatial momenta with exp(+i*p*y/hbar) (sign = +1).
inline constexpr int kEnergyPair = -1;
inline constexpr int kMomentumPair = +1;

// Analysis: F_j = (dx/sqrt(2*pi*hbar)) * sum_m f_m exp(-i*sign*k_j*x_m/hbar),
// with k_j on conjugate_grid(grid, hbar).
std::vector<cplx> forward_transform(std::span<const cplx> samples, const UniformGrid1D& grid,
                                    int sign, double hbar = 1.0);

// Synthesis: f_m = (dk/sqrt(2*pi*hbar)) * sum_j F_j exp(+i*sign*k_j*x_m/hbar).
// Exact inverse of forward_transform (up to FFT roundoff).
std::vector<cplx> inverse_transform(std::span<const cplx> conjugate_samples, const UniformGrid1D& grid,
                                    int sign, double hbar = 1.0);

// Same transforms against an explicitly supplied conjugate grid.  Any offset
// is admissible; only n and the spacing relation dk*dx*n = 2*pi*hbar are
// required (checked by conjugate_compatible below).
std::vector<cplx> forward_transform(std::span<const cplx> samples, const UniformGrid1D& grid,
                                    const UniformGrid1D& conj, int sign, double hbar = 1.0);
std::vector<cplx> inverse_transform(std::span<const cplx> conjugate_samples, const UniformGrid1D& grid,
                                    const UniformGrid1D& conj, int sign, double hbar = 1.0);

bool conjugate_compatible(const UniformGrid1D& grid, const UniformGrid1D& conj, double hbar = 1.0,
                          double rel = 1e-12);

// sqrt(i*hbar d/dt) as the spectral multiplier sqrt(eps) over energy modes,
// principal branch (eps < 0 maps to i*sqrt|eps|).  Applying twice equals the
// full multiplier eps, i.e. i*hbar d/dt.
std::vector<cplx> half_derivative_apply(std::span<const cplx> samples, const UniformGrid1D& grid,
                                        double hbar = 1.0);

// Multiply each conjugate mode by multiplier(k_j) and synthesize back.
std::vector<cplx> apply_spectral_multiplier(std::span<const cplx> samples, const UniformGrid1D& grid,
                                            int sign, double hbar,
                                            const std::vector<cplx>& mode_multipliers);
std::vector<cplx> apply_spectral_multiplier(std::span<const cplx> samples, const UniformGrid1D& grid,
                                            const UniformGrid1D& conj, int sign, double hbar,
                                            const std::vector<cplx>& mode_multipliers);

} // namespace stsqm
