#pragma once

#include <span>
#include <vector>

#include "stsqm/constants.hpp"
#include "stsqm/grid.hpp"
#include "stsqm/transforms.hpp"

namespace stsqm {

// Standard Gaussian test packet in momentum space, one entry per axis.
struct GaussianPacketSpec {
    std::vector<double> center_momentum;
    std::vector<double> momentum_width;
    std::vector<double> center_position;
    double center_time = 0.0;

    std::size_t axes() const { return center_momentum.size(); }
    void validate() const;
};

// Per-axis samples N*exp(-(p-p0)^2/(4 sigma^2)) * exp(-i p x0/hbar)
//                   * exp(+i p^2 t0/(2 m hbar)),
// N fixed so the discrete L2 norm (sum |a|^2 dp) is 1 per axis.
// Multi-axis output is the flattened tensor product (row-major, axis 0 slowest).
std::vector<cplx> gaussian_amplitude(const GaussianPacketSpec& spec,
                                     std::span<const UniformGrid1D> momentum_grids,
                                     const PhysicalConstants& pc = {});

// Single-axis value of the (continuum-normalized) Gaussian amplitude; used by
// quadrature-based constructions that sample off-grid.
cplx gaussian_amplitude_value(const GaussianPacketSpec& spec, std::size_t axis, double p,
                              const PhysicalConstants& pc = {});

// Symmetric momentum range [p0 - k*sigma, p0 + k*sigma] that leaves less than
// tail_mass of the |amplitude|^2 mass outside (per axis).
std::pair<double, double> gaussian_support(const GaussianPacketSpec& spec, std::size_t axis,
                                           double tail_mass);

} // namespace stsqm
