#pragma once

#include <span>
#include <string>
#include <vector>

#include "stsqm/constants.hpp"
#include "stsqm/fields.hpp"
#include "stsqm/grid.hpp"
#include "stsqm/packets.hpp"

namespace stsqm {

// Composite Gauss-Legendre rule (8-point panels) on a truncated half-line
// support [lo, hi], 0 <= lo < hi.  Nodes are strictly interior, so p_x = 0 is
// never evaluated.
struct PxQuadrature {
    std::vector<double> nodes, weights;
    double lo = 0.0, hi = 0.0;
    int panels = 0;

    std::size_t size() const { return nodes.size(); }
    static PxQuadrature gauss_legendre(double lo, double hi, int panels);
};

// Space-conditional amplitude phi~(r p_x, p_perp...) over the p_x >= 0
// half-line (quadrature nodes) times full-line transverse momentum grids.
// Sample layout: node-major, index = node * n_perp_flat + perp_idx.
//
// plane_offset carries the pure phase exp(i r p_x X/hbar) of a plane shift
// lazily; sample moduli are therefore bit-stable under shift_to_plane.
struct SCMomentumAmplitude {
    PxQuadrature px;
    std::vector<UniformGrid1D> transverse_p;
    std::vector<cplx> plus, minus;
    double plane_offset = 0.0;
    PhysicalConstants constants{};

    struct Metadata {
        double truncation_loss = 0.0;
        bool improper = false;
        bool flagged_px_zero = false;
        std::vector<std::string> warnings;
    } metadata;

    std::size_t perp_size() const {
        std::size_t s = 1;
        for (const auto& g : transverse_p) s *= static_cast<std::size_t>(g.n);
        return s;
    }
    double perp_cell() const {
        double v = 1.0;
        for (const auto& g : transverse_p) v *= g.spacing;
        return v;
    }
    double perp_sq(std::size_t j) const;

    // phi~(r p) := gaussian amplitude at (r p, p_perp), support truncated where
    // the cumulative tail norm drops below tail_mass (default 1e-10).
    // panels == 0 picks a width-matched panel count.  Axis 0 of the spec is the
    // longitudinal (p_x) axis.  Truncation loss > 1e-6 warns, > 1e-3 throws.
    static SCMomentumAmplitude from_gaussian(const GaussianPacketSpec& spec,
                                             std::span<const UniformGrid1D> transverse_p,
                                             const PhysicalConstants& pc = {}, int panels = 0,
                                             double tail_mass = 1e-10);
    // Same, on an explicitly chosen p_x support.
    static SCMomentumAmplitude from_gaussian_on_support(const GaussianPacketSpec& spec,
                                                        double support_lo, double support_hi,
                                                        std::span<const UniformGrid1D> transverse_p,
                                                        const PhysicalConstants& pc = {},
                                                        int panels = 0);

    // Improper plane-wave superposition: each mode synthesizes exactly to
    // amp * (2 pi hbar)^(-(1+n_perp)/2) exp(i(r p_x x + p_perp.y - eps t)/hbar).
    struct Mode {
        int branch = +1; // +1 or -1
        double p_x = 0.0;
        std::vector<double> p_perp; // snapped to the nearest transverse grid point
        cplx amplitude = 1.0;
    };
    static SCMomentumAmplitude from_modes(std::span<const Mode> modes,
                                          std::span<const UniformGrid1D> transverse_p,
                                          const PhysicalConstants& pc = {});
};

// Arrival amplitude in the (eps, p_perp) parameterization, phi_bar^r, sampled
// at the energies eps_ij = (p_i^2 + p_perp_j^2)/(2m) induced by the shared
// half-line quadrature (no interpolation).
struct SCEnergyAmplitude {
    PxQuadrature px;
    std::vector<UniformGrid1D> transverse_p;
    std::vector<cplx> plus, minus;
    double plane_offset = 0.0;
    PhysicalConstants constants{};
    SCMomentumAmplitude::Metadata metadata;

    double energy_at(std::size_t node, std::size_t perp_idx) const;
};

// phi~(r p_x, .) = sqrt(p_x/m) * phi_bar^r(eps(p), .) and back.  Round trip is
// exact away from p_x = 0; nodes at p_x = 0 are flagged (the Jacobian p_x/m
// vanishes there).
SCMomentumAmplitude energy_to_momentum(const SCEnergyAmplitude& amp);
SCEnergyAmplitude momentum_to_energy(const SCMomentumAmplitude& amp);

// phi~(p|x) = phi~(p) exp(i r p_x x/hbar): recorded as a lazy plane offset.
SCMomentumAmplitude shift_to_plane(const SCMomentumAmplitude& amp, double x);

// Materialize the plane phase into the samples (modulus preserved to roundoff).
SCMomentumAmplitude materialize_plane_phase(const SCMomentumAmplitude& amp);

struct SCFieldOptions {
    // |phi| at the window edges larger than this fraction of the peak gets a
    // metadata warning on the amplitude (wrap-around risk).
    double edge_fraction_warn = 1e-6;
};

// phi^r(t, y...|x): half-line Gauss-Legendre in p_x with exact per-node time
// phases exp(-i eps t/hbar), synthesized over the transverse axes.
SpinorField sc_field(const SCMomentumAmplitude& amp, double x, const UniformGrid1D& t_grid,
                     std::span<const UniformGrid1D> transverse_grids,
                     const SCFieldOptions& opts = {});

// Relative L2 residual of the recovered free equation
//   [i hbar d/dt + (hbar^2/2m) lap_perp] phi = -(hbar^2/2m) d^2/dx^2 phi
// with spectral t/transverse derivatives and a centered x second difference
// from three fields of the same amplitude at x-dx, x, x+dx.
double sc_schrodinger_residual(const SpinorField& at_minus, const SpinorField& at_center,
                               const SpinorField& at_plus);

// <phi(x)|phi(x)> = sum_r integral dt dy |phi^r|^2 by discrete quadrature.
double sc_norm(const SpinorField& field);
// Same inner product evaluated in the momentum representation.
double sc_norm(const SCMomentumAmplitude& amp);
double sc_norm(const SCEnergyAmplitude& amp);

} // namespace stsqm
