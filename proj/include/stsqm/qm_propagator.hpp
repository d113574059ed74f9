#pragma once

#include <span>
#include <vector>

#include "stsqm/arrival_types.hpp"
#include "stsqm/constants.hpp"
#include "stsqm/fields.hpp"
#include "stsqm/grid.hpp"
#include "stsqm/packets.hpp"

namespace stsqm {

// psi~(p...) on full-line momentum grids, row-major flattened.
struct TCMomentumAmplitude {
    std::vector<UniformGrid1D> p_grids;
    std::vector<cplx> samples;
    PhysicalConstants constants{};

    std::size_t size() const {
        std::size_t s = 1;
        for (const auto& g : p_grids) s *= static_cast<std::size_t>(g.n);
        return s;
    }
    double cell_volume() const {
        double v = 1.0;
        for (const auto& g : p_grids) v *= g.spacing;
        return v;
    }
    double norm2() const {
        double s = 0.0;
        for (const auto& z : samples) s += std::norm(z);
        return s * cell_volume();
    }

    static TCMomentumAmplitude from_gaussian(const GaussianPacketSpec& spec,
                                             std::span<const UniformGrid1D> p_grids,
                                             const PhysicalConstants& pc = {});
};

// Free evolution, exact per mode: multiply by exp(-i p^2 t / (2 m hbar)).
TCMomentumAmplitude tc_evolve_momentum(const TCMomentumAmplitude& amp, double t);

// psi(x...|t): evolve then synthesize on position grids (conjugate-compatible
// with the momentum grids, validated).
ScalarField tc_position_field(const TCMomentumAmplitude& amp, double t,
                              std::span<const UniformGrid1D> x_grids);

// Convenience: centered position grids conjugate to the amplitude's momentum grids.
std::vector<UniformGrid1D> position_grids_for(const TCMomentumAmplitude& amp);

// P_psi(y|t) = integral dx |psi(x,y|t)|^2 for a 2D (x,y) field.
ArrivalDistribution tc_cumulative_y_density(const ScalarField& field);

// P_psi(y|t;L) = |psi(L,y|t)|^2 / integral dy |psi(L,y|t)|^2, nearest column to L.
ArrivalDistribution tc_conditional_y_at_plane(const ScalarField& field, double plane_l);

} // namespace stsqm
