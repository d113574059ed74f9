#pragma once

#include <span>
#include <vector>

#include "stsqm/fields.hpp"
#include "stsqm/grid.hpp"
#include "stsqm/qm_propagator.hpp"
#include "stsqm/sts_propagator.hpp"

namespace stsqm {

// Discretized history state |Phi^mu>: a stack of slice states along one
// coordinate axis.  mu = 0 stacks time-conditional states psi(t_k) over a time
// grid; mu = 1 stacks space-conditional spinor states phi(x_k) over a space
// grid.  mu = 2, 3 are axis relabelings of the mu = 1 machinery.
struct HistoryState {
    int mu = 0;
    UniformGrid1D slice_axis;
    std::vector<ScalarField> time_slices;
    std::vector<SpinorField> space_slices;
    PhysicalConstants constants{};

    int slice_count() const {
        return static_cast<int>(mu == 0 ? time_slices.size() : space_slices.size());
    }
};

enum class SliceDerivative { spectral, centered };

struct ConstraintReport {
    double residual_l2 = 0.0;       // || P Phi - p Phi ||
    double relative_residual = 0.0; // / max(||P Phi||, ||p Phi||)
    std::vector<double> slice_norms;
    double slice_spacing = 0.0;
    SliceDerivative derivative = SliceDerivative::spectral;
};

// Slices psi(t_k) by exact per-mode free evolution of a normalized amplitude.
HistoryState build_history_time(const TCMomentumAmplitude& amp, const UniformGrid1D& t_grid,
                                std::span<const UniformGrid1D> x_grids);

// Slices phi(x_k) by the half-line synthesis of a unit-norm SC amplitude.
// mu in {1, 2, 3}: the y and z constraints are axis relabelings of the x
// machinery and share this code path.
HistoryState build_history_space(const SCMomentumAmplitude& amp, const UniformGrid1D& x_grid,
                                 const UniformGrid1D& t_grid,
                                 std::span<const UniformGrid1D> transverse_grids, int mu = 1);

// Residual of (-p^mu + P^mu)|Phi^mu> = 0 with p^mu along the slice axis
// (spectral or centered differences; centered uses interior slices only) and
// P^mu applied slice-wise through the mode multipliers.
ConstraintReport constraint_residual(const HistoryState& history,
                                     SliceDerivative derivative = SliceDerivative::spectral);

// Residual of P^mu |phi^mu(x^mu)> = i hbar eta^{mu nu} d/dx^nu |phi^mu(x^mu)>
// with centered differences on interior slices; the pre-projection constraint
// statement evaluated after projection.
double verify_generalized_evolution(const HistoryState& history);

const ScalarField& project_time_slice(const HistoryState& history, int k);
const SpinorField& project_space_slice(const HistoryState& history, int k);

std::vector<double> slice_norm_report(const HistoryState& history);

} // namespace stsqm
