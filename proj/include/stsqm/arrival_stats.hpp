#pragma once

#include <span>
#include <vector>

#include "stsqm/arrival_types.hpp"
#include "stsqm/fields.hpp"
#include "stsqm/qm_propagator.hpp"
#include "stsqm/sts_propagator.hpp"

namespace stsqm {

// P_phi(t, y...|x) = phi^dag phi / <phi|phi> per cell.
ArrivalDistribution arrival_density(const SpinorField& field);

struct ArrivalWindowPolicy {
    double warn_tail = 1e-6;  // missing mass that earns a metadata note
    double error_tail = 1e-3; // missing mass that rejects the window
    bool enforce = true;      // improper inputs switch this off automatically
};

// P_phi(t|x): half-line Gauss-Legendre evaluation of the squared arrival
// integral, summed over branches and transverse momenta.  Nonnegative by
// construction; integrates to 1 over an adequate window.
ArrivalDistribution arrival_time_density(const SCMomentumAmplitude& amp, double x,
                                         const UniformGrid1D& t_grid,
                                         const ArrivalWindowPolicy& policy = {});

// Independent reference pipeline for the same functional form with
// phi~ := psi~: uniform-grid composite Simpson over the momentum samples,
// direct summation (no Gauss-Legendre, no FFT).  Used as the oracle.
ArrivalDistribution kijowski_reference(const TCMomentumAmplitude& amp, double x,
                                       const UniformGrid1D& t_grid);

// J = (hbar/m) Im(psi* d_x psi) at the grid column nearest to plane_l, with a
// spectral x derivative, for one fixed-time field.
double current_at_plane(const ScalarField& field, double plane_l);

// J(plane_l, t) over a t sweep of the free evolution of amp (1D).
FluxSeries probability_current(const TCMomentumAmplitude& amp, const UniformGrid1D& t_grid,
                               double plane_l);

struct BackflowInterval {
    double t_start = 0.0;
    double t_end = 0.0;
    double min_j = 0.0;
};

// Contiguous strictly-negative stretches of the flux series.
std::vector<BackflowInterval> detect_backflow(const FluxSeries& flux);

// P_phi(y|x) = integral dt |phi(t,y|x)|^2 (both branches; extra transverse
// axes are marginalized too).
ArrivalDistribution sc_cumulative_y(const SpinorField& field);

// P_phi(y|t;L) = |phi(t,y|L)|^2 / integral dy |phi(t,y|L)|^2 at the t row
// nearest t_star.
ArrivalDistribution sc_conditional_y_at_time(const SpinorField& field, double t_star);

} // namespace stsqm
