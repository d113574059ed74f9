#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "stsqm/constants.hpp"
#include "stsqm/fields.hpp"
#include "stsqm/grid.hpp"

namespace stsqm {

// One (energy, transverse momentum, local potential) point of the mode space
// on which the space-evolution generators act.
struct ModeCoordinates {
    double energy = 0.0;
    std::vector<double> p_perp;
    double potential_value = 0.0;

    double p_perp_sq() const {
        double s = 0.0;
        for (double p : p_perp) s += p * p;
        return s;
    }
    bool classically_allowed(const PhysicalConstants& pc) const {
        return 2.0 * pc.mass * (energy - potential_value) - p_perp_sq() >= 0.0;
    }
};

struct TwoByTwoComplex {
    cplx a11, a12, a21, a22;

    static TwoByTwoComplex identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static TwoByTwoComplex pauli_x() { return {0.0, 1.0, 1.0, 0.0}; }
    static TwoByTwoComplex pauli_z() { return {1.0, 0.0, 0.0, -1.0}; }

    TwoByTwoComplex operator*(const TwoByTwoComplex& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    TwoByTwoComplex operator+(const TwoByTwoComplex& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    TwoByTwoComplex operator-(const TwoByTwoComplex& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    TwoByTwoComplex scaled(cplx c) const { return {c * a11, c * a12, c * a21, c * a22}; }
    double max_abs() const;
};

// Variants of the space-evolution generator, all behind one builder.  The
// drift term sits on sigma_z, the coupling term on i*sigma_x:
//   sigma_z_full:     sigma_z sqrt(2 m (eps - V) - p_perp^2)        (diagonal, no coupling)
//   energy_drift:     sigma_z sqrt(2 m eps)            + i sigma_x sqrt(2 m V + p_perp^2)
//   transverse_drift: sigma_z sqrt(2 m eps - p_perp^2) + i sigma_x sqrt(2 m V)
// transverse_drift couples the branches only where V != 0.
enum class SplitForm { sigma_z_full, energy_drift, transverse_drift };

// Eigenvalues (+lambda, -lambda) of the sigma_z form
// sigma_z * sqrt(2 m (eps - V) - p_perp^2), principal branch.
std::pair<cplx, cplx> px_eigenvalue_sigma_z(const ModeCoordinates& mode,
                                            const PhysicalConstants& pc = {});

TwoByTwoComplex dirac_split_matrix(const ModeCoordinates& mode, const PhysicalConstants& pc = {},
                                   SplitForm form = SplitForm::energy_drift);

struct AnticommutationReport {
    double alpha_sq_residual = 0.0;
    double beta_sq_residual = 0.0;
    double anticommutator_residual = 0.0;
    bool ok = false;
    double max_residual() const;
};

// Checks alpha^2 = 1, beta^2 = 1, alpha*beta + beta*alpha = 0 entry-wise;
// ok iff all residuals <= 1e-14.
AnticommutationReport verify_anticommutation(const TwoByTwoComplex& alpha,
                                             const TwoByTwoComplex& beta);

struct Potential1D {
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    static Potential1D constant(double v0);
    static Potential1D smooth_step(double v0, double width); // v0/(1+exp(-x/width))
};

enum class Branch { plus, minus };

struct StationarySolution {
    UniformGrid1D x_grid;
    std::vector<cplx> values;
    std::vector<cplx> derivatives;
    double energy = 0.0;
    Branch branch = Branch::plus;
};

// Profile of both branches on a common grid.
struct StationaryProfile {
    UniformGrid1D x_grid;
    std::vector<cplx> phi_plus, phi_minus;
    double energy = 0.0;
};

// Integrates the decoupled stationary equation
//   -(hbar^2/2m)(phi'' - (V'/2V) phi') + (V -+ i hbar sqrt(eps/2m) V'/(2V)) phi = eps phi
// as a first-order system with classical RK4 from (phi0, dphi0) at x_grid.lo.
// Refuses |V| < v_min anywhere on the interval (the equation divides by V).
StationarySolution integrate_stationary_sc(cplx phi0, cplx dphi0, double energy,
                                           const Potential1D& potential, const UniformGrid1D& x_grid,
                                           Branch branch, const PhysicalConstants& pc = {},
                                           double v_min = 1e-6);

StationaryProfile combine_stationary(const StationarySolution& plus, const StationarySolution& minus);

struct CoupledStepOptions {
    SplitForm form = SplitForm::transverse_drift;
    double max_amplification = 1e3; // spectral-radius bound per step
    PhysicalConstants constants{};
};

// One slab step of size dx of the coupled first-order-in-x system, V constant
// across the slab.  Square roots act as spectral multipliers (half derivative
// in t, principal-branch multiplier transversally); the per-mode 2x2 update is
// the exact slab exponential exp(i M dx / hbar).
SpinorField apply_coupled_sc_step(const SpinorField& field, double dx, double potential_value,
                                  const CoupledStepOptions& opts = {});

} // namespace stsqm
