#include "stsqm/momentum_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stsqm {

double TwoByTwoComplex::max_abs() const {
    return std::max(std::max(std::abs(a11), std::abs(a12)), std::max(std::abs(a21), std::abs(a22)));
}

double AnticommutationReport::max_residual() const {
    return std::max(std::max(alpha_sq_residual, beta_sq_residual), anticommutator_residual);
}

std::pair<cplx, cplx> px_eigenvalue_sigma_z(const ModeCoordinates& mode, const PhysicalConstants& pc) {
    pc.validate();
    const double disp = 2.0 * pc.mass * (mode.energy - mode.potential_value) - mode.p_perp_sq();
    const cplx lambda = std::sqrt(cplx(disp, 0.0));
    return {lambda, -lambda};
}

TwoByTwoComplex dirac_split_matrix(const ModeCoordinates& mode, const PhysicalConstants& pc,
                                   SplitForm form) {
    pc.validate();
    const double two_m = 2.0 * pc.mass;
    cplx drift, coupling;
    switch (form) {
        case SplitForm::sigma_z_full:
            drift = std::sqrt(cplx(two_m * (mode.energy - mode.potential_value) - mode.p_perp_sq(),
                                   0.0));
            coupling = 0.0;
            break;
        case SplitForm::energy_drift:
            drift = std::sqrt(cplx(two_m * mode.energy, 0.0));
            coupling = std::sqrt(cplx(two_m * mode.potential_value + mode.p_perp_sq(), 0.0));
            break;
        case SplitForm::transverse_drift:
            drift = std::sqrt(cplx(two_m * mode.energy - mode.p_perp_sq(), 0.0));
            coupling = std::sqrt(cplx(two_m * mode.potential_value, 0.0));
            break;
    }
    const cplx ic = cplx(0.0, 1.0) * coupling;
    return {drift, ic, ic, -drift};
}

AnticommutationReport verify_anticommutation(const TwoByTwoComplex& alpha, const TwoByTwoComplex& beta) {
    const TwoByTwoComplex id = TwoByTwoComplex::identity();
    AnticommutationReport r;
    r.alpha_sq_residual = (alpha * alpha - id).max_abs();
    r.beta_sq_residual = (beta * beta - id).max_abs();
    r.anticommutator_residual = (alpha * beta + beta * alpha).max_abs();
    r.ok = r.max_residual() <= 1e-14;
    return r;
}

Potential1D Potential1D::constant(double v0) {
    return {[v0](double) { return v0; }, [](double) { return 0.0; }};
}

Potential1D Potential1D::smooth_step(double v0, double width) {
    if (!(width > 0.0)) throw std::domain_error("smooth_step: width must be > 0");
    auto value = [v0, width](double x) { return v0 / (1.0 + std::exp(-x / width)); };
    auto deriv = [v0, width](double x) {
        const double e = std::exp(-x / width);
        const double d = 1.0 + e;
        return v0 * e / (width * d * d);
    };
    return {value, deriv};
}

namespace {

struct State2 {
    cplx phi, dphi;
    State2 operator+(const State2& o) const { return {phi + o.phi, dphi + o.dphi}; }
    State2 scaled(double c) const { return {c * phi, c * dphi}; }
};

} // namespace

StationarySolution integrate_stationary_sc(cplx phi0, cplx dphi0, double energy,
                                           const Potential1D& potential, const UniformGrid1D& x_grid,
                                           Branch branch, const PhysicalConstants& pc, double v_min) {
    pc.validate();
    if (!potential.value || !potential.derivative)
        throw std::domain_error("integrate_stationary_sc: potential needs value and derivative");

    const double hbar = pc.hbar, m = pc.mass;
    const cplx sqrt_e_2m = std::sqrt(cplx(energy / (2.0 * m), 0.0));
    const double branch_sign = (branch == Branch::plus) ? 1.0 : -1.0;

    auto rhs = [&](double x, const State2& u) -> State2 {
        const double v = potential.value(x);
        if (std::abs(v) < v_min)
            throw std::runtime_error(
                "integrate_stationary_sc: singular 1/V coefficient, |V(" + std::to_string(x) +
                ")| = " + std::to_string(std::abs(v)) + " < v_min = " + std::to_string(v_min));
        const double dv = potential.derivative(x);
        const double log_half = dv / (2.0 * v);
        // phi'' = (V'/2V) phi' + (2m/hbar^2) (V -+ i hbar sqrt(eps/2m) V'/(2V) - eps) phi
        const cplx eff = cplx(v - energy, 0.0) -
                         branch_sign * cplx(0.0, 1.0) * hbar * sqrt_e_2m * log_half;
        const cplx ddphi = log_half * u.dphi + (2.0 * m / (hbar * hbar)) * eff * u.phi;
        return {u.dphi, ddphi};
    };

    StationarySolution sol;
    sol.x_grid = x_grid;
    sol.energy = energy;
    sol.branch = branch;
    sol.values.resize(static_cast<std::size_t>(x_grid.n));
    sol.derivatives.resize(static_cast<std::size_t>(x_grid.n));

    State2 u{phi0, dphi0};
    const double h = x_grid.spacing;
    sol.values[0] = u.phi;
    sol.derivatives[0] = u.dphi;
    for (int k = 0; k + 1 < x_grid.n; ++k) {
        const double x = x_grid.point(k);
        const State2 k1 = rhs(x, u);
        const State2 k2 = rhs(x + 0.5 * h, u + k1.scaled(0.5 * h));
        const State2 k3 = rhs(x + 0.5 * h, u + k2.scaled(0.5 * h));
        const State2 k4 = rhs(x + h, u + k3.scaled(h));
        u = u + (k1 + k2.scaled(2.0) + k3.scaled(2.0) + k4).scaled(h / 6.0);
        sol.values[static_cast<std::size_t>(k + 1)] = u.phi;
        sol.derivatives[static_cast<std::size_t>(k + 1)] = u.dphi;
    }
    return sol;
}

StationaryProfile combine_stationary(const StationarySolution& plus, const StationarySolution& minus) {
    if (!grids_compatible(plus.x_grid, minus.x_grid) || plus.energy != minus.energy)
        throw std::domain_error("combine_stationary: solutions disagree on grid or energy");
    return {plus.x_grid, plus.values, minus.values, plus.energy};
}

SpinorField apply_coupled_sc_step(const SpinorField& field, double dx, double potential_value,
                                  const CoupledStepOptions& opts) {
    opts.constants.validate();
    const double hbar = opts.constants.hbar;
    const std::size_t nt = static_cast<std::size_t>(field.t_grid.n);
    const std::size_t np = field.transverse_size();
    if (field.plus.size() != nt * np || field.minus.size() != nt * np)
        throw std::domain_error("apply_coupled_sc_step: field sample counts do not match grids");

    // Go to (eps, p_perp) mode space: energy transform along t, momentum
    // transform along every transverse axis.
    auto to_modes = [&](const std::vector<cplx>& comp) {
        std::vector<cplx> modes(comp);
        // t axis (stride np, contiguous rows of length np per t index)
        {
            std::vector<cplx> line(nt), out;
            for (std::size_t j = 0; j < np; ++j) {
                for (std::size_t k = 0; k < nt; ++k) line[k] = modes[k * np + j];
                out = forward_transform(line, field.t_grid, kEnergyPair, hbar);
                for (std::size_t k = 0; k < nt; ++k) modes[k * np + j] = out[k];
            }
        }
        // transverse axes
        std::size_t inner = np;
        for (const auto& g : field.transverse) {
            const std::size_t n = static_cast<std::size_t>(g.n);
            inner /= n;
            std::vector<cplx> line(n), out;
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t lead = 0; lead < np / (n * inner); ++lead)
                    for (std::size_t in = 0; in < inner; ++in) {
                        const std::size_t base = k * np + lead * n * inner + in;
                        for (std::size_t j = 0; j < n; ++j) line[j] = modes[base + j * inner];
                        out = forward_transform(line, g, kMomentumPair, hbar);
                        for (std::size_t j = 0; j < n; ++j) modes[base + j * inner] = out[j];
                    }
        }
        return modes;
    };
    auto from_modes = [&](std::vector<cplx> modes) {
        std::size_t inner = np;
        for (const auto& g : field.transverse) {
            const std::size_t n = static_cast<std::size_t>(g.n);
            inner /= n;
            std::vector<cplx> line(n), out;
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t lead = 0; lead < np / (n * inner); ++lead)
                    for (std::size_t in = 0; in < inner; ++in) {
                        const std::size_t base = k * np + lead * n * inner + in;
                        for (std::size_t j = 0; j < n; ++j) line[j] = modes[base + j * inner];
                        out = inverse_transform(line, g, kMomentumPair, hbar);
                        for (std::size_t j = 0; j < n; ++j) modes[base + j * inner] = out[j];
                    }
        }
        {
            std::vector<cplx> line(nt), out;
            for (std::size_t j = 0; j < np; ++j) {
                for (std::size_t k = 0; k < nt; ++k) line[k] = modes[k * np + j];
                out = inverse_transform(line, field.t_grid, kEnergyPair, hbar);
                for (std::size_t k = 0; k < nt; ++k) modes[k * np + j] = out[k];
            }
        }
        return modes;
    };

    std::vector<cplx> mp = to_modes(field.plus);
    std::vector<cplx> mm = to_modes(field.minus);

    // Mode coordinates per flattened index.
    const UniformGrid1D eps_grid = conjugate_grid(field.t_grid, hbar);
    std::vector<UniformGrid1D> perp_grids;
    perp_grids.reserve(field.transverse.size());
    for (const auto& g : field.transverse) perp_grids.push_back(conjugate_grid(g, hbar));

    // Stability scan first: reject the step rather than silently clamp.
    double max_im = 0.0;
    auto mode_at = [&](std::size_t k, std::size_t j) {
        ModeCoordinates mode;
        mode.energy = eps_grid.point(static_cast<int>(k));
        mode.potential_value = potential_value;
        std::size_t rem = j;
        std::size_t inner = np;
        for (const auto& g : perp_grids) {
            inner /= static_cast<std::size_t>(g.n);
            mode.p_perp.push_back(g.point(static_cast<int>(rem / inner)));
            rem %= inner;
        }
        return mode;
    };
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t j = 0; j < np; ++j) {
            const ModeCoordinates mode = mode_at(k, j);
            const double disp = 2.0 * opts.constants.mass * (mode.energy - potential_value) -
                                mode.p_perp_sq();
            const cplx z = std::sqrt(cplx(disp, 0.0)) * (dx / hbar);
            max_im = std::max(max_im, std::abs(z.imag()));
        }
    const double amplification = std::exp(max_im);
    if (amplification > opts.max_amplification)
        throw std::runtime_error("apply_coupled_sc_step: step spectral radius " +
                                 std::to_string(amplification) + " exceeds bound " +
                                 std::to_string(opts.max_amplification) +
                                 "; reduce dx or raise max_amplification");

    // Exact slab update exp(i M dx/hbar) = cos(z) I + i sinc(z) (dx/hbar) M,
    // z = lambda dx/hbar with lambda^2 = 2m(eps - V) - p_perp^2.
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t j = 0; j < np; ++j) {
            const ModeCoordinates mode = mode_at(k, j);
            const TwoByTwoComplex M = dirac_split_matrix(mode, opts.constants, opts.form);
            const double disp = 2.0 * opts.constants.mass * (mode.energy - potential_value) -
                                mode.p_perp_sq();
            const cplx z = std::sqrt(cplx(disp, 0.0)) * (dx / hbar);
            const cplx c = std::cos(z);
            const cplx s = (std::abs(z) < 1e-12) ? cplx(1.0, 0.0) : std::sin(z) / z;
            const cplx f = cplx(0.0, 1.0) * s * (dx / hbar);
            const std::size_t idx = k * np + j;
            const cplx up = mp[idx], um = mm[idx];
            mp[idx] = (c + f * M.a11) * up + f * M.a12 * um;
            mm[idx] = f * M.a21 * up + (c + f * M.a22) * um;
        }

    SpinorField out = field;
    out.plus = from_modes(std::move(mp));
    out.minus = from_modes(std::move(mm));
    out.plane_x = field.plane_x + dx;
    return out;
}

} // namespace stsqm
