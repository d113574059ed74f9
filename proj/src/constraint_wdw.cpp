#include "stsqm/constraint_wdw.hpp"

#include <cmath>
#include <stdexcept>

namespace stsqm {

namespace {

// H psi = (sum_a p_a^2 / 2m) psi, spectral, free particle.
ScalarField apply_free_hamiltonian(const ScalarField& f) {
    const double hbar = f.constants.hbar, m = f.constants.mass;
    ScalarField out = f;
    const std::size_t total = f.size();
    std::size_t inner = total;
    // Accumulate per-axis kinetic terms: sum over axes of (p^2/2m) along axis.
    std::vector<cplx> acc(total, cplx(0.0));
    for (std::size_t a = 0; a < f.grids.size(); ++a) {
        const UniformGrid1D& g = f.grids[a];
        const UniformGrid1D pg = conjugate_grid(g, hbar);
        const std::size_t n = static_cast<std::size_t>(g.n);
        inner /= n;
        const std::size_t outer = total / (n * inner);
        std::vector<cplx> mult(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double p = pg.point(static_cast<int>(j));
            mult[j] = cplx(p * p / (2.0 * m), 0.0);
        }
        std::vector<cplx> line(n), out_line;
        for (std::size_t lead = 0; lead < outer; ++lead)
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = lead * n * inner + in;
                for (std::size_t j = 0; j < n; ++j) line[j] = f.samples[base + j * inner];
                out_line = apply_spectral_multiplier(line, g, kMomentumPair, hbar, mult);
                for (std::size_t j = 0; j < n; ++j) acc[base + j * inner] += out_line[j];
            }
    }
    out.samples = std::move(acc);
    return out;
}

// P_x phi = sigma_z sqrt(2 m eps - p_perp^2) phi, spectral per branch.
SpinorField apply_px_sigma_z(const SpinorField& f) {
    const double hbar = f.constants.hbar, m = f.constants.mass;
    const std::size_t nt = static_cast<std::size_t>(f.t_grid.n);
    const std::size_t nj = f.transverse_size();
    const UniformGrid1D eps_grid = conjugate_grid(f.t_grid, hbar);

    std::vector<UniformGrid1D> perp_grids;
    for (const auto& g : f.transverse) perp_grids.push_back(conjugate_grid(g, hbar));
    std::vector<double> perp2(nj, 0.0);
    for (std::size_t j = 0; j < nj; ++j) {
        double s = 0.0;
        std::size_t rem = j, in = nj;
        for (const auto& g : perp_grids) {
            in /= static_cast<std::size_t>(g.n);
            const double p = g.point(static_cast<int>(rem / in));
            s += p * p;
            rem %= in;
        }
        perp2[j] = s;
    }

    SpinorField out = f;
    for (int r = 0; r < 2; ++r) {
        const std::vector<cplx>& in = (r == 0) ? f.plus : f.minus;
        std::vector<cplx>& dst = (r == 0) ? out.plus : out.minus;
        const double rs = (r == 0) ? +1.0 : -1.0;
        std::vector<cplx> modes(in);

        // to (eps, p_perp) space
        {
            std::vector<cplx> line(nt), out_line;
            for (std::size_t j = 0; j < nj; ++j) {
                for (std::size_t k = 0; k < nt; ++k) line[k] = modes[k * nj + j];
                out_line = forward_transform(line, f.t_grid, kEnergyPair, hbar);
                for (std::size_t k = 0; k < nt; ++k) modes[k * nj + j] = out_line[k];
            }
        }
        {
            std::size_t inner = nj;
            for (std::size_t a = 0; a < f.transverse.size(); ++a) {
                const UniformGrid1D& g = f.transverse[a];
                const std::size_t n = static_cast<std::size_t>(g.n);
                inner /= n;
                const std::size_t outer = nj / (n * inner);
                std::vector<cplx> line(n), out_line;
                for (std::size_t k = 0; k < nt; ++k)
                    for (std::size_t lead = 0; lead < outer; ++lead)
                        for (std::size_t in2 = 0; in2 < inner; ++in2) {
                            const std::size_t base = k * nj + lead * n * inner + in2;
                            for (std::size_t j = 0; j < n; ++j) line[j] = modes[base + j * inner];
                            out_line = forward_transform(line, g, kMomentumPair, hbar);
                            for (std::size_t j = 0; j < n; ++j) modes[base + j * inner] = out_line[j];
                        }
            }
        }

        for (std::size_t k = 0; k < nt; ++k) {
            const double eps = eps_grid.point(static_cast<int>(k));
            for (std::size_t j = 0; j < nj; ++j) {
                const cplx lambda = std::sqrt(cplx(2.0 * m * eps - perp2[j], 0.0));
                modes[k * nj + j] *= rs * lambda;
            }
        }

        // back to (t, y) space
        {
            std::size_t inner = nj;
            for (std::size_t a = 0; a < f.transverse.size(); ++a) {
                const UniformGrid1D& g = f.transverse[a];
                const std::size_t n = static_cast<std::size_t>(g.n);
                inner /= n;
                const std::size_t outer = nj / (n * inner);
                std::vector<cplx> line(n), out_line;
                for (std::size_t k = 0; k < nt; ++k)
                    for (std::size_t lead = 0; lead < outer; ++lead)
                        for (std::size_t in2 = 0; in2 < inner; ++in2) {
                            const std::size_t base = k * nj + lead * n * inner + in2;
                            for (std::size_t j = 0; j < n; ++j) line[j] = modes[base + j * inner];
                            out_line = inverse_transform(line, g, kMomentumPair, hbar);
                            for (std::size_t j = 0; j < n; ++j) modes[base + j * inner] = out_line[j];
                        }
            }
        }
        {
            std::vector<cplx> line(nt), out_line;
            for (std::size_t j = 0; j < nj; ++j) {
                for (std::size_t k = 0; k < nt; ++k) line[k] = modes[k * nj + j];
                out_line = inverse_transform(line, f.t_grid, kEnergyPair, hbar);
                for (std::size_t k = 0; k < nt; ++k) modes[k * nj + j] = out_line[k];
            }
        }
        dst = std::move(modes);
    }
    return out;
}

double slice_norm2(const HistoryState& h, int k) {
    if (h.mu == 0) return h.time_slices[static_cast<std::size_t>(k)].norm2();
    return sc_norm(h.space_slices[static_cast<std::size_t>(k)]);
}

std::size_t slice_len(const HistoryState& h) {
    if (h.mu == 0) return h.time_slices.front().size();
    return 2 * h.space_slices.front().size(); // both branches, flattened
}

double slice_cell(const HistoryState& h) {
    if (h.mu == 0) return h.time_slices.front().cell_volume();
    return h.space_slices.front().cell_volume();
}

// Copy slice k into a flat row (branches concatenated for mu = 1).
void slice_row(const HistoryState& h, int k, std::vector<cplx>& row) {
    if (h.mu == 0) {
        const auto& s = h.time_slices[static_cast<std::size_t>(k)].samples;
        row.assign(s.begin(), s.end());
    } else {
        const auto& f = h.space_slices[static_cast<std::size_t>(k)];
        row.assign(f.plus.begin(), f.plus.end());
        row.insert(row.end(), f.minus.begin(), f.minus.end());
    }
}

// Apply the slice-wise generator to slice k, flattened like slice_row.
void apply_generator(const HistoryState& h, int k, std::vector<cplx>& row) {
    if (h.mu == 0) {
        const ScalarField g = apply_free_hamiltonian(h.time_slices[static_cast<std::size_t>(k)]);
        row.assign(g.samples.begin(), g.samples.end());
    } else {
        const SpinorField g = apply_px_sigma_z(h.space_slices[static_cast<std::size_t>(k)]);
        row.assign(g.plus.begin(), g.plus.end());
        row.insert(row.end(), g.minus.begin(), g.minus.end());
    }
}

} // namespace

HistoryState build_history_time(const TCMomentumAmplitude& amp, const UniformGrid1D& t_grid,
                                std::span<const UniformGrid1D> x_grids) {
    HistoryState h;
    h.mu = 0;
    h.slice_axis = t_grid;
    h.constants = amp.constants;
    h.time_slices.reserve(static_cast<std::size_t>(t_grid.n));
    for (int k = 0; k < t_grid.n; ++k)
        h.time_slices.push_back(tc_position_field(amp, t_grid.point(k), x_grids));
    return h;
}

HistoryState build_history_space(const SCMomentumAmplitude& amp, const UniformGrid1D& x_grid,
                                 const UniformGrid1D& t_grid,
                                 std::span<const UniformGrid1D> transverse_grids, int mu) {
    if (mu < 1 || mu > 3)
        throw std::domain_error("build_history_space: mu must be 1, 2, or 3");
    HistoryState h;
    h.mu = mu;
    h.slice_axis = x_grid;
    h.constants = amp.constants;
    h.space_slices.reserve(static_cast<std::size_t>(x_grid.n));
    for (int k = 0; k < x_grid.n; ++k)
        h.space_slices.push_back(sc_field(amp, x_grid.point(k), t_grid, transverse_grids));
    return h;
}

ConstraintReport constraint_residual(const HistoryState& history, SliceDerivative derivative) {
    const int K = history.slice_count();
    if (K < 4) throw std::domain_error("constraint_residual: need at least 4 slices");
    const double hbar = history.constants.hbar;
    const std::size_t len = slice_len(history);
    const double cell = slice_cell(history);
    const double ds = history.slice_axis.spacing;

    // Slice-axis momentum p^mu: mu = 0 -> +i hbar d/dt (energy pair),
    // mu = 1 -> -i hbar d/dx (momentum pair).  Both reduce to multiplication by
    // the conjugate-grid value in the matching transform convention.
    std::vector<std::vector<cplx>> gen(static_cast<std::size_t>(K)), mom(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) apply_generator(history, k, gen[static_cast<std::size_t>(k)]);

    if (derivative == SliceDerivative::spectral) {
        const int pair = (history.mu == 0) ? kEnergyPair : kMomentumPair;
        const UniformGrid1D conj = conjugate_grid(history.slice_axis, hbar);
        std::vector<cplx> mult(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) mult[static_cast<std::size_t>(k)] = cplx(conj.point(k), 0.0);
        std::vector<cplx> series(static_cast<std::size_t>(K)), out_series;
        std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) slice_row(history, k, rows[static_cast<std::size_t>(k)]);
        for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k)
            mom[k].assign(len, cplx(0.0));
        for (std::size_t j = 0; j < len; ++j) {
            for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) series[k] = rows[k][j];
            out_series = apply_spectral_multiplier(series, history.slice_axis, pair, hbar, mult);
            for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) mom[k][j] = out_series[k];
        }
    } else {
        std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) slice_row(history, k, rows[static_cast<std::size_t>(k)]);
        const double sgn = (history.mu == 0) ? +1.0 : -1.0;
        const cplx f = sgn * cplx(0.0, 1.0) * hbar / (2.0 * ds);
        for (int k = 1; k + 1 < K; ++k) {
            mom[static_cast<std::size_t>(k)].resize(len);
            for (std::size_t j = 0; j < len; ++j)
                mom[static_cast<std::size_t>(k)][j] =
                    f * (rows[static_cast<std::size_t>(k + 1)][j] - rows[static_cast<std::size_t>(k - 1)][j]);
        }
    }

    double num = 0.0, den_gen = 0.0, den_mom = 0.0;
    const int k_lo = (derivative == SliceDerivative::centered) ? 1 : 0;
    const int k_hi = (derivative == SliceDerivative::centered) ? K - 1 : K;
    for (int k = k_lo; k < k_hi; ++k) {
        const auto& g = gen[static_cast<std::size_t>(k)];
        const auto& p = mom[static_cast<std::size_t>(k)];
        for (std::size_t j = 0; j < len; ++j) {
            num += std::norm(g[j] - p[j]);
            den_gen += std::norm(g[j]);
            den_mom += std::norm(p[j]);
        }
    }
    const double meas = cell * ds;

    ConstraintReport rep;
    rep.derivative = derivative;
    rep.slice_spacing = ds;
    rep.residual_l2 = std::sqrt(num * meas);
    const double den = std::max(den_gen, den_mom);
    rep.relative_residual = (den > 0.0) ? std::sqrt(num / den) : 0.0;
    rep.slice_norms = slice_norm_report(history);
    return rep;
}

double verify_generalized_evolution(const HistoryState& history) {
    const int K = history.slice_count();
    if (K < 4) throw std::domain_error("verify_generalized_evolution: need at least 4 slices");
    const double hbar = history.constants.hbar;
    const double ds = history.slice_axis.spacing;
    const std::size_t len = slice_len(history);

    // eta = diag(1,-1,-1,-1): P^0 phi = +i hbar d/dt phi, P^1 phi = -i hbar d/dx phi.
    const double sgn = (history.mu == 0) ? +1.0 : -1.0;
    const cplx f = sgn * cplx(0.0, 1.0) * hbar / (2.0 * ds);

    std::vector<cplx> gen, prev, next;
    double num = 0.0, den = 0.0;
    std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) slice_row(history, k, rows[static_cast<std::size_t>(k)]);
    for (int k = 1; k + 1 < K; ++k) {
        apply_generator(history, k, gen);
        const auto& rp = rows[static_cast<std::size_t>(k + 1)];
        const auto& rm = rows[static_cast<std::size_t>(k - 1)];
        for (std::size_t j = 0; j < len; ++j) {
            const cplx rhs = f * (rp[j] - rm[j]);
            num += std::norm(gen[j] - rhs);
            den += std::norm(gen[j]);
        }
    }
    return (den > 0.0) ? std::sqrt(num / den) : 0.0;
}

const ScalarField& project_time_slice(const HistoryState& history, int k) {
    if (history.mu != 0) throw std::domain_error("project_time_slice: history is not mu = 0");
    if (k < 0 || k >= history.slice_count())
        throw std::domain_error("project_time_slice: index out of range");
    return history.time_slices[static_cast<std::size_t>(k)];
}

const SpinorField& project_space_slice(const HistoryState& history, int k) {
    if (history.mu < 1 || history.mu > 3)
        throw std::domain_error("project_space_slice: history is not spatial (mu in {1,2,3})");
    if (k < 0 || k >= history.slice_count())
        throw std::domain_error("project_space_slice: index out of range");
    return history.space_slices[static_cast<std::size_t>(k)];
}

std::vector<double> slice_norm_report(const HistoryState& history) {
    std::vector<double> norms(static_cast<std::size_t>(history.slice_count()));
    for (int k = 0; k < history.slice_count(); ++k)
        norms[static_cast<std::size_t>(k)] = std::sqrt(slice_norm2(history, k));
    return norms;
}

} // namespace stsqm
