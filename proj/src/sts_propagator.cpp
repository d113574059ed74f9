#include "stsqm/sts_propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stsqm {

namespace {

// 8-point Gauss-Legendre abscissae/weights on [-1, 1].
constexpr double kGlx[4] = {0.18343464249564980494, 0.52553240991632898582,
                            0.79666647741362673959, 0.96028985649753623168};
constexpr double kGlw[4] = {0.36268378337836198297, 0.31370664587788728734,
                            0.22238103445337447054, 0.10122853629037625915};

} // namespace

PxQuadrature PxQuadrature::gauss_legendre(double lo, double hi, int panels) {
    if (!(hi > lo) || lo < 0.0)
        throw std::domain_error("PxQuadrature: need 0 <= lo < hi");
    if (panels < 1) throw std::domain_error("PxQuadrature: need at least one panel");
    PxQuadrature q;
    q.lo = lo;
    q.hi = hi;
    q.panels = panels;
    const double w = (hi - lo) / panels;
    q.nodes.reserve(static_cast<std::size_t>(panels) * 8);
    q.weights.reserve(static_cast<std::size_t>(panels) * 8);
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * w, c = a + 0.5 * w, h = 0.5 * w;
        for (int i = 3; i >= 0; --i) {
            q.nodes.push_back(c - h * kGlx[i]);
            q.weights.push_back(h * kGlw[i]);
        }
        for (int i = 0; i < 4; ++i) {
            q.nodes.push_back(c + h * kGlx[i]);
            q.weights.push_back(h * kGlw[i]);
        }
    }
    return q;
}

double SCMomentumAmplitude::perp_sq(std::size_t j) const {
    double s = 0.0;
    std::size_t rem = j;
    std::size_t inner = perp_size();
    for (const auto& g : transverse_p) {
        inner /= static_cast<std::size_t>(g.n);
        const double p = g.point(static_cast<int>(rem / inner));
        s += p * p;
        rem %= inner;
    }
    return s;
}

namespace {

// Fills branch samples phi~(r p_i, p_perp_j) from a Gaussian spec whose axis 0
// is longitudinal and remaining axes transverse (transverse axes are
// discrete-normalized on their grids, the longitudinal factor stays continuum
// normalized and is judged by the quadrature itself).
void fill_from_gaussian(SCMomentumAmplitude& amp, const GaussianPacketSpec& spec) {
    const std::size_t np = amp.px.size();
    const std::size_t nj = amp.perp_size();
    amp.plus.assign(np * nj, cplx(0.0));
    amp.minus.assign(np * nj, cplx(0.0));

    // Transverse per-axis samples, discrete-normalized.
    std::vector<std::vector<cplx>> perp_axis;
    for (std::size_t a = 1; a < spec.axes(); ++a) {
        const UniformGrid1D& g = amp.transverse_p[a - 1];
        std::vector<cplx> s(static_cast<std::size_t>(g.n));
        double n2 = 0.0;
        for (int k = 0; k < g.n; ++k) {
            s[static_cast<std::size_t>(k)] = gaussian_amplitude_value(spec, a, g.point(k), amp.constants);
            n2 += std::norm(s[static_cast<std::size_t>(k)]);
        }
        n2 *= g.spacing;
        const double scale = 1.0 / std::sqrt(n2);
        for (auto& v : s) v *= scale;
        perp_axis.push_back(std::move(s));
    }

    std::vector<cplx> perp_flat(nj, cplx(1.0));
    std::size_t stride = nj;
    for (const auto& s : perp_axis) {
        stride /= s.size();
        for (std::size_t j = 0; j < nj; ++j) perp_flat[j] *= s[(j / stride) % s.size()];
    }

    for (std::size_t i = 0; i < np; ++i) {
        const double p = amp.px.nodes[i];
        const cplx ap = gaussian_amplitude_value(spec, 0, +p, amp.constants);
        const cplx am = gaussian_amplitude_value(spec, 0, -p, amp.constants);
        for (std::size_t j = 0; j < nj; ++j) {
            amp.plus[i * nj + j] = ap * perp_flat[j];
            amp.minus[i * nj + j] = am * perp_flat[j];
        }
    }

    // Captured mass vs the exact unit norm of the continuum packet.
    double captured = sc_norm(amp);
    amp.metadata.truncation_loss = std::max(0.0, 1.0 - captured);
    if (amp.metadata.truncation_loss > 1e-3)
        throw std::runtime_error("SCMomentumAmplitude: support truncation loses " +
                                 std::to_string(amp.metadata.truncation_loss) +
                                 " of the norm (> 1e-3); widen the p_x support");
    if (amp.metadata.truncation_loss > 1e-6)
        amp.metadata.warnings.push_back("support truncation loses more than 1e-6 of the norm");
}

int auto_panels(double lo, double hi, double sigma) {
    const int p = static_cast<int>(std::ceil((hi - lo) / sigma)) * 8;
    return std::clamp(p, 32, 1024);
}

} // namespace

SCMomentumAmplitude SCMomentumAmplitude::from_gaussian(const GaussianPacketSpec& spec,
                                                       std::span<const UniformGrid1D> transverse_p,
                                                       const PhysicalConstants& pc, int panels,
                                                       double tail_mass) {
    spec.validate();
    pc.validate();
    if (transverse_p.size() + 1 != spec.axes())
        throw std::domain_error("from_gaussian: expected one transverse grid per non-longitudinal axis");
    auto [lo, hi] = gaussian_support(spec, 0, tail_mass);
    lo = std::max(0.0, lo);
    if (!(hi > lo)) throw std::domain_error("from_gaussian: packet support lies at p_x <= 0");
    return from_gaussian_on_support(spec, lo, hi, transverse_p, pc, panels);
}

SCMomentumAmplitude SCMomentumAmplitude::from_gaussian_on_support(
    const GaussianPacketSpec& spec, double support_lo, double support_hi,
    std::span<const UniformGrid1D> transverse_p, const PhysicalConstants& pc, int panels) {
    spec.validate();
    pc.validate();
    SCMomentumAmplitude amp;
    amp.constants = pc;
    amp.transverse_p.assign(transverse_p.begin(), transverse_p.end());
    if (panels <= 0) panels = auto_panels(support_lo, support_hi, spec.momentum_width[0]);
    amp.px = PxQuadrature::gauss_legendre(support_lo, support_hi, panels);
    fill_from_gaussian(amp, spec);
    return amp;
}

SCMomentumAmplitude SCMomentumAmplitude::from_modes(std::span<const Mode> modes,
                                                    std::span<const UniformGrid1D> transverse_p,
                                                    const PhysicalConstants& pc) {
    pc.validate();
    if (modes.empty()) throw std::domain_error("from_modes: empty mode list");
    SCMomentumAmplitude amp;
    amp.constants = pc;
    amp.transverse_p.assign(transverse_p.begin(), transverse_p.end());
    amp.metadata.improper = true;

    // One single-node "panel" per distinct p_x, weight 1; the stored value
    // absorbs sqrt(m/p_x) so the synthesized plane wave has unit coefficient.
    std::vector<double> nodes;
    for (const auto& m : modes) {
        if (!(m.p_x > 0.0)) throw std::domain_error("from_modes: p_x must be > 0");
        if (std::find(nodes.begin(), nodes.end(), m.p_x) == nodes.end()) nodes.push_back(m.p_x);
    }
    std::sort(nodes.begin(), nodes.end());
    amp.px.nodes = nodes;
    amp.px.weights.assign(nodes.size(), 1.0);
    amp.px.lo = nodes.front();
    amp.px.hi = nodes.back();
    amp.px.panels = static_cast<int>(nodes.size());

    const std::size_t nj = amp.perp_size();
    amp.plus.assign(nodes.size() * nj, cplx(0.0));
    amp.minus.assign(nodes.size() * nj, cplx(0.0));
    const double cell = amp.perp_cell();
    for (const auto& m : modes) {
        if (m.p_perp.size() != amp.transverse_p.size())
            throw std::domain_error("from_modes: transverse component count mismatch");
        const std::size_t i = static_cast<std::size_t>(
            std::find(amp.px.nodes.begin(), amp.px.nodes.end(), m.p_x) - amp.px.nodes.begin());
        std::size_t j = 0;
        std::size_t inner = nj;
        for (std::size_t a = 0; a < amp.transverse_p.size(); ++a) {
            inner /= static_cast<std::size_t>(amp.transverse_p[a].n);
            j += static_cast<std::size_t>(amp.transverse_p[a].nearest_index(m.p_perp[a])) * inner;
        }
        const cplx value = m.amplitude * std::sqrt(pc.mass / m.p_x) / (cell == 0.0 ? 1.0 : cell);
        if (m.branch >= 0)
            amp.plus[i * nj + j] += value;
        else
            amp.minus[i * nj + j] += value;
    }
    return amp;
}

double SCEnergyAmplitude::energy_at(std::size_t node, std::size_t perp_idx) const {
    SCMomentumAmplitude tmp;
    tmp.transverse_p = transverse_p;
    const double p = px.nodes[node];
    return (p * p + tmp.perp_sq(perp_idx)) / (2.0 * constants.mass);
}

SCMomentumAmplitude energy_to_momentum(const SCEnergyAmplitude& amp) {
    SCMomentumAmplitude out;
    out.px = amp.px;
    out.transverse_p = amp.transverse_p;
    out.plane_offset = amp.plane_offset;
    out.constants = amp.constants;
    out.metadata = amp.metadata;
    const std::size_t nj = out.perp_size();
    out.plus.resize(amp.plus.size());
    out.minus.resize(amp.minus.size());
    for (std::size_t i = 0; i < amp.px.size(); ++i) {
        const double jac = std::sqrt(amp.px.nodes[i] / amp.constants.mass);
        for (std::size_t j = 0; j < nj; ++j) {
            out.plus[i * nj + j] = jac * amp.plus[i * nj + j];
            out.minus[i * nj + j] = jac * amp.minus[i * nj + j];
        }
    }
    return out;
}

SCEnergyAmplitude momentum_to_energy(const SCMomentumAmplitude& amp) {
    SCEnergyAmplitude out;
    out.px = amp.px;
    out.transverse_p = amp.transverse_p;
    out.plane_offset = amp.plane_offset;
    out.constants = amp.constants;
    out.metadata = amp.metadata;
    const std::size_t nj = amp.perp_size();
    out.plus.resize(amp.plus.size());
    out.minus.resize(amp.minus.size());
    for (std::size_t i = 0; i < amp.px.size(); ++i) {
        const double p = amp.px.nodes[i];
        if (p == 0.0) {
            out.metadata.flagged_px_zero = true;
            out.metadata.warnings.push_back("p_x = 0 node: Jacobian p_x/m vanishes, value flagged");
            for (std::size_t j = 0; j < nj; ++j) {
                out.plus[i * nj + j] = amp.plus[i * nj + j];
                out.minus[i * nj + j] = amp.minus[i * nj + j];
            }
            continue;
        }
        const double inv_jac = std::sqrt(amp.constants.mass / p);
        for (std::size_t j = 0; j < nj; ++j) {
            out.plus[i * nj + j] = inv_jac * amp.plus[i * nj + j];
            out.minus[i * nj + j] = inv_jac * amp.minus[i * nj + j];
        }
    }
    return out;
}

SCMomentumAmplitude shift_to_plane(const SCMomentumAmplitude& amp, double x) {
    SCMomentumAmplitude out = amp;
    out.plane_offset += x;
    return out;
}

SCMomentumAmplitude materialize_plane_phase(const SCMomentumAmplitude& amp) {
    SCMomentumAmplitude out = amp;
    if (amp.plane_offset == 0.0) return out;
    const std::size_t nj = amp.perp_size();
    for (std::size_t i = 0; i < amp.px.size(); ++i) {
        const double theta = amp.px.nodes[i] * amp.plane_offset / amp.constants.hbar;
        const cplx fp = std::polar(1.0, +theta), fm = std::polar(1.0, -theta);
        for (std::size_t j = 0; j < nj; ++j) {
            out.plus[i * nj + j] *= fp;
            out.minus[i * nj + j] *= fm;
        }
    }
    out.plane_offset = 0.0;
    return out;
}

SpinorField sc_field(const SCMomentumAmplitude& amp, double x, const UniformGrid1D& t_grid,
                     std::span<const UniformGrid1D> transverse_grids, const SCFieldOptions& opts) {
    if (transverse_grids.size() != amp.transverse_p.size())
        throw std::domain_error("sc_field: transverse axis count mismatch");
    for (std::size_t a = 0; a < transverse_grids.size(); ++a)
        if (!conjugate_compatible(transverse_grids[a], amp.transverse_p[a], amp.constants.hbar))
            throw std::domain_error("sc_field: transverse grid axis " + std::to_string(a) +
                                    " not conjugate-compatible with the amplitude");

    const double hbar = amp.constants.hbar, m = amp.constants.mass;
    const std::size_t np = amp.px.size();
    const std::size_t nj = amp.perp_size();
    const std::size_t nt = static_cast<std::size_t>(t_grid.n);
    const double x_eff = x + amp.plane_offset;
    const double root_2pih = std::sqrt(2.0 * std::numbers::pi * hbar);

    SpinorField field;
    field.t_grid = t_grid;
    field.transverse.assign(transverse_grids.begin(), transverse_grids.end());
    field.plane_x = x;
    field.constants = amp.constants;
    field.plus.assign(nt * nj, cplx(0.0));
    field.minus.assign(nt * nj, cplx(0.0));

    // Accumulate G_r[k, j] = sum_i w_i sqrt(p_i/m) phi~_r(i,j) e^{i r p_i x/hbar}
    //                        * e^{-i eps_ij t_k / hbar}
    // with an exact-start rotation recurrence along t (the phase is linear in t).
    std::vector<double> perp2(nj);
    for (std::size_t j = 0; j < nj; ++j) perp2[j] = amp.perp_sq(j);

    for (int r = 0; r < 2; ++r) {
        const std::vector<cplx>& in = (r == 0) ? amp.plus : amp.minus;
        std::vector<cplx>& out = (r == 0) ? field.plus : field.minus;
        const double rs = (r == 0) ? +1.0 : -1.0;
        std::vector<cplx> carrier(nj), step(nj);
        for (std::size_t i = 0; i < np; ++i) {
            const double p = amp.px.nodes[i];
            const double coeff = amp.px.weights[i] * std::sqrt(p / m) / root_2pih;
            const cplx plane = std::polar(coeff, rs * p * x_eff / hbar);
            bool any = false;
            for (std::size_t j = 0; j < nj; ++j) {
                const cplx a = in[i * nj + j];
                if (a == cplx(0.0)) {
                    carrier[j] = cplx(0.0);
                    step[j] = cplx(1.0);
                    continue;
                }
                any = true;
                const double eps = (p * p + perp2[j]) / (2.0 * m);
                carrier[j] = plane * a * std::polar(1.0, -eps * t_grid.lo / hbar);
                step[j] = std::polar(1.0, -eps * t_grid.spacing / hbar);
            }
            if (!any) continue;
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t j = 0; j < nj; ++j) {
                    out[k * nj + j] += carrier[j];
                    carrier[j] *= step[j];
                }
        }
    }

    // Transverse synthesis (each inverse transform carries 1/sqrt(2 pi hbar)).
    for (std::size_t axis = 0; axis < field.transverse.size(); ++axis) {
        std::size_t inner = nj;
        for (std::size_t a = 0; a <= axis; ++a) inner /= static_cast<std::size_t>(field.transverse[a].n);
        const std::size_t n = static_cast<std::size_t>(field.transverse[axis].n);
        const std::size_t outer = nj / (n * inner);
        std::vector<cplx> line(n), out_line;
        for (auto* comp : {&field.plus, &field.minus})
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t lead = 0; lead < outer; ++lead)
                    for (std::size_t in = 0; in < inner; ++in) {
                        const std::size_t base = k * nj + lead * n * inner + in;
                        for (std::size_t j = 0; j < n; ++j) line[j] = (*comp)[base + j * inner];
                        out_line = inverse_transform(line, field.transverse[axis],
                                                     amp.transverse_p[axis], kMomentumPair, hbar);
                        for (std::size_t j = 0; j < n; ++j) (*comp)[base + j * inner] = out_line[j];
                    }
    }

    // Edge-amplitude containment check (wrap-around risk), reported not thrown.
    if (!amp.metadata.improper) {
        double peak = 0.0, edge = 0.0;
        for (std::size_t k = 0; k < nt; ++k)
            for (std::size_t j = 0; j < nj; ++j) {
                const double v = std::max(std::abs(field.plus[k * nj + j]),
                                          std::abs(field.minus[k * nj + j]));
                peak = std::max(peak, v);
                if (k == 0 || k + 1 == nt) edge = std::max(edge, v);
            }
        field.edge_amplitude_ratio = (peak > 0.0) ? edge / peak : 0.0;
        field.edge_contained = field.edge_amplitude_ratio <= opts.edge_fraction_warn;
    }
    return field;
}

double sc_norm(const SpinorField& field) {
    double s = 0.0;
    for (const auto& z : field.plus) s += std::norm(z);
    for (const auto& z : field.minus) s += std::norm(z);
    return s * field.cell_volume();
}

double sc_norm(const SCMomentumAmplitude& amp) {
    const std::size_t nj = amp.perp_size();
    const double cell = amp.perp_cell();
    double s = 0.0;
    for (std::size_t i = 0; i < amp.px.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < nj; ++j)
            row += std::norm(amp.plus[i * nj + j]) + std::norm(amp.minus[i * nj + j]);
        s += amp.px.weights[i] * row;
    }
    return s * cell;
}

double sc_norm(const SCEnergyAmplitude& amp) {
    // Same state, energy measure: d(eps) = (p/m) dp at fixed p_perp.
    const std::size_t nj = amp.plus.size() / std::max<std::size_t>(1, amp.px.size());
    double cell = 1.0;
    for (const auto& g : amp.transverse_p) cell *= g.spacing;
    double s = 0.0;
    for (std::size_t i = 0; i < amp.px.size(); ++i) {
        const double w_eps = amp.px.weights[i] * amp.px.nodes[i] / amp.constants.mass;
        double row = 0.0;
        for (std::size_t j = 0; j < nj; ++j)
            row += std::norm(amp.plus[i * nj + j]) + std::norm(amp.minus[i * nj + j]);
        s += w_eps * row;
    }
    return s * cell;
}

double sc_schrodinger_residual(const SpinorField& at_minus, const SpinorField& at_center,
                               const SpinorField& at_plus) {
    const SpinorField& f = at_center;
    if (!grids_compatible(at_minus.t_grid, f.t_grid) || !grids_compatible(at_plus.t_grid, f.t_grid) ||
        at_minus.transverse.size() != f.transverse.size() ||
        at_plus.transverse.size() != f.transverse.size())
        throw std::domain_error("sc_schrodinger_residual: field grids disagree");
    for (std::size_t a = 0; a < f.transverse.size(); ++a)
        if (!grids_compatible(at_minus.transverse[a], f.transverse[a]) ||
            !grids_compatible(at_plus.transverse[a], f.transverse[a]))
            throw std::domain_error("sc_schrodinger_residual: field grids disagree");
    const double dxm = f.plane_x - at_minus.plane_x;
    const double dxp = at_plus.plane_x - f.plane_x;
    if (std::abs(dxm - dxp) > 1e-12 * (std::abs(dxm) + std::abs(dxp)))
        throw std::domain_error("sc_schrodinger_residual: planes are not equally spaced");
    const double dx = 0.5 * (dxm + dxp);
    const double hbar = f.constants.hbar, m = f.constants.mass;

    const std::size_t nt = static_cast<std::size_t>(f.t_grid.n);
    const std::size_t nj = f.transverse_size();
    const UniformGrid1D eps_grid = conjugate_grid(f.t_grid, hbar);

    double num = 0.0, den = 0.0;
    for (int r = 0; r < 2; ++r) {
        const std::vector<cplx>& c = (r == 0) ? f.plus : f.minus;
        const std::vector<cplx>& cm = (r == 0) ? at_minus.plus : at_minus.minus;
        const std::vector<cplx>& cp = (r == 0) ? at_plus.plus : at_plus.minus;

        // lhs = [i hbar d/dt + (hbar^2/2m) lap_perp] phi, spectral.
        std::vector<cplx> lhs(c);
        {
            std::vector<cplx> mult(nt);
            for (std::size_t k = 0; k < nt; ++k)
                mult[k] = cplx(eps_grid.point(static_cast<int>(k)), 0.0);
            std::vector<cplx> line(nt), out_line;
            for (std::size_t j = 0; j < nj; ++j) {
                for (std::size_t k = 0; k < nt; ++k) line[k] = lhs[k * nj + j];
                out_line = apply_spectral_multiplier(line, f.t_grid, kEnergyPair, hbar, mult);
                for (std::size_t k = 0; k < nt; ++k) lhs[k * nj + j] = out_line[k];
            }
        }
        for (std::size_t axis = 0; axis < f.transverse.size(); ++axis) {
            const UniformGrid1D& g = f.transverse[axis];
            const UniformGrid1D pg = conjugate_grid(g, hbar);
            const std::size_t n = static_cast<std::size_t>(g.n);
            std::vector<cplx> mult(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double p = pg.point(static_cast<int>(j));
                mult[j] = cplx(-p * p / (2.0 * m), 0.0);
            }
            std::size_t inner = nj;
            for (std::size_t a = 0; a <= axis; ++a) inner /= static_cast<std::size_t>(f.transverse[a].n);
            const std::size_t outer = nj / (n * inner);
            std::vector<cplx> line(n), out_line;
            // lap term accumulates into lhs: transform, multiply, add back
            for (std::size_t k = 0; k < nt; ++k)
                for (std::size_t lead = 0; lead < outer; ++lead)
                    for (std::size_t in = 0; in < inner; ++in) {
                        const std::size_t base = k * nj + lead * n * inner + in;
                        for (std::size_t j = 0; j < n; ++j) line[j] = c[base + j * inner];
                        out_line = apply_spectral_multiplier(line, g, kMomentumPair, hbar, mult);
                        for (std::size_t j = 0; j < n; ++j) lhs[base + j * inner] += out_line[j];
                    }
        }

        const double fac = -hbar * hbar / (2.0 * m * dx * dx);
        for (std::size_t idx = 0; idx < nt * nj; ++idx) {
            const cplx rhs = fac * (cp[idx] - 2.0 * c[idx] + cm[idx]);
            num += std::norm(lhs[idx] - rhs);
            den += std::norm(lhs[idx]);
        }
    }
    if (den == 0.0) return 0.0;
    return std::sqrt(num / den);
}

} // namespace stsqm
