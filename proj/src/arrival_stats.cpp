#include "stsqm/arrival_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stsqm {

ArrivalDistribution arrival_density(const SpinorField& field) {
    const double norm = sc_norm(field);
    if (norm == 0.0) throw std::domain_error("arrival_density: field has zero norm");
    ArrivalDistribution dist;
    dist.axis_labels = {"t"};
    dist.axes = {field.t_grid};
    for (std::size_t a = 0; a < field.transverse.size(); ++a) {
        dist.axis_labels.push_back(a == 0 ? "y" : "z");
        dist.axes.push_back(field.transverse[a]);
    }
    dist.samples.resize(field.size());
    for (std::size_t idx = 0; idx < field.size(); ++idx)
        dist.samples[idx] = std::norm(field.plus[idx]) + std::norm(field.minus[idx]);
    dist.normalization_constant = norm;
    dist.metadata.captured_mass = dist.integral() / norm;
    dist.metadata.provenance = "arrival_density";
    return dist;
}

namespace {

void apply_window_policy(ArrivalDistribution& dist, const UniformGrid1D& t_grid,
                         const ArrivalWindowPolicy& policy) {
    dist.metadata.captured_mass = dist.integral() / dist.normalization_constant;
    if (!policy.enforce) return;
    const double missing = 1.0 - dist.metadata.captured_mass;
    if (missing > policy.error_tail) {
        // Suggest a window from the captured moments.
        const double mean = moment(dist, 1) / std::max(dist.metadata.captured_mass, 1e-300);
        double var = moment(dist, 2) / std::max(dist.metadata.captured_mass, 1e-300) - mean * mean;
        var = std::max(var, t_grid.spacing * t_grid.spacing);
        const double s = std::sqrt(var);
        throw std::runtime_error(
            "arrival_time_density: t window misses " + std::to_string(missing) +
            " of the mass (> " + std::to_string(policy.error_tail) + "); try approximately [" +
            std::to_string(mean - 8.0 * s) + ", " + std::to_string(mean + 8.0 * s) + "]");
    }
    if (missing > policy.warn_tail)
        dist.metadata.notes.push_back("t window misses more than warn_tail of the mass");
}

} // namespace

ArrivalDistribution arrival_time_density(const SCMomentumAmplitude& amp, double x,
                                         const UniformGrid1D& t_grid,
                                         const ArrivalWindowPolicy& policy) {
    const double hbar = amp.constants.hbar, m = amp.constants.mass;
    const std::size_t np = amp.px.size();
    const std::size_t nj = amp.perp_size();
    const std::size_t nt = static_cast<std::size_t>(t_grid.n);
    const double norm = sc_norm(amp);
    if (norm == 0.0 && !amp.metadata.improper)
        throw std::domain_error("arrival_time_density: zero amplitude");
    const double x_eff = x + amp.plane_offset;

    ArrivalDistribution dist;
    dist.axis_labels = {"t"};
    dist.axes = {t_grid};
    dist.samples.assign(nt, 0.0);
    dist.metadata.provenance = "arrival_time_density";

    // I_r(j, t) = sum_i w_i sqrt(p_i/(2 pi m hbar)) phi~_r(i,j)
    //             e^{-i p_i^2 t/(2 m hbar)} e^{i r p_i x/hbar}
    // Only p_x^2 enters the time phase (the transverse part cancels in the
    // modulus), so the t recurrence is shared across transverse modes.
    std::vector<cplx> acc(nt * nj);
    const double perp_cell = amp.perp_cell();
    for (int r = 0; r < 2; ++r) {
        const std::vector<cplx>& in = (r == 0) ? amp.plus : amp.minus;
        const double rs = (r == 0) ? +1.0 : -1.0;
        std::fill(acc.begin(), acc.end(), cplx(0.0));
        for (std::size_t i = 0; i < np; ++i) {
            const double p = amp.px.nodes[i];
            const double coeff =
                amp.px.weights[i] * std::sqrt(p / (2.0 * std::numbers::pi * m * hbar));
            const double eps_x = p * p / (2.0 * m);
            cplx carrier = std::polar(coeff, rs * p * x_eff / hbar - eps_x * t_grid.lo / hbar);
            const cplx step = std::polar(1.0, -eps_x * t_grid.spacing / hbar);
            for (std::size_t k = 0; k < nt; ++k) {
                for (std::size_t j = 0; j < nj; ++j) acc[k * nj + j] += carrier * in[i * nj + j];
                carrier *= step;
            }
        }
        for (std::size_t k = 0; k < nt; ++k) {
            double row = 0.0;
            for (std::size_t j = 0; j < nj; ++j) row += std::norm(acc[k * nj + j]);
            dist.samples[k] += row * perp_cell;
        }
    }

    if (amp.metadata.improper) {
        dist.normalization_constant = 1.0;
        dist.metadata.improper = true;
        dist.metadata.notes.push_back("improper (non-normalizable) input: unnormalized density");
        dist.metadata.captured_mass = 0.0;
        return dist;
    }
    dist.normalization_constant = norm;
    apply_window_policy(dist, t_grid, policy);
    return dist;
}

namespace {

// Composite Simpson weights (including the spacing factor) for m >= 2 uniform
// samples; falls back to a 3/8 tail when the interval count is odd.
std::vector<double> simpson_weights(std::size_t m, double dp) {
    if (m < 2) throw std::domain_error("simpson_weights: need at least two samples");
    std::vector<double> w(m, 0.0);
    if (m == 2) {
        w[0] = w[1] = 0.5 * dp;
        return w;
    }
    std::size_t intervals = m - 1;
    std::size_t simpson_end = m; // exclusive index of the plain-Simpson part
    bool tail38 = false;
    if (intervals % 2 != 0) {
        if (m < 4) { // 2 samples handled above; 3 samples always even intervals
            w[0] = w[2] = dp / 3.0;
            w[1] = 4.0 * dp / 3.0;
            return w;
        }
        simpson_end = m - 3;
        tail38 = true;
    }
    if (simpson_end >= 3) {
        w[0] += dp / 3.0;
        w[simpson_end - 1] += dp / 3.0;
        for (std::size_t i = 1; i + 1 < simpson_end; ++i)
            w[i] += (i % 2 == 1 ? 4.0 : 2.0) * dp / 3.0;
    } else if (simpson_end == 2) {
        w[0] += 0.5 * dp;
        w[1] += 0.5 * dp;
    }
    if (tail38) {
        const double c = 3.0 * dp / 8.0;
        w[m - 4] += c;
        w[m - 3] += 3.0 * c;
        w[m - 2] += 3.0 * c;
        w[m - 1] += c;
    }
    return w;
}

} // namespace

ArrivalDistribution kijowski_reference(const TCMomentumAmplitude& amp, double x,
                                       const UniformGrid1D& t_grid) {
    if (amp.p_grids.empty() || amp.p_grids.size() > 2)
        throw std::domain_error("kijowski_reference: needs a 1D or 2D momentum amplitude");
    const double hbar = amp.constants.hbar, m = amp.constants.mass;
    const UniformGrid1D& pg = amp.p_grids[0];
    const std::size_t nj = amp.p_grids.size() == 2 ? static_cast<std::size_t>(amp.p_grids[1].n) : 1;
    const double perp_cell = amp.p_grids.size() == 2 ? amp.p_grids[1].spacing : 1.0;
    const std::size_t nt = static_cast<std::size_t>(t_grid.n);

    // Split the full-line grid into the two half-line branches.
    std::vector<std::size_t> idx_plus, idx_minus;
    for (int k = 0; k < pg.n; ++k) {
        const double p = pg.point(k);
        if (p > 0.0) idx_plus.push_back(static_cast<std::size_t>(k));
        if (p < 0.0) idx_minus.push_back(static_cast<std::size_t>(k));
    }
    std::sort(idx_minus.begin(), idx_minus.end(),
              [&](std::size_t a, std::size_t b) { return pg.point(static_cast<int>(a)) > pg.point(static_cast<int>(b)); });

    double norm = 0.0;
    ArrivalDistribution dist;
    dist.axis_labels = {"t"};
    dist.axes = {t_grid};
    dist.samples.assign(nt, 0.0);
    dist.metadata.provenance = "kijowski_reference";

    std::vector<cplx> row(nj);
    for (int r = 0; r < 2; ++r) {
        const auto& idx = (r == 0) ? idx_plus : idx_minus;
        const double rs = (r == 0) ? +1.0 : -1.0;
        if (idx.size() < 2) continue;
        const std::size_t mcount = idx.size();
        const std::vector<double> sw = simpson_weights(mcount, pg.spacing);

        // q runs over |p| in increasing order; the norm uses the same rule.
        std::vector<double> q(mcount);
        std::vector<cplx> a(mcount * nj);
        for (std::size_t i = 0; i < mcount; ++i) {
            q[i] = std::abs(pg.point(static_cast<int>(idx[i])));
            for (std::size_t j = 0; j < nj; ++j)
                a[i * nj + j] = amp.samples[idx[i] * nj + j];
        }
        for (std::size_t i = 0; i < mcount; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < nj; ++j) s += std::norm(a[i * nj + j]);
            norm += sw[i] * s * perp_cell;
        }

        // Quadratic phase theta_i(t) = -q_i^2 t/(2 m hbar) + r q_i x/hbar walked
        // with a two-level rotation recurrence (the second difference of theta
        // is constant in i).
        const double dq = pg.spacing;
        for (std::size_t k = 0; k < nt; ++k) {
            const double t = t_grid.point(static_cast<int>(k));
            const double c1 = -t / (2.0 * m * hbar);
            std::fill(row.begin(), row.end(), cplx(0.0));
            cplx z = std::polar(1.0, c1 * q[0] * q[0] + rs * q[0] * x / hbar);
            cplx u = std::polar(1.0, c1 * (2.0 * q[0] * dq + dq * dq) + rs * dq * x / hbar);
            const cplx w2 = std::polar(1.0, c1 * 2.0 * dq * dq);
            for (std::size_t i = 0; i < mcount; ++i) {
                const double coeff = sw[i] * std::sqrt(q[i] / (2.0 * std::numbers::pi * m * hbar));
                const cplx zi = coeff * z;
                for (std::size_t j = 0; j < nj; ++j) row[j] += zi * a[i * nj + j];
                z *= u;
                u *= w2;
            }
            double s = 0.0;
            for (std::size_t j = 0; j < nj; ++j) s += std::norm(row[j]);
            dist.samples[k] += s * perp_cell;
        }
    }

    if (norm == 0.0) throw std::domain_error("kijowski_reference: zero amplitude");
    dist.normalization_constant = norm;
    dist.metadata.captured_mass = dist.integral() / norm;
    return dist;
}

double current_at_plane(const ScalarField& field, double plane_l) {
    if (field.grids.size() != 1)
        throw std::domain_error("current_at_plane: needs a 1D field");
    const UniformGrid1D& g = field.grids[0];
    const double hbar = field.constants.hbar, m = field.constants.mass;
    const UniformGrid1D pg = conjugate_grid(g, hbar);
    std::vector<cplx> mult(static_cast<std::size_t>(g.n));
    for (int j = 0; j < g.n; ++j)
        mult[static_cast<std::size_t>(j)] = cplx(0.0, 1.0) * (pg.point(j) / hbar);
    const std::vector<cplx> dpsi = apply_spectral_multiplier(field.samples, g, kMomentumPair, hbar, mult);
    const int col = g.nearest_index(plane_l);
    const cplx psi = field.samples[static_cast<std::size_t>(col)];
    return (hbar / m) * std::imag(std::conj(psi) * dpsi[static_cast<std::size_t>(col)]);
}

FluxSeries probability_current(const TCMomentumAmplitude& amp, const UniformGrid1D& t_grid,
                               double plane_l) {
    if (amp.p_grids.size() != 1)
        throw std::domain_error("probability_current: needs a 1D amplitude");
    const double hbar = amp.constants.hbar, m = amp.constants.mass;
    const UniformGrid1D x_grid = conjugate_grid(amp.p_grids[0], hbar);
    const int col = x_grid.nearest_index(plane_l);

    // Momentum-space derivative samples (i p / hbar) psi~.
    TCMomentumAmplitude damp = amp;
    for (int j = 0; j < amp.p_grids[0].n; ++j)
        damp.samples[static_cast<std::size_t>(j)] *=
            cplx(0.0, 1.0) * (amp.p_grids[0].point(j) / hbar);

    FluxSeries flux;
    flux.t_grid = t_grid;
    flux.plane = plane_l;
    flux.column_index = col;
    flux.j.resize(static_cast<std::size_t>(t_grid.n));
    const std::array<UniformGrid1D, 1> grids{x_grid};
    for (int k = 0; k < t_grid.n; ++k) {
        const double t = t_grid.point(k);
        const ScalarField psi = tc_position_field(amp, t, grids);
        const ScalarField dpsi = tc_position_field(damp, t, grids);
        flux.j[static_cast<std::size_t>(k)] =
            (hbar / m) * std::imag(std::conj(psi.samples[static_cast<std::size_t>(col)]) *
                                   dpsi.samples[static_cast<std::size_t>(col)]);
    }
    return flux;
}

std::vector<BackflowInterval> detect_backflow(const FluxSeries& flux) {
    std::vector<BackflowInterval> out;
    const std::size_t n = flux.j.size();
    std::size_t k = 0;
    while (k < n) {
        if (flux.j[k] < 0.0) {
            BackflowInterval iv;
            iv.t_start = flux.t_grid.point(static_cast<int>(k));
            iv.min_j = flux.j[k];
            std::size_t end = k;
            while (end + 1 < n && flux.j[end + 1] < 0.0) {
                ++end;
                iv.min_j = std::min(iv.min_j, flux.j[end]);
            }
            iv.t_end = flux.t_grid.point(static_cast<int>(end));
            out.push_back(iv);
            k = end + 1;
        } else {
            ++k;
        }
    }
    return out;
}

ArrivalDistribution sc_cumulative_y(const SpinorField& field) {
    if (field.transverse.empty())
        throw std::domain_error("sc_cumulative_y: field has no transverse axis");
    const double norm = sc_norm(field);
    if (norm == 0.0) throw std::domain_error("sc_cumulative_y: field has zero norm");
    const std::size_t nt = static_cast<std::size_t>(field.t_grid.n);
    const std::size_t nj = field.transverse_size();
    const std::size_t ny = static_cast<std::size_t>(field.transverse[0].n);
    const std::size_t inner = nj / ny;
    const double marg_cell = field.cell_volume() / field.transverse[0].spacing;

    ArrivalDistribution dist;
    dist.axis_labels = {"y"};
    dist.axes = {field.transverse[0]};
    dist.samples.assign(ny, 0.0);
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t iy = 0; iy < ny; ++iy)
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t idx = k * nj + iy * inner + in;
                dist.samples[iy] +=
                    (std::norm(field.plus[idx]) + std::norm(field.minus[idx])) * marg_cell;
            }
    dist.normalization_constant = norm;
    dist.metadata.captured_mass = dist.integral() / norm;
    dist.metadata.provenance = "sc_cumulative_y";
    return dist;
}

ArrivalDistribution sc_conditional_y_at_time(const SpinorField& field, double t_star) {
    if (field.transverse.size() != 1)
        throw std::domain_error("sc_conditional_y_at_time: needs one transverse axis");
    const int row = field.t_grid.nearest_index(t_star);
    const std::size_t ny = static_cast<std::size_t>(field.transverse[0].n);

    ArrivalDistribution dist;
    dist.axis_labels = {"y"};
    dist.axes = {field.transverse[0]};
    dist.samples.resize(ny);
    double total = 0.0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const std::size_t idx = static_cast<std::size_t>(row) * ny + iy;
        dist.samples[iy] = std::norm(field.plus[idx]) + std::norm(field.minus[idx]);
        total += dist.samples[iy];
    }
    if (total == 0.0)
        throw std::runtime_error("sc_conditional_y_at_time: no arrivals at this time (t = " +
                                 std::to_string(t_star) + ")");
    dist.normalization_constant = total * field.transverse[0].spacing;
    dist.metadata.captured_mass = 1.0;
    dist.metadata.slice_index = row;
    dist.metadata.provenance = "sc_conditional_y_at_time";
    return dist;
}

} // namespace stsqm
