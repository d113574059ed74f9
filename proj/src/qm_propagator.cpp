#include "stsqm/qm_propagator.hpp"

#include <cmath>
#include <stdexcept>

namespace stsqm {

TCMomentumAmplitude TCMomentumAmplitude::from_gaussian(const GaussianPacketSpec& spec,
                                                       std::span<const UniformGrid1D> p_grids,
                                                       const PhysicalConstants& pc) {
    TCMomentumAmplitude amp;
    amp.p_grids.assign(p_grids.begin(), p_grids.end());
    amp.constants = pc;
    amp.samples = gaussian_amplitude(spec, p_grids, pc);
    return amp;
}

TCMomentumAmplitude tc_evolve_momentum(const TCMomentumAmplitude& amp, double t) {
    TCMomentumAmplitude out = amp;
    if (t == 0.0) return out;
    const double f = -t / (2.0 * amp.constants.mass * amp.constants.hbar);
    const std::size_t total = amp.size();
    std::vector<std::size_t> strides(amp.p_grids.size());
    std::size_t s = total;
    for (std::size_t a = 0; a < amp.p_grids.size(); ++a) {
        s /= static_cast<std::size_t>(amp.p_grids[a].n);
        strides[a] = s;
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
        double p2 = 0.0;
        for (std::size_t a = 0; a < amp.p_grids.size(); ++a) {
            const int k = static_cast<int>((idx / strides[a]) %
                                           static_cast<std::size_t>(amp.p_grids[a].n));
            const double p = amp.p_grids[a].point(k);
            p2 += p * p;
        }
        out.samples[idx] *= std::polar(1.0, f * p2);
    }
    return out;
}

std::vector<UniformGrid1D> position_grids_for(const TCMomentumAmplitude& amp) {
    std::vector<UniformGrid1D> out;
    out.reserve(amp.p_grids.size());
    for (const auto& g : amp.p_grids) out.push_back(conjugate_grid(g, amp.constants.hbar));
    return out;
}

ScalarField tc_position_field(const TCMomentumAmplitude& amp, double t,
                              std::span<const UniformGrid1D> x_grids) {
    if (x_grids.size() != amp.p_grids.size())
        throw std::domain_error("tc_position_field: axis count mismatch");
    for (std::size_t a = 0; a < x_grids.size(); ++a)
        if (!conjugate_compatible(x_grids[a], amp.p_grids[a], amp.constants.hbar))
            throw std::domain_error("tc_position_field: x grid axis " + std::to_string(a) +
                                    " is not conjugate-compatible with the momentum grid");

    const TCMomentumAmplitude evolved = tc_evolve_momentum(amp, t);

    ScalarField field;
    field.grids.assign(x_grids.begin(), x_grids.end());
    field.time = t;
    field.constants = amp.constants;
    field.samples = evolved.samples;

    // Synthesize axis by axis (momentum pair) on the position grids.
    const std::size_t total = field.size();
    std::size_t inner = total;
    for (std::size_t a = 0; a < x_grids.size(); ++a) {
        const std::size_t n = static_cast<std::size_t>(x_grids[a].n);
        inner /= n;
        const std::size_t outer = total / (n * inner);
        std::vector<cplx> line(n), out_line;
        for (std::size_t lead = 0; lead < outer; ++lead)
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = lead * n * inner + in;
                for (std::size_t j = 0; j < n; ++j) line[j] = field.samples[base + j * inner];
                out_line = inverse_transform(line, x_grids[a], amp.p_grids[a], kMomentumPair,
                                             amp.constants.hbar);
                for (std::size_t j = 0; j < n; ++j) field.samples[base + j * inner] = out_line[j];
            }
    }
    return field;
}

ArrivalDistribution tc_cumulative_y_density(const ScalarField& field) {
    if (field.grids.size() != 2)
        throw std::domain_error("tc_cumulative_y_density: needs a 2D (x,y) field");
    const std::size_t nx = static_cast<std::size_t>(field.grids[0].n);
    const std::size_t ny = static_cast<std::size_t>(field.grids[1].n);
    const double dx = field.grids[0].spacing;

    ArrivalDistribution dist;
    dist.axis_labels = {"y"};
    dist.axes = {field.grids[1]};
    dist.samples.assign(ny, 0.0);
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iy = 0; iy < ny; ++iy)
            dist.samples[iy] += std::norm(field.samples[ix * ny + iy]) * dx;
    dist.normalization_constant = field.norm2();
    dist.metadata.captured_mass = dist.integral() / dist.normalization_constant;
    dist.metadata.provenance = "tc_cumulative_y_density";
    return dist;
}

ArrivalDistribution tc_conditional_y_at_plane(const ScalarField& field, double plane_l) {
    if (field.grids.size() != 2)
        throw std::domain_error("tc_conditional_y_at_plane: needs a 2D (x,y) field");
    if (plane_l < field.grids[0].lo || plane_l > field.grids[0].hi)
        throw std::domain_error("tc_conditional_y_at_plane: plane outside the x grid");
    const std::size_t ny = static_cast<std::size_t>(field.grids[1].n);
    const int col = field.grids[0].nearest_index(plane_l);

    ArrivalDistribution dist;
    dist.axis_labels = {"y"};
    dist.axes = {field.grids[1]};
    dist.samples.resize(ny);
    double total = 0.0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        dist.samples[iy] = std::norm(field.samples[static_cast<std::size_t>(col) * ny + iy]);
        total += dist.samples[iy];
    }
    if (total == 0.0)
        throw std::runtime_error("tc_conditional_y_at_plane: no support on plane x = " +
                                 std::to_string(plane_l));
    dist.normalization_constant = total * field.grids[1].spacing;
    dist.metadata.captured_mass = 1.0;
    dist.metadata.slice_index = col;
    dist.metadata.provenance = "tc_conditional_y_at_plane";
    return dist;
}

double moment(const ArrivalDistribution& dist, int order) {
    if (order != 1 && order != 2) throw std::domain_error("moment: order must be 1 or 2");
    if (dist.axes.size() != 1) throw std::domain_error("moment: needs a 1D distribution");
    const UniformGrid1D& g = dist.axes[0];
    double s = 0.0;
    for (int k = 0; k < g.n; ++k)
        s += std::pow(g.point(k), order) * dist.samples[static_cast<std::size_t>(k)];
    return s * g.spacing / dist.normalization_constant;
}

double distribution_mean(const ArrivalDistribution& dist) { return moment(dist, 1); }

double distribution_variance(const ArrivalDistribution& dist) {
    const double m1 = moment(dist, 1);
    return moment(dist, 2) - m1 * m1;
}

} // namespace stsqm
