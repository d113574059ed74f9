#include "stsqm/packets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stsqm {

void GaussianPacketSpec::validate() const {
    const std::size_t d = center_momentum.size();
    if (d == 0) throw std::domain_error("GaussianPacketSpec: needs at least one axis");
    if (momentum_width.size() != d || center_position.size() != d)
        throw std::domain_error("GaussianPacketSpec: axis counts disagree");
    for (double w : momentum_width)
        if (!(w > 0.0)) throw std::domain_error("GaussianPacketSpec: momentum widths must be > 0");
}

cplx gaussian_amplitude_value(const GaussianPacketSpec& spec, std::size_t axis, double p,
                              const PhysicalConstants& pc) {
    const double p0 = spec.center_momentum[axis];
    const double sigma = spec.momentum_width[axis];
    const double x0 = spec.center_position[axis];
    const double norm = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
    const double dp = p - p0;
    const double phase = -p * x0 / pc.hbar + p * p * spec.center_time / (2.0 * pc.mass * pc.hbar);
    return norm * std::exp(-dp * dp / (4.0 * sigma * sigma)) * std::polar(1.0, phase);
}

std::vector<cplx> gaussian_amplitude(const GaussianPacketSpec& spec,
                                     std::span<const UniformGrid1D> momentum_grids,
                                     const PhysicalConstants& pc) {
    spec.validate();
    pc.validate();
    if (momentum_grids.size() != spec.axes())
        throw std::domain_error("gaussian_amplitude: grid count does not match packet axes");

    // Per-axis samples, each renormalized to discrete unit L2 norm.
    std::vector<std::vector<cplx>> axis_samples;
    axis_samples.reserve(spec.axes());
    for (std::size_t a = 0; a < spec.axes(); ++a) {
        const UniformGrid1D& g = momentum_grids[a];
        std::vector<cplx> s(static_cast<std::size_t>(g.n));
        double norm2 = 0.0;
        for (int k = 0; k < g.n; ++k) {
            s[static_cast<std::size_t>(k)] = gaussian_amplitude_value(spec, a, g.point(k), pc);
            norm2 += std::norm(s[static_cast<std::size_t>(k)]);
        }
        norm2 *= g.spacing;
        if (!(norm2 > 0.0))
            throw std::domain_error("gaussian_amplitude: grid captures no packet mass");
        const double scale = 1.0 / std::sqrt(norm2);
        for (auto& v : s) v *= scale;
        axis_samples.push_back(std::move(s));
    }

    if (spec.axes() == 1) return axis_samples[0];

    std::size_t total = 1;
    for (const auto& s : axis_samples) total *= s.size();
    std::vector<cplx> out(total, cplx(1.0, 0.0));
    std::size_t stride = total;
    for (const auto& s : axis_samples) {
        stride /= s.size();
        for (std::size_t idx = 0; idx < total; ++idx)
            out[idx] *= s[(idx / stride) % s.size()];
    }
    return out;
}

std::pair<double, double> gaussian_support(const GaussianPacketSpec& spec, std::size_t axis,
                                           double tail_mass) {
    if (!(tail_mass > 0.0 && tail_mass < 1.0))
        throw std::domain_error("gaussian_support: tail_mass must be in (0,1)");
    const double p0 = spec.center_momentum[axis];
    const double sigma = spec.momentum_width[axis];
    // |amplitude|^2 is Gaussian with std sigma; solve erfc(k/sqrt(2)) = tail_mass.
    double lo = 0.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::sqrt(2.0)) > tail_mass)
            lo = mid;
        else
            hi = mid;
    }
    const double k = 0.5 * (lo + hi);
    return {p0 - k * sigma, p0 + k * sigma};
}

} // namespace stsqm
