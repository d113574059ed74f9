#pragma once

#include <vector>

#include "stsqm/constants.hpp"
#include "stsqm/grid.hpp"
#include "stsqm/transforms.hpp"

namespace stsqm {

// psi(x...|t): complex samples over spatial grids at a fixed time.
// Row-major flattening, axis 0 slowest.
struct ScalarField {
    std::vector<UniformGrid1D> grids;
    std::vector<cplx> samples;
    double time = 0.0;
    PhysicalConstants constants{};

    std::size_t size() const {
        std::size_t s = 1;
        for (const auto& g : grids) s *= static_cast<std::size_t>(g.n);
        return s;
    }
    double cell_volume() const {
        double v = 1.0;
        for (const auto& g : grids) v *= g.spacing;
        return v;
    }
    double norm2() const {
        double s = 0.0;
        for (const auto& z : samples) s += std::norm(z);
        return s * cell_volume();
    }
};

// Two-component space-conditional field phi(t, transverse... | x) at a fixed
// detection plane.  Layout is t-major: index = (t_idx * n_perp_flat) + perp_idx.
struct SpinorField {
    UniformGrid1D t_grid;
    std::vector<UniformGrid1D> transverse;
    std::vector<cplx> plus, minus;
    double plane_x = 0.0;
    PhysicalConstants constants{};
    // |phi| at the t-window edges relative to the peak; large values flag
    // wrap-around risk.  Set by sc_field for proper (normalizable) inputs.
    double edge_amplitude_ratio = 0.0;
    bool edge_contained = true;

    std::size_t transverse_size() const {
        std::size_t s = 1;
        for (const auto& g : transverse) s *= static_cast<std::size_t>(g.n);
        return s;
    }
    std::size_t size() const { return static_cast<std::size_t>(t_grid.n) * transverse_size(); }
    double cell_volume() const {
        double v = t_grid.spacing;
        for (const auto& g : transverse) v *= g.spacing;
        return v;
    }
};

} // namespace stsqm
