#pragma once

#include <string>
#include <vector>

#include "stsqm/grid.hpp"

namespace stsqm {

// Nonnegative density samples over one or more axes.  `samples` is the raw
// (unnormalized) density; dividing by normalization_constant gives the
// probability density, so (sum samples * cell) / normalization_constant is the
// captured mass and equals 1 when the window holds everything.
struct ArrivalDistribution {
    std::vector<std::string> axis_labels;
    std::vector<UniformGrid1D> axes;
    std::vector<double> samples;
    double normalization_constant = 1.0;

    struct Metadata {
        double captured_mass = 0.0;
        bool improper = false;  // plane-wave-type input, not normalizable
        int slice_index = -1;   // chosen row/column for conditional slices
        std::vector<std::string> notes;
        std::string provenance;
    } metadata;

    double cell_volume() const {
        double v = 1.0;
        for (const auto& g : axes) v *= g.spacing;
        return v;
    }
    double integral() const {
        double s = 0.0;
        for (double d : samples) s += d;
        return s * cell_volume();
    }
    // Probability-density view (samples / normalization_constant).
    std::vector<double> normalized() const {
        std::vector<double> out(samples);
        for (double& d : out) d /= normalization_constant;
        return out;
    }
};

// Probability current J(t) at a fixed plane; negative stretches are physical
// (backflow).
struct FluxSeries {
    UniformGrid1D t_grid;
    std::vector<double> j;
    double plane = 0.0;
    int column_index = -1;
};

// First/second moment of a 1D distribution (order in {1,2}), taken over the
// normalized density.
double moment(const ArrivalDistribution& dist, int order);

double distribution_mean(const ArrivalDistribution& dist);
double distribution_variance(const ArrivalDistribution& dist);

} // namespace stsqm
