#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stsqm/arrival_types.hpp"
#include "stsqm/constants.hpp"
#include "stsqm/momentum_ops.hpp"
#include "stsqm/packets.hpp"

namespace stsqm {

struct GridSpec {
    int n = 0;
    double lo = 0.0, hi = 0.0;
};

// Declarative description of one run.  Parsed from a JSON document; the exact
// schema is documented in the README.  Unknown keys are rejected by name,
// missing required keys are reported against the kind's schema.
struct ScenarioConfig {
    std::string kind;
    PhysicalConstants constants{};
    GaussianPacketSpec packet;
    bool has_packet = false;
    // p-space tilt for compare-y: the transverse center rides on the
    // longitudinal offset, py0 -> py0 + tilt*(px - px0).  Zero keeps the packet
    // separable, for which the two conditional-y distributions coincide.
    double packet_tilt = 0.0;
    std::map<std::string, GridSpec> grids;
    std::vector<double> planes;
    double plane = 0.0;
    double time_star = 0.0;

    struct ModeSpec {
        double p = 0.0;
        cplx amplitude{1.0, 0.0};
    };
    std::vector<ModeSpec> modes;

    int quad_panels = 0;        // 0 = auto
    double tail_mass = 1e-10;   // half-line truncation policy
    int reference_points = 16384;
    double support_sigmas = 8.0;

    std::vector<int> mu_list{0, 1};
    std::vector<int> mode_indices{3, 4, 5};
    std::vector<double> mode_weights{0.7, 0.55, 0.45};
    int t_slices = 512;
    int refinements = 2;

    double energy = 0.0;
    std::string potential_kind = "smooth-step";
    double potential_v0 = 1.0;
    double potential_width = 1.0;
    Branch branch = Branch::plus;
    cplx initial_value{1.0, 0.0};
    cplx initial_derivative{0.0, 0.0};

    int samples = 1000;
    std::uint64_t seed = 20260809ULL;

    std::string output_dir;              // from the config's output.directory
    std::vector<std::string> formats{"csv"};
    std::string echo_json;               // normalized config with defaults filled
};

extern const std::vector<std::string> kScenarioKinds;

ScenarioConfig parse_config(const std::string& text);

struct RunManifest {
    std::string kind;
    struct Output {
        std::string file;
        std::string checksum_fnv1a64;
        std::size_t bytes = 0;
        std::size_t rows = 0;
        double captured_mass = -1.0; // -1 when not a density file
    };
    std::vector<Output> outputs;
    std::map<std::string, double> scalars;    // named result values
    std::map<std::string, double> tolerances; // tolerances the run asserts
    std::map<std::string, double> timings_ms; // excluded from determinism checks
    std::string manifest_path;
};

// Executes the scenario and writes its data files plus manifest.json under
// out_dir.  Identical configs produce byte-identical data files.
RunManifest run_scenario(const ScenarioConfig& config, const std::string& out_dir);

// Tabular emission with 17-significant-digit floats.  format: "csv" or "txt".
void emit_table(const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& columns, const std::string& path,
                const std::string& format = "csv");
void emit_table(const ArrivalDistribution& dist, const std::string& path,
                const std::string& format = "csv");
void emit_table(const FluxSeries& flux, const std::string& path, const std::string& format = "csv");

std::uint64_t fnv1a64_file(const std::string& path);

} // namespace stsqm
