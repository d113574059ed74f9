// Space-conditional free-particle states: representation changes, plane
// shifts, field synthesis, norms, and the recovered-equation residual.
// Oracle: brute-force Simpson quadrature of the synthesis integral.

#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "stsqm/sts_propagator.hpp"

using namespace stsqm;
using std::numbers::pi;

namespace {

GaussianPacketSpec fast_packet_1d() {
    GaussianPacketSpec spec;
    spec.center_momentum = {10.0};
    spec.momentum_width = {0.5};
    spec.center_position = {0.0};
    return spec;
}

GaussianPacketSpec packet_2d() {
    GaussianPacketSpec spec;
    spec.center_momentum = {10.0, 0.0};
    spec.momentum_width = {0.5, 1.0};
    spec.center_position = {0.0, 0.0};
    return spec;
}

const UniformGrid1D kYGrid = make_grid(64, -4.0 * pi, 4.0 * pi);

SCMomentumAmplitude gaussian_sc_1d() {
    return SCMomentumAmplitude::from_gaussian(fast_packet_1d(), {}, {});
}

SCMomentumAmplitude gaussian_sc_2d() {
    const UniformGrid1D py = conjugate_grid(kYGrid, 1.0);
    const std::array<UniformGrid1D, 1> perp{py};
    return SCMomentumAmplitude::from_gaussian(packet_2d(), perp, {});
}

} // namespace

TEST_CASE("composite Gauss-Legendre rule: exact on polynomials, Gaussian vs erf") {
    const PxQuadrature q = PxQuadrature::gauss_legendre(0.0, 2.0, 4);
    CHECK(q.size() == 32);
    double s3 = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        s3 += q.weights[i] * std::pow(q.nodes[i], 3);
        sg += q.weights[i] * std::exp(-q.nodes[i] * q.nodes[i]);
    }
    CHECK(s3 == doctest::Approx(4.0).epsilon(1e-14)); // int_0^2 x^3 = 4
    CHECK(sg == doctest::Approx(std::sqrt(pi) / 2.0 * std::erf(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(PxQuadrature::gauss_legendre(-1.0, 2.0, 4), std::domain_error);
}

TEST_CASE("single-mode field equals the plane wave pointwise") {
    SUBCASE("1D (t|x), branch +") {
        SCMomentumAmplitude::Mode mode;
        mode.branch = +1;
        mode.p_x = 3.0;
        const std::array<SCMomentumAmplitude::Mode, 1> modes{mode};
        const SCMomentumAmplitude amp = SCMomentumAmplitude::from_modes(modes, {}, {});
        CHECK(amp.metadata.improper);
        const UniformGrid1D tg = make_grid(128, -2.0, 2.0);
        const SpinorField f = sc_field(amp, 1.3, tg, {});
        const double eps = 4.5; // p^2/2m
        for (int k = 0; k < tg.n; ++k) {
            const cplx exact =
                std::polar(1.0 / std::sqrt(2.0 * pi), 3.0 * 1.3 - eps * tg.point(k));
            CHECK(std::abs(f.plus[static_cast<std::size_t>(k)] - exact) < 1e-10);
            CHECK(std::abs(f.minus[static_cast<std::size_t>(k)]) == 0.0);
        }
    }
    SUBCASE("2D (t,y|x), branch -") {
        const UniformGrid1D py = conjugate_grid(kYGrid, 1.0);
        SCMomentumAmplitude::Mode mode;
        mode.branch = -1;
        mode.p_x = 2.0;
        mode.p_perp = {py.point(40)};
        const std::array<SCMomentumAmplitude::Mode, 1> modes{mode};
        const std::array<UniformGrid1D, 1> perp{py};
        const SCMomentumAmplitude amp = SCMomentumAmplitude::from_modes(modes, perp, {});
        const UniformGrid1D tg = make_grid(64, 0.0, 2.0);
        const std::array<UniformGrid1D, 1> ygrids{kYGrid};
        const SpinorField f = sc_field(amp, 0.7, tg, ygrids);
        const double pyv = py.point(40);
        const double eps = (4.0 + pyv * pyv) / 2.0;
        for (int k = 0; k < tg.n; ++k)
            for (int j = 0; j < kYGrid.n; ++j) {
                const cplx exact = std::polar(
                    1.0 / (2.0 * pi),
                    -2.0 * 0.7 + pyv * kYGrid.point(j) - eps * tg.point(k));
                CHECK(std::abs(f.minus[static_cast<std::size_t>(k) * 64 + static_cast<std::size_t>(j)] -
                               exact) < 1e-10);
            }
    }
}

TEST_CASE("zero amplitude synthesizes the zero field") {
    SCMomentumAmplitude amp = gaussian_sc_1d();
    std::fill(amp.plus.begin(), amp.plus.end(), cplx(0.0));
    std::fill(amp.minus.begin(), amp.minus.end(), cplx(0.0));
    const UniformGrid1D tg = make_grid(64, -1.0, 1.0);
    const SpinorField f = sc_field(amp, 0.5, tg, {});
    for (const auto& z : f.plus) CHECK(std::abs(z) == 0.0);
    for (const auto& z : f.minus) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("energy <-> momentum representation changes") {
    SUBCASE("single concentration at (eps0, p_perp=0) picks up sqrt(p_x/m)") {
        const double eps0 = 4.5;
        SCEnergyAmplitude ebar;
        ebar.px.nodes = {std::sqrt(2.0 * eps0)};
        ebar.px.weights = {1.0};
        ebar.px.lo = ebar.px.hi = ebar.px.nodes[0];
        ebar.px.panels = 1;
        ebar.plus = {cplx(0.6, -0.2)};
        ebar.minus = {cplx(0.0)};
        CHECK(ebar.energy_at(0, 0) == doctest::Approx(eps0).epsilon(1e-14));
        const SCMomentumAmplitude mom = energy_to_momentum(ebar);
        const double jac = std::sqrt(std::sqrt(2.0 * eps0) / 1.0);
        CHECK(std::abs(mom.plus[0] - jac * cplx(0.6, -0.2)) < 1e-14);
    }

    SUBCASE("round trip is the identity away from p_x = 0") {
        const SCMomentumAmplitude amp = gaussian_sc_2d();
        const SCMomentumAmplitude back = energy_to_momentum(momentum_to_energy(amp));
        for (std::size_t i = 0; i < amp.plus.size(); ++i) {
            CHECK(std::abs(back.plus[i] - amp.plus[i]) <= 1e-10 * (1.0 + std::abs(amp.plus[i])));
            CHECK(std::abs(back.minus[i] - amp.minus[i]) <= 1e-10 * (1.0 + std::abs(amp.minus[i])));
        }
    }

    SUBCASE("norms agree between the representations") {
        const SCMomentumAmplitude amp = gaussian_sc_2d();
        const SCEnergyAmplitude ebar = momentum_to_energy(amp);
        CHECK(sc_norm(ebar) == doctest::Approx(sc_norm(amp)).epsilon(1e-12));
    }

    SUBCASE("p_x = 0 support is flagged, not regularized") {
        SCMomentumAmplitude amp;
        amp.px.nodes = {0.0, 1.0};
        amp.px.weights = {1.0, 1.0};
        amp.px.lo = 0.0;
        amp.px.hi = 1.0;
        amp.px.panels = 2;
        amp.plus = {cplx(1.0), cplx(1.0)};
        amp.minus = {cplx(0.0), cplx(0.0)};
        const SCEnergyAmplitude ebar = momentum_to_energy(amp);
        CHECK(ebar.metadata.flagged_px_zero);
    }
}

TEST_CASE("shift_to_plane is a lazy pure phase") {
    const SCMomentumAmplitude amp = gaussian_sc_1d();

    SUBCASE("x = 0 is the identity") {
        const SCMomentumAmplitude s = shift_to_plane(amp, 0.0);
        for (std::size_t i = 0; i < amp.plus.size(); ++i) CHECK(s.plus[i] == amp.plus[i]);
        CHECK(s.plane_offset == 0.0);
    }

    SUBCASE("|samples| are bit-stable for any shift") {
        const SCMomentumAmplitude s = shift_to_plane(amp, 7.3);
        for (std::size_t i = 0; i < amp.plus.size(); ++i) {
            CHECK(std::abs(s.plus[i]) == std::abs(amp.plus[i]));
            CHECK(std::abs(s.minus[i]) == std::abs(amp.minus[i]));
        }
        // materialized phases preserve the modulus to roundoff
        const SCMomentumAmplitude mat = materialize_plane_phase(s);
        for (std::size_t i = 0; i < amp.plus.size(); ++i)
            CHECK(std::abs(mat.plus[i]) == doctest::Approx(std::abs(amp.plus[i])).epsilon(1e-15));
    }

    SUBCASE("shift by x then -x returns the original") {
        const SCMomentumAmplitude s = shift_to_plane(shift_to_plane(amp, 2.5), -2.5);
        CHECK(s.plane_offset == 0.0);
        for (std::size_t i = 0; i < amp.plus.size(); ++i) CHECK(s.plus[i] == amp.plus[i]);
    }

    SUBCASE("field built from a shifted amplitude matches the shifted plane") {
        const UniformGrid1D tg = make_grid(512, -0.5, 1.5);
        const SpinorField direct = sc_field(amp, 4.0, tg, {});
        const SpinorField lazy = sc_field(shift_to_plane(amp, 4.0), 0.0, tg, {});
        for (std::size_t i = 0; i < direct.plus.size(); ++i)
            CHECK(std::abs(direct.plus[i] - lazy.plus[i]) < 1e-14);
    }
}

TEST_CASE("sc_norm: quadratic form, x independence, representation agreement") {
    const SCMomentumAmplitude amp = gaussian_sc_1d();

    SUBCASE("unit Gaussian amplitude has unit norm") {
        CHECK(sc_norm(amp) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(amp.metadata.truncation_loss < 1e-6);
    }

    SUBCASE("scaling the amplitude by 2 scales the norm by 4") {
        SCMomentumAmplitude two = amp;
        for (auto& z : two.plus) z *= 2.0;
        for (auto& z : two.minus) z *= 2.0;
        CHECK(sc_norm(two) == doctest::Approx(4.0 * sc_norm(amp)).epsilon(1e-12));
    }

    SUBCASE("field norm equals amplitude norm and is x independent") {
        const UniformGrid1D tg = make_grid(4096, -1.2, 2.2);
        const SpinorField f0 = sc_field(amp, 0.0, tg, {});
        const SpinorField f7 = sc_field(amp, 7.0, tg, {});
        CHECK(sc_norm(f0) == doctest::Approx(sc_norm(amp)).epsilon(1e-8));
        CHECK(std::abs(sc_norm(f7) - sc_norm(f0)) < 1e-8);
    }
}

TEST_CASE("pipeline field values agree with brute-force quadrature") {
    const SCMomentumAmplitude amp = gaussian_sc_2d();
    const UniformGrid1D tg = make_grid(256, 0.2, 0.8);
    const std::array<UniformGrid1D, 1> ygrids{kYGrid};
    const double x = 5.0;
    const SpinorField f = sc_field(amp, x, tg, ygrids);
    const UniformGrid1D py = conjugate_grid(kYGrid, 1.0);

    double fmax = 0.0;
    for (const auto& z : f.plus) fmax = std::max(fmax, std::abs(z));
    REQUIRE(fmax > 0.0);

    std::mt19937_64 eng(11);
    auto pick = [&](int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); };
    for (int trial = 0; trial < 6; ++trial) {
        const int k = 64 + pick(128), j = 16 + pick(32); // interior points
        const double t = tg.point(k), y = kYGrid.point(j);
        const cplx oracle = oracles::sc_field_2d(packet_2d(), +1, amp.px.lo, amp.px.hi, py, x, t, y,
                                                 4096);
        const cplx got = f.plus[static_cast<std::size_t>(k) * 64 + static_cast<std::size_t>(j)];
        CHECK(std::abs(got - oracle) / fmax < 1e-7);
    }
}

TEST_CASE("branch decoupling in the free synthesis") {
    SCMomentumAmplitude amp = gaussian_sc_2d();
    std::fill(amp.minus.begin(), amp.minus.end(), cplx(0.0));
    const UniformGrid1D tg = make_grid(128, 0.2, 0.8);
    const std::array<UniformGrid1D, 1> ygrids{kYGrid};
    const SpinorField f = sc_field(amp, 3.0, tg, ygrids);
    for (const auto& z : f.minus) CHECK(std::abs(z) == 0.0);
    double sum = 0.0;
    for (const auto& z : f.plus) sum += std::abs(z);
    CHECK(sum > 0.0);
}

TEST_CASE("recovered free equation: residual scale and order") {
    SUBCASE("single mode: residual O(dx^2), slope 2 under halving") {
        const UniformGrid1D py = conjugate_grid(kYGrid, 1.0);
        SCMomentumAmplitude::Mode mode;
        mode.branch = +1;
        mode.p_x = 3.0;
        mode.p_perp = {py.point(36)};
        const std::array<SCMomentumAmplitude::Mode, 1> modes{mode};
        const std::array<UniformGrid1D, 1> perp{py};
        const SCMomentumAmplitude amp = SCMomentumAmplitude::from_modes(modes, perp, {});
        const UniformGrid1D tg = make_grid(64, 0.0, 4.0 * pi);
        const std::array<UniformGrid1D, 1> ygrids{kYGrid};
        auto resid = [&](double dx) {
            const SpinorField fm = sc_field(amp, 1.0 - dx, tg, ygrids);
            const SpinorField f0 = sc_field(amp, 1.0, tg, ygrids);
            const SpinorField fp = sc_field(amp, 1.0 + dx, tg, ygrids);
            return sc_schrodinger_residual(fm, f0, fp);
        };
        const double r1 = resid(0.04), r2 = resid(0.02);
        CHECK(std::log2(r1 / r2) == doctest::Approx(2.0).epsilon(0.02));
    }

    SUBCASE("zero field: zero residual") {
        SCMomentumAmplitude amp = gaussian_sc_2d();
        std::fill(amp.plus.begin(), amp.plus.end(), cplx(0.0));
        std::fill(amp.minus.begin(), amp.minus.end(), cplx(0.0));
        const UniformGrid1D tg = make_grid(64, 0.0, 1.0);
        const std::array<UniformGrid1D, 1> ygrids{kYGrid};
        const SpinorField fm = sc_field(amp, 0.9, tg, ygrids);
        const SpinorField f0 = sc_field(amp, 1.0, tg, ygrids);
        const SpinorField fp = sc_field(amp, 1.1, tg, ygrids);
        CHECK(sc_schrodinger_residual(fm, f0, fp) == 0.0);
    }

    SUBCASE("Gaussian packet at defaults stays below 1e-4") {
        const SCMomentumAmplitude amp = gaussian_sc_2d();
        const UniformGrid1D tg = make_grid(1024, -0.6, 1.6);
        const std::array<UniformGrid1D, 1> ygrids{kYGrid};
        const double dx = 1e-3;
        const SpinorField fm = sc_field(amp, 5.0 - dx, tg, ygrids);
        const SpinorField f0 = sc_field(amp, 5.0, tg, ygrids);
        const SpinorField fp = sc_field(amp, 5.0 + dx, tg, ygrids);
        CHECK(sc_schrodinger_residual(fm, f0, fp) < 1e-4);
    }

    SUBCASE("mismatched grids are rejected") {
        const SCMomentumAmplitude amp = gaussian_sc_1d();
        const UniformGrid1D tg = make_grid(128, -1.0, 1.0);
        const UniformGrid1D tg2 = make_grid(256, -1.0, 1.0);
        const SpinorField a = sc_field(amp, 0.9, tg, {});
        const SpinorField b = sc_field(amp, 1.0, tg2, {});
        const SpinorField c = sc_field(amp, 1.1, tg, {});
        CHECK_THROWS_AS(sc_schrodinger_residual(a, b, c), std::domain_error);
    }
}

TEST_CASE("gaussian amplitude construction policies") {
    SUBCASE("straddling packet is captured by the two branches together") {
        GaussianPacketSpec slow;
        slow.center_momentum = {0.5};
        slow.momentum_width = {1.0};
        slow.center_position = {0.0};
        const SCMomentumAmplitude amp = SCMomentumAmplitude::from_gaussian(slow, {}, {});
        CHECK(sc_norm(amp) == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("truncation between 1e-6 and 1e-3 records a warning") {
        const SCMomentumAmplitude amp =
            SCMomentumAmplitude::from_gaussian_on_support(fast_packet_1d(), 0.0, 12.1, {}, {});
        CHECK(amp.metadata.truncation_loss > 1e-6);
        CHECK(amp.metadata.truncation_loss < 1e-3);
        REQUIRE(!amp.metadata.warnings.empty());
    }
    SUBCASE("truncation losing more than 1e-3 is a hard error") {
        CHECK_THROWS_WITH_AS(
            SCMomentumAmplitude::from_gaussian_on_support(fast_packet_1d(), 0.0, 10.2, {}, {}),
            doctest::Contains("truncation"), std::runtime_error);
    }
    SUBCASE("edge containment is reported on the synthesized field") {
        const SCMomentumAmplitude amp = gaussian_sc_1d();
        const UniformGrid1D tg = make_grid(1024, -1.0, 1.0);
        const SpinorField f = sc_field(amp, 0.0, tg, {});
        CHECK(f.edge_contained);
        CHECK(f.edge_amplitude_ratio < 1e-6);
    }
}

TEST_CASE("two transverse axes: the full (t, y, z | x) form") {
    const UniformGrid1D y_grid = make_grid(16, -2.0 * pi, 2.0 * pi);
    const UniformGrid1D z_grid = make_grid(16, -2.0 * pi, 2.0 * pi);
    const UniformGrid1D py = conjugate_grid(y_grid, 1.0);
    const UniformGrid1D pz = conjugate_grid(z_grid, 1.0);

    SCMomentumAmplitude::Mode mode;
    mode.branch = +1;
    mode.p_x = 2.0;
    mode.p_perp = {py.point(10), pz.point(6)};
    const std::array<SCMomentumAmplitude::Mode, 1> modes{mode};
    const std::array<UniformGrid1D, 2> perp{py, pz};
    const SCMomentumAmplitude amp = SCMomentumAmplitude::from_modes(modes, perp, {});

    const UniformGrid1D tg = make_grid(32, 0.0, 2.0);
    const std::array<UniformGrid1D, 2> yz{y_grid, z_grid};
    const double x = 0.9;
    const SpinorField f = sc_field(amp, x, tg, yz);

    const double pyv = py.point(10), pzv = pz.point(6);
    const double eps = (4.0 + pyv * pyv + pzv * pzv) / 2.0;
    const double norm3 = std::pow(2.0 * pi, -1.5);
    double max_err = 0.0;
    for (int k = 0; k < tg.n; ++k)
        for (int jy = 0; jy < 16; ++jy)
            for (int jz = 0; jz < 16; ++jz) {
                const cplx exact = std::polar(norm3, 2.0 * x + pyv * y_grid.point(jy) +
                                                         pzv * z_grid.point(jz) - eps * tg.point(k));
                const std::size_t idx = (static_cast<std::size_t>(k) * 16 +
                                         static_cast<std::size_t>(jy)) * 16 +
                                        static_cast<std::size_t>(jz);
                max_err = std::max(max_err, std::abs(f.plus[idx] - exact));
            }
    CHECK(max_err < 1e-10);

    // norm bookkeeping stays consistent across representations in 3D too
    const SCEnergyAmplitude ebar = momentum_to_energy(amp);
    CHECK(sc_norm(ebar) == doctest::Approx(sc_norm(amp)).epsilon(1e-12));
}
