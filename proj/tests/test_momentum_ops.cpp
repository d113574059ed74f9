// Generator algebra and the stationary / coupled space-evolution equations.
// Oracles: constant-coefficient closed forms, conjugation symmetry of the
// branch equations, hand-evaluated Pauli algebra.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "stsqm/momentum_ops.hpp"

using namespace stsqm;
using std::numbers::pi;

namespace {

double branch_norm(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

// Single (eps, p_y) plane-wave mode on commensurate (t, y) grids.
SpinorField mode_field(int eps_index, int py_index, bool in_plus) {
    SpinorField f;
    f.t_grid = make_grid(64, 0.0, 2.0 * pi);
    f.transverse = {make_grid(16, -4.0 * pi, 4.0 * pi)};
    const UniformGrid1D eps_grid = conjugate_grid(f.t_grid, 1.0);
    const UniformGrid1D py_grid = conjugate_grid(f.transverse[0], 1.0);
    const double eps = eps_grid.point(eps_index);
    const double py = py_grid.point(py_index);
    const std::size_t nj = 16;
    f.plus.assign(64 * nj, cplx(0.0));
    f.minus.assign(64 * nj, cplx(0.0));
    std::vector<cplx>& dst = in_plus ? f.plus : f.minus;
    for (int k = 0; k < 64; ++k)
        for (int j = 0; j < 16; ++j)
            dst[static_cast<std::size_t>(k) * nj + static_cast<std::size_t>(j)] =
                std::polar(1.0, -eps * f.t_grid.point(k) + py * f.transverse[0].point(j));
    return f;
}

} // namespace

TEST_CASE("sigma_z eigenvalues: allowed, threshold, forbidden") {
    SUBCASE("eps=2, V=0 gives (2, -2)") {
        const auto [lp, lm] = px_eigenvalue_sigma_z({2.0, {}, 0.0});
        CHECK(lp == cplx(2.0, 0.0));
        CHECK(lm == cplx(-2.0, 0.0));
    }
    SUBCASE("threshold eps = V gives (0, 0)") {
        const auto [lp, lm] = px_eigenvalue_sigma_z({1.5, {}, 1.5});
        CHECK(std::abs(lp) == 0.0);
        CHECK(std::abs(lm) == 0.0);
    }
    SUBCASE("forbidden region: principal branch i sqrt(2)") {
        const auto [lp, lm] = px_eigenvalue_sigma_z({0.0, {}, 1.0});
        CHECK(std::abs(lp - cplx(0.0, std::sqrt(2.0))) < 1e-15);
        CHECK(std::abs(lm + lp) == 0.0);
        CHECK(std::abs(lp * lp - cplx(-2.0, 0.0)) < 1e-15);
    }
}

TEST_CASE("classically allowed iff the dispersion is nonnegative") {
    CHECK(ModeCoordinates{2.0, {}, 0.0}.classically_allowed({}));
    CHECK(ModeCoordinates{2.0, {1.0, 1.0}, 0.0}.classically_allowed({}));  // 4 - 2 >= 0
    CHECK_FALSE(ModeCoordinates{2.0, {2.0, 1.0}, 0.0}.classically_allowed({})); // 4 - 5 < 0
    CHECK_FALSE(ModeCoordinates{0.5, {}, 1.0}.classically_allowed({}));
    CHECK(ModeCoordinates{1.0, {}, 1.0}.classically_allowed({})); // threshold counts as allowed
}

TEST_CASE("lambda^2 reproduces the dispersion for randomized modes") {
    std::mt19937_64 eng(42);
    auto u = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
    };
    for (int i = 0; i < 1000; ++i) {
        ModeCoordinates mode{u(-5.0, 5.0), {u(-3.0, 3.0), u(-3.0, 3.0)}, u(-2.0, 2.0)};
        PhysicalConstants pc{1.0, u(0.5, 2.0)};
        const double disp = 2.0 * pc.mass * (mode.energy - mode.potential_value) - mode.p_perp_sq();
        const auto [lp, lm] = px_eigenvalue_sigma_z(mode, pc);
        CHECK(std::abs(lp * lp - cplx(disp, 0.0)) <= 1e-13 * std::max(1.0, std::abs(disp)));
        CHECK(lm == -lp);
    }
}

TEST_CASE("dirac split matrix: limits and dispersion identity") {
    SUBCASE("V=0, p_perp=0 reduces to the sigma_z form") {
        const TwoByTwoComplex M = dirac_split_matrix({2.0, {}, 0.0});
        CHECK(std::abs(M.a11 - cplx(2.0, 0.0)) < 1e-15);
        CHECK(std::abs(M.a22 + cplx(2.0, 0.0)) < 1e-15);
        CHECK(std::abs(M.a12) == 0.0);
        CHECK(std::abs(M.a21) == 0.0);
    }
    SUBCASE("eps=0, V=0, p_perp=(1,0) leaves i sigma_x") {
        const TwoByTwoComplex M = dirac_split_matrix({0.0, {1.0, 0.0}, 0.0});
        CHECK(std::abs(M.a11) == 0.0);
        CHECK(std::abs(M.a12 - cplx(0.0, 1.0)) < 1e-15);
        CHECK(std::abs(M.a21 - cplx(0.0, 1.0)) < 1e-15);
    }
    SUBCASE("eps=2, V=1: matrix squared = 2 * identity") {
        const TwoByTwoComplex M = dirac_split_matrix({2.0, {}, 1.0});
        const TwoByTwoComplex M2 = M * M;
        CHECK(std::abs(M2.a11 - cplx(2.0, 0.0)) < 1e-14);
        CHECK(std::abs(M2.a22 - cplx(2.0, 0.0)) < 1e-14);
        CHECK(std::abs(M2.a12) < 1e-14);
        CHECK(std::abs(M2.a21) < 1e-14);
    }
    SUBCASE("dispersion identity on randomized modes, both variants") {
        std::mt19937_64 eng(7);
        auto u = [&](double lo, double hi) {
            return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
        };
        for (int i = 0; i < 1000; ++i) {
            ModeCoordinates mode{u(-5.0, 5.0), {u(-3.0, 3.0), u(-3.0, 3.0)}, u(-2.0, 2.0)};
            const double disp = 2.0 * (mode.energy - mode.potential_value) - mode.p_perp_sq();
            for (SplitForm form : {SplitForm::sigma_z_full, SplitForm::energy_drift,
                                    SplitForm::transverse_drift}) {
                const TwoByTwoComplex M = dirac_split_matrix(mode, {}, form);
                const TwoByTwoComplex R = M * M - TwoByTwoComplex::identity().scaled(cplx(disp, 0.0));
                CHECK(R.max_abs() <= 1e-12 * std::max(1.0, std::abs(disp)));
            }
        }
    }
}

TEST_CASE("anticommutation checks on Pauli pairs") {
    const auto zx = verify_anticommutation(TwoByTwoComplex::pauli_z(), TwoByTwoComplex::pauli_x());
    CHECK(zx.ok);
    CHECK(zx.max_residual() == 0.0);

    const auto zz = verify_anticommutation(TwoByTwoComplex::pauli_z(), TwoByTwoComplex::pauli_z());
    CHECK_FALSE(zz.ok);
    CHECK(zz.anticommutator_residual == 2.0);

    // the alternative assignment alpha = sigma_x, beta = sigma_z works too
    const auto xz = verify_anticommutation(TwoByTwoComplex::pauli_x(), TwoByTwoComplex::pauli_z());
    CHECK(xz.ok);
    CHECK(xz.max_residual() == 0.0);
}

TEST_CASE("stationary SC equation, constant potential") {
    // V const: the equation collapses to -(hbar^2/2m) phi'' + V phi = eps phi,
    // solved by exp(+-i k x) with k = sqrt(2m(eps-V))/hbar.
    const double eps = 3.0, v0 = 1.0;
    const double k = std::sqrt(2.0 * (eps - v0));
    const Potential1D pot = Potential1D::constant(v0);

    SUBCASE("plane-wave solution reproduced to 1e-8 after one wavelength") {
        const double wavelength = 2.0 * pi / k;
        const UniformGrid1D g = make_grid(512, 0.0, wavelength);
        const auto sol = integrate_stationary_sc(cplx(1.0, 0.0), cplx(0.0, k), eps, pot, g,
                                                 Branch::plus);
        double max_err = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const cplx exact = std::polar(1.0, k * g.point(i));
            max_err = std::max(max_err, std::abs(sol.values[static_cast<std::size_t>(i)] - exact));
        }
        CHECK(max_err < 1e-8);
    }

    SUBCASE("eps = V: phi'' = 0, linear solutions") {
        const UniformGrid1D g = make_grid(64, 0.0, 5.0);
        const cplx a(0.3, -0.2), b(1.1, 0.4);
        const auto sol = integrate_stationary_sc(a, b, v0, pot, g, Branch::minus);
        for (int i = 0; i < g.n; ++i) {
            const cplx exact = a + b * g.point(i);
            CHECK(std::abs(sol.values[static_cast<std::size_t>(i)] - exact) < 1e-12);
        }
    }

    SUBCASE("fourth-order convergence under grid halving") {
        auto err_for = [&](int n) {
            const UniformGrid1D g = make_grid(n, 0.0, 4.0);
            const auto sol = integrate_stationary_sc(cplx(1.0, 0.0), cplx(0.0, k), eps, pot, g,
                                                     Branch::plus);
            const cplx exact = std::polar(1.0, k * g.point(n - 1));
            return std::abs(sol.values[static_cast<std::size_t>(n - 1)] - exact);
        };
        const double e1 = err_for(64), e2 = err_for(128);
        const double order = std::log2(e1 / e2);
        CHECK(order > 3.5);
        CHECK(order < 4.5);
    }

    SUBCASE("linearity: scaling the seed scales the solution") {
        const UniformGrid1D g = make_grid(128, 0.0, 3.0);
        const cplx scale(0.7, -1.3);
        const auto s1 = integrate_stationary_sc(cplx(1.0, 0.0), cplx(0.0, k), eps, pot, g,
                                                Branch::plus);
        const auto s2 = integrate_stationary_sc(scale, scale * cplx(0.0, k), eps, pot, g,
                                                Branch::plus);
        for (int i = 0; i < g.n; ++i)
            CHECK(std::abs(s2.values[static_cast<std::size_t>(i)] -
                           scale * s1.values[static_cast<std::size_t>(i)]) <
                  1e-13 * std::abs(scale * s1.values[static_cast<std::size_t>(i)]) + 1e-15);
    }
}

TEST_CASE("stationary SC equation, smooth step") {
    const Potential1D pot = Potential1D::smooth_step(1.0, 0.7);
    const double eps = 2.5;
    const UniformGrid1D g = make_grid(512, -4.0, 4.0);

    SUBCASE("branches are complex conjugates under conjugated seeds") {
        const cplx u0(0.8, 0.3), du0(-0.2, 1.1);
        const auto plus = integrate_stationary_sc(u0, du0, eps, pot, g, Branch::plus);
        const auto minus = integrate_stationary_sc(std::conj(u0), std::conj(du0), eps, pot, g,
                                                   Branch::minus);
        for (int i = 0; i < g.n; ++i)
            CHECK(std::abs(minus.values[static_cast<std::size_t>(i)] -
                           std::conj(plus.values[static_cast<std::size_t>(i)])) < 1e-12);
        const auto profile = combine_stationary(plus, minus);
        CHECK(profile.phi_plus.size() == profile.phi_minus.size());
    }

    SUBCASE("refuses the singular 1/V region") {
        const UniformGrid1D far_left = make_grid(64, -40.0, -20.0);
        CHECK_THROWS_WITH_AS(integrate_stationary_sc(cplx(1.0), cplx(0.0), eps, pot, far_left,
                                                     Branch::plus),
                             doctest::Contains("singular 1/V coefficient"), std::runtime_error);
    }
}

TEST_CASE("coupled SC step: decoupled free phases, potential-driven transfer") {
    SUBCASE("V=0 single mode: exact phase on phi+, phi- untouched") {
        const SpinorField f = mode_field(40, 10, true); // eps > 0, p_y != 0
        const UniformGrid1D eps_grid = conjugate_grid(f.t_grid, 1.0);
        const UniformGrid1D py_grid = conjugate_grid(f.transverse[0], 1.0);
        const double eps = eps_grid.point(40), py = py_grid.point(10);
        REQUIRE(eps > 0.0);
        const double lambda = std::sqrt(2.0 * eps - py * py);
        const double dx = 0.037;
        const SpinorField out = apply_coupled_sc_step(f, dx, 0.0);
        const cplx phase = std::polar(1.0, lambda * dx);
        for (std::size_t idx = 0; idx < f.plus.size(); ++idx) {
            CHECK(std::abs(out.plus[idx] - phase * f.plus[idx]) < 1e-11);
            CHECK(std::abs(out.minus[idx]) == 0.0);
        }
        CHECK(out.plane_x == doctest::Approx(f.plane_x + dx));
    }

    SUBCASE("V=0 single mode in phi-: opposite phase") {
        const SpinorField f = mode_field(40, 10, false);
        const UniformGrid1D eps_grid = conjugate_grid(f.t_grid, 1.0);
        const UniformGrid1D py_grid = conjugate_grid(f.transverse[0], 1.0);
        const double lambda = std::sqrt(2.0 * eps_grid.point(40) - std::pow(py_grid.point(10), 2));
        const double dx = 0.037;
        const SpinorField out = apply_coupled_sc_step(f, dx, 0.0);
        const cplx phase = std::polar(1.0, -lambda * dx);
        for (std::size_t idx = 0; idx < f.minus.size(); ++idx) {
            CHECK(std::abs(out.minus[idx] - phase * f.minus[idx]) < 1e-11);
            CHECK(std::abs(out.plus[idx]) == 0.0);
        }
    }

    SUBCASE("V=0 conserves each branch norm separately") {
        SpinorField f = mode_field(40, 10, true);
        // superpose a second allowed mode in phi-
        const SpinorField g2 = mode_field(35, 6, false);
        f.minus = g2.minus;
        const double np0 = branch_norm(f.plus), nm0 = branch_norm(f.minus);
        SpinorField out = f;
        for (int s = 0; s < 5; ++s) out = apply_coupled_sc_step(out, 0.02, 0.0);
        CHECK(branch_norm(out.plus) == doctest::Approx(np0).epsilon(1e-10));
        CHECK(branch_norm(out.minus) == doctest::Approx(nm0).epsilon(1e-10));
    }

    SUBCASE("V>0 grows phi- from zero at first order in dx") {
        const SpinorField f = mode_field(40, 0, true);
        const double v0 = 0.8;
        const SpinorField o1 = apply_coupled_sc_step(f, 0.01, v0);
        const SpinorField o2 = apply_coupled_sc_step(f, 0.02, v0);
        const double n1 = branch_norm(o1.minus), n2 = branch_norm(o2.minus);
        CHECK(n1 > 0.0);
        CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(0.05));
    }

    SUBCASE("energy_drift variant couples branches even at V=0 when p_perp != 0") {
        const SpinorField f = mode_field(40, 10, true);
        CoupledStepOptions opts;
        opts.form = SplitForm::energy_drift;
        const SpinorField out = apply_coupled_sc_step(f, 0.05, 0.0, opts);
        CHECK(branch_norm(out.minus) > 1e-4 * branch_norm(out.plus));
    }

    SUBCASE("step-size rejection reports the spectral radius") {
        const SpinorField f = mode_field(40, 10, true);
        CHECK_THROWS_WITH_AS(apply_coupled_sc_step(f, 50.0, 0.0),
                             doctest::Contains("spectral radius"), std::runtime_error);
    }
}
