#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "unidiff/analytic.hpp"

using namespace unidiff;
namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("t = 0 reduces to the free resolvent f = 1/(z-1)") {
    for (Complex z : {Complex(2.0, 0.0), Complex(1.5, 2.0), Complex(-3.0, 0.4)}) {
        const Complex expected = 1.0 / (z - 1.0);
        const Complex f = solve_f(z, 0.0, 1.0, expected + Complex(0.05, 0.02));
        CHECK(std::abs(f - expected) < 1e-12 * (1.0 + std::abs(expected)));
    }
}

TEST_CASE("large |z| asymptotics recovers a_1 = exp(-m2 t / 2)") {
    const Complex z(1e8, 0.0);
    const Complex f = solve_f_at(z, 1.0, 1.0);
    const Complex lead = std::exp(-0.5) / z;
    CHECK(std::abs(f - lead) / std::abs(lead) < 1e-6);
}

TEST_CASE("accepted solutions satisfy the residual bound") {
    for (double tau : {0.5, 2.0, 4.0, 7.0}) {
        for (double th : {0.0, 1.0, 2.5, kPi}) {
            const Complex f = solve_f_on_circle(th, tau, 1.0);
            const Complex z = std::polar(1.0, th);
            const Complex r = z * f - (1.0 + f) * std::exp(-tau * (f + 0.5));
            CHECK(std::abs(r) < 1e-12 * (1.0 + std::abs(f)));
        }
    }
}

TEST_CASE("edge formula") {
    SUBCASE("m2 t = 2 gives theta_edge = pi/2 + 1") {
        const auto ep = edge_points(2.0, 1.0);
        REQUIRE_FALSE(ep.full_circle());
        CHECK(*ep.theta_edge == doctest::Approx(kPi / 2.0 + 1.0).epsilon(1e-13));
    }
    SUBCASE("critical and supercritical support covers the circle") {
        CHECK(edge_points(4.0, 1.0).full_circle());
        CHECK(edge_points(10.0, 1.0).full_circle());
        CHECK(edge_points(2000.0, 1.0 / 500.0).full_circle());
    }
    SUBCASE("the edge approaches pi as m2 t -> 4") {
        CHECK(*edge_points(3.999999, 1.0).theta_edge == doctest::Approx(kPi).epsilon(1e-3));
    }
    SUBCASE("small-time edge ~ 2 sqrt(m2 t)") {
        CHECK(*edge_points(0.01, 1.0).theta_edge == doctest::Approx(0.2).epsilon(5e-3));
    }
    SUBCASE("scaling in m2 * t only") {
        CHECK(*edge_points(1000.0, 0.002).theta_edge ==
              doctest::Approx(*edge_points(2.0, 1.0).theta_edge).epsilon(1e-12));
    }
}

TEST_CASE("critical time") {
    CHECK(critical_time(1.0 / 500.0) == doctest::Approx(2000.0));
    CHECK(critical_time(1.0) == doctest::Approx(4.0));
    CHECK(critical_time(2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(critical_time(0.0), std::invalid_argument);
}

TEST_CASE("density vanishes outside the arc and is positive inside") {
    const double te = kPi / 2.0 + 1.0; // m2 t = 2
    CHECK(rho_at(te + 0.2, 2.0, 1.0) < 1e-8);
    CHECK(rho_at(te + 1e-3, 2.0, 1.0) < 1e-8);
    CHECK(rho_at(te - 0.2, 2.0, 1.0) > 0.0);
    CHECK(rho_at(0.0, 2.0, 1.0) > 0.0);
    // off-support boundary values have Re(1/2 + f) = 0
    const Complex f = solve_f_on_circle(te + 0.3, 2.0, 1.0);
    CHECK(std::abs((0.5 + f).real()) < 1e-8);
}

TEST_CASE("moment recursion") {
    SUBCASE("a_1 at m2 t = 1") {
        const auto mom = analytic_moments(1.0, 1.0, 1);
        CHECK(mom.a[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
    }
    SUBCASE("a_2 has its root at m2 t = 1") {
        const auto mom = analytic_moments(1.0, 1.0, 2);
        CHECK(std::abs(mom.a[1]) < 1e-14);
    }
    SUBCASE("a_2 is positive below the root (sign fixed by U(0) = I)") {
        const auto mom = analytic_moments(0.3, 1.0, 2);
        CHECK(mom.a[1] == doctest::Approx(std::exp(-0.3) * 0.7).epsilon(1e-13));
    }
    SUBCASE("a_5 at m2 t = 1") {
        const auto mom = analytic_moments(1.0, 1.0, 5);
        CHECK(mom.a[4] == doctest::Approx((9.0 / 24.0) * std::exp(-2.5)).epsilon(1e-12));
    }
    SUBCASE("all moments are 1 at t = 0") {
        const auto mom = analytic_moments(0.0, 1.0, 10);
        for (double a : mom.a) CHECK(a == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("closed forms match the recursion across the time grid") {
        for (int i = 0; i < 20; ++i) {
            const double tau = 5.5 * i / 19.0;
            const auto mom = analytic_moments(tau, 1.0, 5);
            const auto ref = closed_form_moments(tau);
            for (int k = 0; k < 5; ++k)
                CHECK(std::abs(mom.a[k] - ref[k]) <=
                      1e-10 * std::max(1e-3, std::abs(ref[k])));
        }
    }
    SUBCASE("moments of a probability measure stay within [-1, 1]") {
        for (double tau : {0.2, 1.7, 4.0, 9.0}) {
            const auto mom = analytic_moments(tau, 1.0, 50);
            for (double a : mom.a) CHECK(std::abs(a) <= 1.0 + 1e-12);
        }
    }
    SUBCASE("depends on m2 and t only through the product") {
        const auto a = analytic_moments(2750.0, 1.0 / 500.0, 8);
        const auto b = analytic_moments(5.5, 1.0, 8);
        for (int k = 0; k < 8; ++k) CHECK(a.a[k] == doctest::Approx(b.a[k]).epsilon(1e-13));
    }
}

TEST_CASE("uniform limit at large m2 t") {
    for (int i = 0; i <= 32; ++i) {
        const double th = -kPi + 1e-9 + (2 * kPi - 2e-9) * i / 32.0;
        CHECK(std::abs(rho_at(th, 100.0, 1.0) - 1.0 / (2 * kPi)) < 1e-6);
    }
}

TEST_CASE("near-critical profile") {
    SUBCASE("exact zero at pi and pure power-law ratio") {
        CHECK(near_critical_profile(kPi) == 0.0);
        CHECK(near_critical_profile(kPi - 0.2) / near_critical_profile(kPi - 0.025) ==
              doctest::Approx(2.0).epsilon(1e-13));
    }
    SUBCASE("coefficient value") {
        CHECK(critical_density_coefficient() == doctest::Approx(0.15777850973).epsilon(1e-9));
    }
    SUBCASE("profile tracks the full solution inside the window") {
        for (double d : {0.02, 0.1, 0.3}) {
            const double full = rho_at(kPi - d, 4.0, 1.0);
            CHECK(std::abs(full - near_critical_profile(kPi - d)) / full < 0.01);
        }
    }
}

TEST_CASE("default grid trapezoid normalization") {
    for (double tau : {1.0, 4.0, 5.5}) {
        const auto grid = default_theta_grid(tau, 1.0, 2048);
        const auto sol = density(tau, 1.0, grid);
        CHECK(sol.failed_indices.empty());
        CHECK(std::abs(trapezoid_periodic(grid, sol.rho_values) - 1.0) < 1e-6);
        // symmetry comes out of the solve rather than being imposed
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double th = grid[i];
            if (th <= 0.0 || th >= kPi) continue;
            const auto it = std::lower_bound(grid.begin(), grid.end(), -th - 1e-15);
            if (it != grid.end() && std::abs(*it + th) < 1e-13) {
                const std::size_t j = it - grid.begin();
                worst = std::max(worst, std::abs(sol.rho_values[i] - sol.rho_values[j]));
            }
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("density input validation") {
    CHECK_THROWS_AS(density(0.0, 1.0, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(density(1.0, -1.0, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(density(1.0, 1.0, {0.5, 0.2}), std::invalid_argument);
}

TEST_CASE("fourier density") {
    SUBCASE("uniform at large m2 t") {
        const auto grid = default_theta_grid(100.0, 1.0, 256);
        const auto fou = density_from_moments(100.0, 1.0, 64, grid);
        for (double r : fou.solution.rho_values)
            CHECK(std::abs(r - 1.0 / (2 * kPi)) < 1e-9);
        CHECK_FALSE(fou.tail_warning);
    }
    SUBCASE("normalization is exact on a uniform grid by orthogonality") {
        std::vector<double> grid(512);
        for (int i = 0; i < 512; ++i) grid[i] = -kPi + 2 * kPi * (i + 1) / 512.0;
        const auto fou = density_from_moments(2.0, 1.0, 128, grid);
        CHECK(std::abs(trapezoid_periodic(grid, fou.solution.rho_values) - 1.0) < 1e-12);
    }
    SUBCASE("cross-oracle agreement at m2 t = 5") {
        const auto grid = default_theta_grid(5.0, 1.0, 512);
        const auto sol = density(5.0, 1.0, grid);
        const auto fou = density_from_moments(5.0, 1.0, 200, grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            worst = std::max(worst, std::abs(sol.rho_values[i] - fou.solution.rho_values[i]));
        CHECK(worst < 1e-5);
    }
    SUBCASE("subcritical tail bound triggers the warning") {
        const auto grid = default_theta_grid(1.0, 1.0, 256);
        const auto fou = density_from_moments(1.0, 1.0, 512, grid);
        CHECK(fou.tail_warning); // k^{-3/2} decay: tail above 1e-6 at this k_max
    }
}

TEST_CASE("interior branch through the spectral gap") {
    const Complex f0 = solve_f_at(Complex(0.0, 0.0), 2.0, 1.0);
    CHECK(std::abs(f0 - Complex(-1.0, 0.0)) < 1e-10);
    // f(w) = -1 - sum a_k w^k inside the disk
    const Complex fw = solve_f_at(Complex(0.3, 0.0), 2.0, 1.0);
    const auto mom = analytic_moments(2.0, 1.0, 64);
    Complex series(-1.0, 0.0);
    double wk = 1.0;
    for (int k = 1; k <= 64; ++k) {
        wk *= 0.3;
        series -= mom.a[k - 1] * wk;
    }
    CHECK(std::abs(fw - series) < 1e-8);
    CHECK_THROWS_AS(solve_f_at(Complex(0.3, 0.0), 5.0, 1.0), BranchLossError);
}

TEST_CASE("s-transform consistency") {
    SUBCASE("free case t = 0") {
        CHECK(s_transform_check(Complex(0.3, 0.0), 0.0, 1.0) < 1e-12);
    }
    SUBCASE("z = 0.1 at m2 t = 1") {
        CHECK(s_transform_check(Complex(0.1, 0.0), 1.0, 1.0) < 1e-10);
    }
    SUBCASE("points from the valid-region helper") {
        for (double tau : {0.5, 1.0, 2.0})
            for (double z : s_check_points(tau, 1.0, 7))
                CHECK(s_transform_check(Complex(z, 0.0), tau, 1.0) < 1e-10);
    }
    SUBCASE("w inside the unit disk is rejected") {
        // at m2 t = 2, z = 0.5 maps to w ~ 0.406 inside the disk
        CHECK_THROWS_AS(s_transform_check(Complex(0.5, 0.0), 2.0, 1.0), BranchLossError);
    }
}

TEST_CASE("quadrature utilities") {
    SUBCASE("trapezoid of a pure harmonic vanishes on a uniform grid") {
        std::vector<double> grid(128), vals(128);
        for (int i = 0; i < 128; ++i) {
            grid[i] = -kPi + 2 * kPi * (i + 1) / 128.0;
            vals[i] = std::cos(3.0 * grid[i]);
        }
        CHECK(std::abs(trapezoid_periodic(grid, vals)) < 1e-13);
    }
    SUBCASE("integrated density is normalized and reproduces moments") {
        CHECK(integrate_density(2.0, 1.0, 0) == doctest::Approx(1.0).epsilon(1e-8));
        const auto mom = analytic_moments(2.0, 1.0, 3);
        CHECK(integrate_density(2.0, 1.0, 2) == doctest::Approx(mom.a[1]).epsilon(1e-7));
    }
}
