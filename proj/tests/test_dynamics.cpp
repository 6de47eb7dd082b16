#include <catch2/catch_amalgamated.hpp>

#include "tclab/dynamics.hpp"

using namespace tclab;

namespace {
rot::RotationNumber golden_om() {
    static rot::RotationNumber om = rot::golden_rotation(1.0, 10000);
    return om;
}
}  // namespace

TEST_CASE("forcing peaks and range") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());

    for (double beta : {0.0, 0.5, 1.0}) {
        dyn::SystemParams p = dyn::make_params(alpha, beta, 1e6, om);
        // at both peak centers g = 0, so c attains 3/2 + 5 beta / 2
        REQUIRE(dyn::forcing_c(0.0, p) == Catch::Approx(1.5 + 2.5 * beta).margin(1e-12));
        REQUIRE(dyn::forcing_c(alpha, p) == Catch::Approx(1.5 + 2.5 * beta).margin(1e-12));
        for (int i = 0; i < 1000; ++i) {
            double c = dyn::forcing_c(double(i) / 1000.0, p);
            REQUIRE(c >= 1.5);
            REQUIRE(c <= 1.5 + 2.5 * beta + 1e-12);
        }
    }

    dyn::SystemParams p0 = dyn::make_params(alpha, 0.0, 1e6, om);
    for (double th : {0.0, 0.123, 0.5, alpha})
        REQUIRE(dyn::forcing_c(th, p0) == Catch::Approx(1.5).margin(1e-15));
}

TEST_CASE("forcing derivatives match finite differences") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());
    dyn::SystemParams p = dyn::make_params(alpha, 0.7, 1e6, om);

    // dc/dbeta: c is affine in beta, so the difference quotient is exact
    dyn::SystemParams pa = dyn::make_params(alpha, 0.7 - 0.1, 1e6, om);
    dyn::SystemParams pb = dyn::make_params(alpha, 0.7 + 0.1, 1e6, om);
    for (double th : {0.05, alpha + 3e-4, 0.4}) {
        double fd = (dyn::forcing_c(th, pb) - dyn::forcing_c(th, pa)) / 0.2;
        REQUIRE(dyn::forcing_dc_dbeta(th, p) == Catch::Approx(fd).margin(1e-10));
    }

    // dc/dtheta: central differences on and off the flank
    for (double th : {0.1, 0.25, alpha + 2e-4, alpha - 5e-3}) {
        double h = 1e-7;
        double fd = (dyn::forcing_c(th + h, p) - dyn::forcing_c(th - h, p)) / (2 * h);
        double an = dyn::forcing_dc_dtheta(th, p);
        REQUIRE(an == Catch::Approx(fd).margin(std::max(1e-6, 1e-4 * std::fabs(fd))));
    }
}

TEST_CASE("tangent lift matches finite differences over an orbit") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());
    dyn::SystemParams p = dyn::make_params(alpha, 0.7, 1e6, om);

    double th0 = 0.2125, x0 = 0.37;
    dyn::LiftedState s = dyn::iterate(dyn::make_state(th0, x0), 30, p);

    double h = 1e-7;
    auto x_after = [&](double t0, const dyn::SystemParams& pp) {
        return dyn::iterate(dyn::make_state(t0, x0), 30, pp).x;
    };
    double fd_theta = (x_after(th0 + h, p) - x_after(th0 - h, p)) / (2 * h);
    REQUIRE(s.dx_dtheta == Catch::Approx(fd_theta).epsilon(1e-5).margin(1e-8));

    dyn::SystemParams pa = dyn::make_params(alpha, 0.7 - h, 1e6, om);
    dyn::SystemParams pb = dyn::make_params(alpha, 0.7 + h, 1e6, om);
    double fd_beta = (x_after(th0, pb) - x_after(th0, pa)) / (2 * h);
    REQUIRE(s.dx_dbeta == Catch::Approx(fd_beta).epsilon(1e-5).margin(1e-8));
}

TEST_CASE("fiber stays in [0,1]") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());
    dyn::SystemParams p = dyn::make_params(alpha, 1.0, 1e6, om);
    dyn::LiftedState s = dyn::make_state(0.77, 0.5);
    for (int k = 0; k < 5000; ++k) {
        s = dyn::step(s, p);
        REQUIRE(s.x >= 0.0);
        REQUIRE(s.x <= 1.0);
    }
}

TEST_CASE("rotate_n agrees with step accumulation at 1e6 iterations") {
    rot::RotationNumber om = golden_om();
    dd::DD acc(0.25);
    for (int k = 0; k < 1000000; ++k) acc = dd::frac(dd::add(acc, om.value));
    dd::DD direct = dyn::rotate_n(0.25, 1000000, om);
    REQUIRE(std::fabs(dd::sub(acc, direct).value()) < 1e-20);
    // negative n inverts
    dd::DD back = dyn::rotate_n(direct.value(), -1000000, om);
    double diff = std::fabs(back.value() - 0.25);
    REQUIRE(std::min(diff, 1.0 - diff) < 1e-9);
}

TEST_CASE("Lyapunov exponent in the unforced limit is -log 2") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());
    dyn::SystemParams p = dyn::make_params(alpha, 0.0, 1e6, om);
    double gamma = dyn::lyapunov_estimate(0.3, 0.2, 1000000, p, 10000);
    REQUIRE(gamma == Catch::Approx(-std::log(2.0)).margin(1e-6));
}

TEST_CASE("Lyapunov exponent on the invariant zero section is +log c") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());
    dyn::SystemParams p = dyn::make_params(alpha, 0.0, 1e6, om);
    // x = 0 is a fixed fiber: multiplier c * p'(0) = 3/2 at beta = 0
    double gamma = dyn::lyapunov_estimate(0.3, 0.0, 1000, p);
    REQUIRE(gamma == Catch::Approx(std::log(1.5)).margin(1e-12));
}

TEST_CASE("orbit through the critical point is rejected as degenerate") {
    rot::RotationNumber om = golden_om();
    double alpha = dyn::alpha_window_mid(1e6, om.value.value());
    dyn::SystemParams p = dyn::make_params(alpha, 0.0, 1e6, om);
    REQUIRE_THROWS_AS(dyn::lyapunov_estimate(0.3, 0.5, 10, p), DegenerateOrbit);
}

TEST_CASE("region constants and membership") {
    dyn::RegionConstants rc = dyn::region_constants(1e6, 1.0);
    REQUIRE(rc.i0_halfwidth == Catch::Approx(std::pow(10.0, -6.0 / 7.0)).epsilon(1e-14));
    REQUIRE(rc.k0 == 1);
    REQUIRE(rc.m0 == 2);

    REQUIRE(dyn::in_I0(0.13, rc));
    REQUIRE(dyn::in_I0(0.87, rc));  // wraps
    REQUIRE_FALSE(dyn::in_I0(0.14, rc));

    double w = rot::golden_rotation(1.0, 100).value.value();
    REQUIRE(dyn::in_I0_peaks(w + 0.1, rc, w));
    REQUIRE_FALSE(dyn::in_I0_peaks(0.35, rc, w));
}

TEST_CASE("alpha window shape") {
    double w = rot::golden_rotation(1.0, 100).value.value();
    dyn::AlphaWindow a6 = dyn::alpha_window(1e6, w);
    REQUIRE_FALSE(a6.empty());
    REQUIRE(a6.hi == Catch::Approx(w - 2e-4).epsilon(1e-12));
    REQUIRE(a6.lo == Catch::Approx(w - 0.5 * std::pow(10.0, -2.4)).epsilon(1e-12));
    REQUIRE(a6.contains(dyn::alpha_window_mid(1e6, w)));

    // below the crossover the window closes and the mid query must fail
    dyn::AlphaWindow a2 = dyn::alpha_window(100.0, w);
    REQUIRE(a2.empty());
    REQUIRE_THROWS_AS(dyn::alpha_window_mid(100.0, w), ConfigError);
}

TEST_CASE("parameter validation") {
    rot::RotationNumber om = golden_om();
    REQUIRE_THROWS_AS(dyn::make_params(0.6, -0.1, 1e6, om), ConfigError);
    REQUIRE_THROWS_AS(dyn::make_params(0.6, 1.1, 1e6, om), ConfigError);
    REQUIRE_THROWS_AS(dyn::make_params(0.6, 0.5, -1.0, om), ConfigError);
    REQUIRE_THROWS_AS(dyn::make_params(1.5, 0.5, 1e6, om), ConfigError);
}
