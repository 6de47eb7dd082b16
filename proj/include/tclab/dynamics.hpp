#pragma once

// The quasi-periodically forced quadratic map on T x [0,1]:
//
//   theta' = theta + omega  (mod 1)
//   x'     = c(theta) * x * (1 - x)
//
// with forcing profile c(theta) = 3/2 + beta * (5/2) / (1 + lambda * g(theta)^2),
// g(theta) = cos 2pi(theta - alpha/2) - cos pi*alpha.  g vanishes at theta = 0
// and theta = alpha, so c has two peaks of height 3/2 + 5 beta / 2 and is flat
// near 3/2 elsewhere once lambda is large.  States carry the tangent lift
// d x_n / d theta_0 and the parameter lift d x_n / d beta alongside x.

#include <cmath>
#include <cstdint>
#include <string>

#include "tclab/dd.hpp"
#include "tclab/error.hpp"
#include "tclab/rotation.hpp"

namespace tclab::dyn {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;

// The contraction target interval C = [1/3 - 1/100, 1/3 + 1/100].
inline constexpr double kContractCenter = 1.0 / 3.0;
inline constexpr double kContractRadius = 1.0 / 100.0;
inline constexpr double kContractLo = kContractCenter - kContractRadius;
inline constexpr double kContractHi = kContractCenter + kContractRadius;

inline double quad_p(double x) { return x * (1.0 - x); }
inline double quad_p_prime(double x) { return 1.0 - 2.0 * x; }

struct SystemParams {
    double alpha = 0.0;
    double beta = 0.0;
    double lambda = 1e6;
    rot::RotationNumber omega;

    // cached for the hot loop
    double alpha_half = 0.0;
    double cos_pi_alpha = 1.0;
    double five_beta_half = 0.0;
};

inline SystemParams make_params(double alpha, double beta, double lambda,
                                const rot::RotationNumber& omega) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0,1]");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0,1)");
    SystemParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.lambda = lambda;
    p.omega = omega;
    p.alpha_half = 0.5 * alpha;
    p.cos_pi_alpha = std::cos(kPi * alpha);
    p.five_beta_half = 2.5 * beta;
    return p;
}

inline double peak_profile_g(double theta, double alpha) {
    return std::cos(kTwoPi * (theta - 0.5 * alpha)) - std::cos(kPi * alpha);
}

struct Forcing {
    double c;
    double dc_dtheta;
    double dc_dbeta;
};

// c and both partials from one sin/cos pair.  theta enters as double-double;
// the collapsed phase keeps the absolute error ~1e-16, far below the peak
// core width lambda^(-1/2).
inline Forcing forcing_all(dd::DD theta, const SystemParams& p) {
    double phase = (theta.hi - p.alpha_half) + theta.lo;
    double m = kTwoPi * phase;
    double g = std::cos(m) - p.cos_pi_alpha;
    double g_theta = -kTwoPi * std::sin(m);
    double denom = 1.0 + p.lambda * g * g;
    double inv = 1.0 / denom;
    Forcing f;
    f.c = 1.5 + p.five_beta_half * inv;
    f.dc_dtheta = -2.0 * p.five_beta_half * p.lambda * g * g_theta * inv * inv;
    f.dc_dbeta = 2.5 * inv;
    return f;
}

inline double forcing_c(dd::DD theta, const SystemParams& p) { return forcing_all(theta, p).c; }
inline double forcing_c(double theta, const SystemParams& p) { return forcing_all(dd::DD(theta), p).c; }
inline double forcing_dc_dtheta(double theta, const SystemParams& p) {
    return forcing_all(dd::DD(theta), p).dc_dtheta;
}
inline double forcing_dc_dbeta(double theta, const SystemParams& p) {
    return forcing_all(dd::DD(theta), p).dc_dbeta;
}

struct LiftedState {
    dd::DD theta;
    double x = 0.0;
    double dx_dtheta = 0.0;  // d x_n / d theta_0
    double dx_dbeta = 0.0;   // d x_n / d beta
};

inline LiftedState make_state(double theta, double x) {
    LiftedState s;
    s.theta = dd::frac(dd::DD(theta));
    s.x = x;
    return s;
}

inline LiftedState step(const LiftedState& s, const SystemParams& p) {
    Forcing f = forcing_all(s.theta, p);
    double px = s.x * (1.0 - s.x);
    double pp = 1.0 - 2.0 * s.x;
    LiftedState n;
    n.x = f.c * px;
    n.dx_dtheta = f.dc_dtheta * px + f.c * pp * s.dx_dtheta;
    n.dx_dbeta = f.dc_dbeta * px + f.c * pp * s.dx_dbeta;
    n.theta = dd::frac(dd::add(s.theta, p.omega.value));
    return n;
}

inline LiftedState iterate(LiftedState s, long long n, const SystemParams& p) {
    for (long long k = 0; k < n; ++k) s = step(s, p);
    return s;
}

// frac(theta0 + n*omega) without per-step drift, n may be negative.
inline dd::DD rotate_n(double theta0, long long n, const rot::RotationNumber& om) {
    dd::DD nw = dd::mul(om.value, double(n));
    return dd::frac(dd::add(nw, theta0));
}

// Region constants tied to lambda: the peak windows I0, I0 + omega of
// half-width lambda^(-1/7), and the induction seeds M0, K0.
struct RegionConstants {
    double i0_halfwidth = 0.0;
    long long m0 = 0;
    long long k0 = 0;
};

inline RegionConstants region_constants(double lambda, double tau) {
    RegionConstants rc;
    rc.i0_halfwidth = std::pow(lambda, -1.0 / 7.0);
    rc.m0 = (long long)std::floor(std::pow(lambda, 1.0 / (14.0 * tau)));
    rc.k0 = (long long)std::floor(std::pow(lambda, 1.0 / (28.0 * tau)));
    return rc;
}

inline bool in_I0(double theta, const RegionConstants& rc) {
    return rot::circle_dist(theta, 0.0) <= rc.i0_halfwidth;
}

inline bool in_I0_peaks(double theta, const RegionConstants& rc, double omega) {
    return in_I0(theta, rc) || rot::circle_dist(theta, omega) <= rc.i0_halfwidth;
}

// Admissible alpha window A0 = [omega - lambda^(-2/5)/2, omega - 2 lambda^(-2/3)].
struct AlphaWindow {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return !(lo < hi); }
    bool contains(double a) const { return a >= lo && a <= hi; }
};

inline AlphaWindow alpha_window(double lambda, double omega) {
    AlphaWindow w;
    w.lo = omega - 0.5 * std::pow(lambda, -0.4);
    w.hi = omega - 2.0 * std::pow(lambda, -2.0 / 3.0);
    return w;
}

inline double alpha_window_mid(double lambda, double omega) {
    AlphaWindow w = alpha_window(lambda, omega);
    if (w.empty()) throw ConfigError("alpha window is empty at this lambda");
    return 0.5 * (w.lo + w.hi);
}

// Lyapunov exponent along the fiber: (1/n) sum log |c(theta_k) p'(x_k)|.
// Terms with |1 - 2x| below kDegenerateFloor would be -inf; they are dropped
// and counted, and the orbit is rejected if they exceed one in 1e6 steps.
inline constexpr double kDegenerateFloor = 1e-300;
inline constexpr double kDegenerateMaxFraction = 1e-6;

inline double lyapunov_estimate(double theta0, double x0, long long n,
                                const SystemParams& p, long long burn = 0) {
    if (n <= 0) throw Error("lyapunov_estimate: n must be positive");
    if (burn < 0) throw Error("lyapunov_estimate: burn must be nonnegative");
    if (!(x0 >= 0.0 && x0 <= 1.0)) throw Error("lyapunov_estimate: x0 must lie in [0,1]");
    LiftedState s = make_state(theta0, x0);
    for (long long k = 0; k < burn; ++k) {
        double c = forcing_c(s.theta, p);
        s.x = c * s.x * (1.0 - s.x);
        s.theta = dd::frac(dd::add(s.theta, p.omega.value));
    }
    double sum = 0.0, comp = 0.0;  // Kahan
    long long dropped = 0;
    for (long long k = 0; k < n; ++k) {
        double c = forcing_c(s.theta, p);
        double mult = std::fabs(1.0 - 2.0 * s.x);
        if (mult < kDegenerateFloor) {
            ++dropped;
        } else {
            double term = std::log(c * mult) - comp;
            double t = sum + term;
            comp = (t - sum) - term;
            sum = t;
        }
        s.x = c * s.x * (1.0 - s.x);
        s.theta = dd::frac(dd::add(s.theta, p.omega.value));
    }
    if (double(dropped) > kDegenerateMaxFraction * double(n))
        throw DegenerateOrbit("lyapunov_estimate: " + std::to_string(dropped) + " of " +
                              std::to_string(n) + " multipliers below 1e-300");
    long long used = n - dropped;
    if (used <= 0) throw DegenerateOrbit("lyapunov_estimate: all multipliers degenerate");
    return sum / double(used);
}

}  // namespace tclab::dyn
