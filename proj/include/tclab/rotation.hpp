#pragma once

// Rotation-number arithmetic: continued fractions, a measured Diophantine
// constant kappa with |q*omega - p| > kappa / q^tau, and return-time bounds
// for the circle rotation theta -> theta + omega.

#include <cstdint>
#include <cmath>
#include <optional>
#include <vector>

#include "tclab/dd.hpp"
#include "tclab/error.hpp"

namespace tclab::rot {

// Distance from x to the nearest integer, x as double-double.
inline double circle_norm(dd::DD x) {
    dd::DD f = dd::frac(x);
    double d = f.value();
    return std::min(d, 1.0 - d);
}

inline double circle_dist(double a, double b) {
    double d = std::fabs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

struct ContinuedFraction {
    std::vector<long long> quotients;
    std::vector<long long> p, q;  // convergents p_k/q_k (three-term recurrence)
    // True when iteration stopped because the remainder fell below the
    // certification threshold of double-double precision, not because the
    // expansion terminated.
    bool precision_exhausted = false;
};

// Partial quotients of x in (0, 1): x = 1/(a1 + 1/(a2 + ...)).
// The remainder's error bound is tracked through each reciprocal; iteration
// stops as soon as the next quotient can no longer be certified.
inline ContinuedFraction continued_fraction(dd::DD x, int max_terms = 64) {
    ContinuedFraction cf;
    double eps = 1e-32;
    for (int k = 0; k < max_terms; ++k) {
        double xv = x.value();
        if (xv <= eps * 4.0) break;  // expansion terminated (rational input)
        if (xv < std::sqrt(eps)) {
            cf.precision_exhausted = true;
            break;
        }
        dd::DD y = dd::div(dd::DD(1.0), x);
        double a = std::floor(y.value());
        if (a < 1.0) a = 1.0;
        x = dd::sub(y, a);
        eps = eps * y.value() * y.value() + 1e-32 * std::fabs(y.value());
        if (x.value() < 0.0) x = dd::DD(0.0);
        cf.quotients.push_back((long long)a);
        if (eps > 1e-3) {
            cf.precision_exhausted = true;
            break;
        }
    }
    // convergents: p_k = a_k p_{k-1} + p_{k-2}, seeds (p,q) = (1,0), (0,1)
    long long pm2 = 1, qm2 = 0, pm1 = 0, qm1 = 1;
    for (long long a : cf.quotients) {
        if (qm1 > (long long)4e17 / a) break;  // stop before overflow
        long long pk = a * pm1 + pm2, qk = a * qm1 + qm2;
        cf.p.push_back(pk);
        cf.q.push_back(qk);
        pm2 = pm1;
        qm2 = qm1;
        pm1 = pk;
        qm1 = qk;
    }
    return cf;
}

struct RotationNumber {
    dd::DD value;
    double tau = 1.0;
    double kappa = 0.0;        // min over 1 <= q <= q_max of q^tau * ||q omega||
    long long kappa_q_max = 0;
    std::vector<long long> quotients;
    bool cf_precision_exhausted = false;
};

// Brute-force Diophantine constant over q <= q_max.  The running multiple
// q*omega is kept reduced in double-double, so the distance to the nearest
// integer stays exact to ~1e-26 across the whole scan.
inline double estimate_kappa(dd::DD omega, double tau, long long q_max) {
    if (q_max < 1) throw Error("estimate_kappa: q_max must be positive");
    dd::DD acc(0.0);
    double best = 1e300;
    for (long long q = 1; q <= q_max; ++q) {
        acc = dd::frac(dd::add(acc, omega));
        double d = acc.value();
        d = std::min(d, 1.0 - d);
        double v = std::pow(double(q), tau) * d;
        if (v < best) best = v;
    }
    return best;
}

inline RotationNumber make_rotation(dd::DD omega, double tau = 1.0,
                                    long long q_max = 1000000) {
    double w = omega.value();
    if (!(w > 0.0 && w < 1.0)) throw Error("rotation number must lie in (0,1)");
    if (!(tau >= 1.0)) throw Error("tau must be >= 1");
    RotationNumber r;
    r.value = omega;
    r.tau = tau;
    r.kappa_q_max = q_max;
    r.kappa = estimate_kappa(omega, tau, q_max);
    ContinuedFraction cf = continued_fraction(omega);
    r.quotients = cf.quotients;
    r.cf_precision_exhausted = cf.precision_exhausted;
    return r;
}

inline RotationNumber golden_rotation(double tau = 1.0, long long q_max = 1000000) {
    return make_rotation(dd::golden(), tau, q_max);
}

// Largest N with: no return of an eps-interval to itself within N steps,
// i.e. ||q omega|| > kappa/q^tau guarantees (I + m omega) cap I = empty for
// every m <= (kappa/eps)^(1/tau).
inline long long min_return_time(double eps, double kappa, double tau) {
    if (!(eps > 0.0)) throw Error("min_return_time: eps must be positive");
    if (eps >= kappa) return 0;
    return (long long)std::floor(std::pow(kappa / eps, 1.0 / tau));
}

inline long long min_return_time(double eps, const RotationNumber& om) {
    return min_return_time(eps, om.kappa, om.tau);
}

// Smallest m in [1, n_max] with (I + m omega) cap I nonempty, where I has
// length |b - a|; equivalently the first m with ||m omega|| < |I|.
inline std::optional<long long> first_return(double a, double b, long long n_max,
                                             const RotationNumber& om) {
    double len = std::fabs(b - a);
    if (len <= 0.0) return std::nullopt;
    dd::DD acc(0.0);
    for (long long m = 1; m <= n_max; ++m) {
        acc = dd::frac(dd::add(acc, om.value));
        double d = acc.value();
        d = std::min(d, 1.0 - d);
        if (d < len) return m;
    }
    return std::nullopt;
}

}  // namespace tclab::rot
