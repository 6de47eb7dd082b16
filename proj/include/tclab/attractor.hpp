#pragma once

// Pullback computation of the global attracting invariant graph psi(theta):
// iterate two seeds in the contraction interval C forward from theta - d*omega
// and certify convergence by their final separation.  The lifted derivatives
// ride along, so dpsi/dtheta and dpsi/dbeta come out of the same pass with no
// finite differencing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tclab/dynamics.hpp"
#include "tclab/parallel.hpp"

namespace tclab::attr {

inline constexpr double kSeedLo = dyn::kContractLo;
inline constexpr double kSeedHi = dyn::kContractHi;
inline constexpr double kSeedGap = kSeedHi - kSeedLo;  // 0.02

// Upper bound T1(beta) on the recovery time from the deepest valley back to
// x >= 1/100, in units of the guaranteed ascent factor 5/4.
inline double t1_bound(double beta) {
    if (beta >= 1.0) return std::numeric_limits<double>::infinity();
    double v = std::log(1.0 / (10.0 * (1.0 - beta))) / std::log(1.25);
    return std::max(0.0, v);
}

// Smallest depth with 0.02 * (3/5)^(d/2) <= tol, plus a safety addend that
// grows like T1(beta) to absorb the expansion episode of one valley passage.
inline int choose_depth(double beta, double tol) {
    if (!(tol > 0.0)) throw Error("choose_depth: tol must be positive");
    double base = 2.0 * std::log(kSeedGap / tol) / std::log(5.0 / 3.0);
    int d = std::max(16, (int)std::ceil(base));
    double safety = (beta < 1.0) ? std::ceil(t1_bound(beta)) : 64.0;
    return d + (int)safety;
}

inline dyn::LiftedState pullback_from_seed(double theta, double x0, int depth,
                                           const dyn::SystemParams& p) {
    dyn::LiftedState s;
    s.theta = dyn::rotate_n(theta, -(long long)depth, p.omega);
    s.x = x0;
    return dyn::iterate(s, depth, p);
}

struct PullbackValue {
    double psi = 0.0;
    double dpsi_dtheta = 0.0;
    double dpsi_dbeta = 0.0;
    double residual = 0.0;  // |x difference| of the two seeds after pullback
    int depth = 0;
    bool converged = false;
};

inline PullbackValue pullback_value(double theta, int depth, const dyn::SystemParams& p,
                                    double tol) {
    dyn::LiftedState a = pullback_from_seed(theta, kSeedLo, depth, p);
    dyn::LiftedState b = pullback_from_seed(theta, kSeedHi, depth, p);
    PullbackValue v;
    v.psi = 0.5 * (a.x + b.x);
    v.dpsi_dtheta = 0.5 * (a.dx_dtheta + b.dx_dtheta);
    v.dpsi_dbeta = 0.5 * (a.dx_dbeta + b.dx_dbeta);
    v.residual = std::fabs(a.x - b.x);
    v.depth = depth;
    v.converged = v.residual <= tol;
    return v;
}

struct CurveSample {
    std::vector<double> theta;
    std::vector<double> psi;
    std::vector<double> dpsi_dtheta;
    std::vector<double> dpsi_dbeta;
    std::vector<double> residual;
    std::vector<int> depth;
    std::vector<uint8_t> converged;

    size_t size() const { return theta.size(); }
    size_t unconverged_count() const {
        size_t n = 0;
        for (uint8_t c : converged) n += (c == 0);
        return n;
    }
};

inline std::vector<double> uniform_grid(long long n, double offset = 0.0) {
    std::vector<double> t(n);
    for (long long i = 0; i < n; ++i)
        t[i] = dd::frac(dd::add(dd::DD(double(i) / double(n)), offset)).value();
    std::sort(t.begin(), t.end());
    return t;
}

// Base grid plus two-sided log-spaced refinement near frac(center + k*omega)
// for k in k_list.  Near-duplicate points (within 1e-15) are merged.
inline std::vector<double> adaptive_grid(long long base_n, double center,
                                         const rot::RotationNumber& om,
                                         const std::vector<int>& k_list = {1, 2, 3},
                                         int per_side = 48, double t_min = 1e-9,
                                         double t_max = 1.5e-2) {
    std::vector<double> t = uniform_grid(base_n);
    double ratio = std::pow(t_max / t_min, 1.0 / double(per_side - 1));
    for (int k : k_list) {
        double c = dyn::rotate_n(center, k, om).value();
        t.push_back(c);
        double off = t_min;
        for (int i = 0; i < per_side; ++i, off *= ratio) {
            t.push_back(dd::frac(dd::DD(c + off)).value());
            t.push_back(dd::frac(dd::DD(c - off)).value());
        }
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(),
                        [](double a, double b) { return std::fabs(a - b) < 1e-15; }),
            t.end());
    return t;
}

// Per-point pullback over a grid.  Points whose residual misses tol are
// retried at doubled depth up to max_retries times; remaining misses keep
// converged = false.  Points are independent, so the parallel fill is
// bitwise reproducible for any thread count.
inline CurveSample sample_curve(const std::vector<double>& thetas,
                                const dyn::SystemParams& p, double tol,
                                int base_depth, int max_retries = 3) {
    size_t n = thetas.size();
    CurveSample c;
    c.theta = thetas;
    c.psi.resize(n);
    c.dpsi_dtheta.resize(n);
    c.dpsi_dbeta.resize(n);
    c.residual.resize(n);
    c.depth.resize(n);
    c.converged.resize(n);
    int retries = (p.beta < 1.0) ? max_retries : 0;
    par::parallel_for((long long)n, [&](long long i) {
        int d = base_depth;
        PullbackValue v = pullback_value(thetas[i], d, p, tol);
        for (int r = 0; r < retries && !v.converged; ++r) {
            d *= 2;
            v = pullback_value(thetas[i], d, p, tol);
        }
        c.psi[i] = v.psi;
        c.dpsi_dtheta[i] = v.dpsi_dtheta;
        c.dpsi_dbeta[i] = v.dpsi_dbeta;
        c.residual[i] = v.residual;
        c.depth[i] = v.depth;
        c.converged[i] = v.converged ? 1 : 0;
    });
    return c;
}

namespace detail {

inline constexpr double kGoldenR = 0.6180339887498949;

// Golden-section extremum refinement on [a, b]; every probe is a fresh
// function call (no interpolation between stored samples).
template <typename Fn>
double golden_refine(Fn&& f, double a, double b, double tol_x, bool maximize) {
    double sign = maximize ? -1.0 : 1.0;
    double x1 = b - kGoldenR * (b - a);
    double x2 = a + kGoldenR * (b - a);
    double f1 = sign * f(x1);
    double f2 = sign * f(x2);
    while (std::fabs(b - a) > tol_x) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGoldenR * (b - a);
            f1 = sign * f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGoldenR * (b - a);
            f2 = sign * f(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

inline size_t wrap_index(long long i, size_t n) {
    long long m = (long long)n;
    return (size_t)(((i % m) + m) % m);
}

}  // namespace detail

struct Extremum {
    double value = 0.0;
    double theta = 0.0;
};

// Minimum of psi over the circle: grid argmin, then golden-section on fresh
// pullbacks inside the bracketing grid interval.
inline Extremum min_distance(const CurveSample& curve, const dyn::SystemParams& p,
                             double tol, double tol_theta = 1e-12) {
    size_t n = curve.size();
    if (n < 3) throw Error("min_distance: need at least 3 grid points");
    size_t best = 0;
    for (size_t i = 1; i < n; ++i)
        if (curve.psi[i] < curve.psi[best]) best = i;

    int depth = *std::max_element(curve.depth.begin(), curve.depth.end());
    auto f = [&](double th) {
        return pullback_value(dd::frac(dd::DD(th)).value(), depth, p, tol).psi;
    };

    double t0 = curve.theta[best];
    double tl = curve.theta[detail::wrap_index((long long)best - 1, n)];
    double tr = curve.theta[detail::wrap_index((long long)best + 1, n)];
    // unwrapped bracket around t0
    double a = t0 - rot::circle_dist(t0, tl);
    double b = t0 + rot::circle_dist(t0, tr);
    double tstar = detail::golden_refine(f, a, b, tol_theta, /*maximize=*/false);

    Extremum e;
    double fr = f(tstar);
    if (fr <= curve.psi[best]) {
        e.value = fr;
        e.theta = dd::frac(dd::DD(tstar)).value();
    } else {
        e.value = curve.psi[best];
        e.theta = t0;
    }
    return e;
}

// Supremum of |dpsi/dtheta|.  Two mechanisms are combined: the grid argmax
// with golden refinement, and forward probes from the valley (the largest
// slope develops along the ascent orbit of points near the minimum, at
// offsets that shrink like sqrt(1-beta), which a uniform grid undersamples).
inline Extremum sup_derivative(const CurveSample& curve, const dyn::SystemParams& p,
                               double tol, double tol_theta = 1e-12) {
    size_t n = curve.size();
    if (n < 3) throw Error("sup_derivative: need at least 3 grid points");
    size_t imax = 0, imin = 0;
    for (size_t i = 1; i < n; ++i) {
        if (std::fabs(curve.dpsi_dtheta[i]) > std::fabs(curve.dpsi_dtheta[imax])) imax = i;
        if (curve.psi[i] < curve.psi[imin]) imin = i;
    }
    int depth = *std::max_element(curve.depth.begin(), curve.depth.end());

    Extremum best;
    best.value = std::fabs(curve.dpsi_dtheta[imax]);
    best.theta = curve.theta[imax];

    auto deriv_at = [&](double th) {
        return std::fabs(pullback_value(dd::frac(dd::DD(th)).value(), depth, p, tol).dpsi_dtheta);
    };

    {
        double t0 = curve.theta[imax];
        double a = t0 - rot::circle_dist(t0, curve.theta[detail::wrap_index((long long)imax - 1, n)]);
        double b = t0 + rot::circle_dist(t0, curve.theta[detail::wrap_index((long long)imax + 1, n)]);
        double ts = detail::golden_refine(deriv_at, a, b, tol_theta, /*maximize=*/true);
        double v = deriv_at(ts);
        if (v > best.value) {
            best.value = v;
            best.theta = dd::frac(dd::DD(ts)).value();
        }
    }

    if (p.beta <= 0.0) return best;

    // forward probes from the valley
    double theta_v = curve.theta[imin];
    int k_max = (p.beta < 1.0) ? (int)std::ceil(t1_bound(p.beta)) + 8 : 50;
    const int per_side = 40;
    const double t_min = 1e-9, t_max = 2e-2;
    double ratio = std::pow(t_max / t_min, 1.0 / double(per_side - 1));

    struct Probe {
        double t;
        int k;
        double value;
    };
    std::vector<double> offsets;
    offsets.reserve(2 * per_side);
    double off = t_min;
    for (int i = 0; i < per_side; ++i, off *= ratio) {
        offsets.push_back(off);
        offsets.push_back(-off);
    }

    auto ascent_max = [&](double t, int upto, int* k_at) {
        double th = dd::frac(dd::DD(theta_v + t)).value();
        dyn::LiftedState a = pullback_from_seed(th, kSeedLo, depth, p);
        dyn::LiftedState b = pullback_from_seed(th, kSeedHi, depth, p);
        double vmax = 0.0;
        int karg = 0;
        for (int k = 0; k <= upto; ++k) {
            double v = std::fabs(0.5 * (a.dx_dtheta + b.dx_dtheta));
            if (v > vmax) {
                vmax = v;
                karg = k;
            }
            a = dyn::step(a, p);
            b = dyn::step(b, p);
        }
        if (k_at) *k_at = karg;
        return vmax;
    };

    Probe top{0.0, 0, -1.0};
    std::vector<double> vals(offsets.size());
    par::parallel_for((long long)offsets.size(), [&](long long i) {
        int k = 0;
        vals[i] = ascent_max(offsets[i], k_max, &k);
    });
    for (size_t i = 0; i < offsets.size(); ++i) {
        if (vals[i] > top.value) {
            int k = 0;
            ascent_max(offsets[i], k_max, &k);  // recover k deterministically
            top = {offsets[i], k, vals[i]};
        }
    }

    if (top.value > best.value) {
        best.value = top.value;
        best.theta = dyn::rotate_n(dd::frac(dd::DD(theta_v + top.t)).value(), top.k, p.omega).value();
    }

    if (top.value > 0.0) {
        // refine the probe offset at fixed ascent step count
        auto h = [&](double t) {
            double th = dd::frac(dd::DD(theta_v + t)).value();
            dyn::LiftedState a = pullback_from_seed(th, kSeedLo, depth, p);
            dyn::LiftedState b = pullback_from_seed(th, kSeedHi, depth, p);
            for (int k = 0; k < top.k; ++k) {
                a = dyn::step(a, p);
                b = dyn::step(b, p);
            }
            return std::fabs(0.5 * (a.dx_dtheta + b.dx_dtheta));
        };
        double lo = top.t > 0 ? top.t / ratio : top.t * ratio;
        double hi = top.t > 0 ? top.t * ratio : top.t / ratio;
        double ts = detail::golden_refine(h, lo, hi, std::min(tol_theta, std::fabs(top.t) * 1e-6),
                                          /*maximize=*/true);
        double v = h(ts);
        if (v > best.value) {
            best.value = v;
            best.theta = dyn::rotate_n(dd::frac(dd::DD(theta_v + ts)).value(), top.k, p.omega).value();
        }
    }
    return best;
}

}  // namespace tclab::attr
