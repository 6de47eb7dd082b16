#pragma once

// The beta -> 1 sweep: how fast the attractor approaches the repelling line
// x = 0 (linear in 1-beta), how its steepest slope blows up (like
// (1-beta)^{-1/2}), and the bookkeeping constants that control the
// contraction argument at each beta.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tclab/attractor.hpp"
#include "tclab/dynamics.hpp"
#include "tclab/rng.hpp"

namespace tclab::asym {

// Iteration budget for one full passage through the contraction interval,
// from the lemma constant V = 3/8 + 5 beta / 8; clamped below at 10.
inline int compute_M_C(double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw Error("compute_M_C: beta must be in [0,1)");
    double v = 3.0 / 8.0 + beta * 5.0 / 8.0;
    double raw = std::log(1.0 / (150.0 * v * (1.0 - v))) / std::log(1.25) + 4.0;
    int r = (int)std::ceil(raw);
    return std::max(10, r);
}

// Raw formula value before the clamp, reported for diagnostics.
inline double compute_M_C_raw(double beta) {
    double v = 3.0 / 8.0 + beta * 5.0 / 8.0;
    return std::log(1.0 / (150.0 * v * (1.0 - v))) / std::log(1.25) + 4.0;
}

struct ScaleConstants {
    std::vector<long long> K;     // K_0 .. K_n
    std::vector<long long> M;     // M_0 .. M_n
    std::vector<double> I_width;  // |I_0| .. |I_n|; |I_0| = 2 lambda^{-1/7}
    double lambda = 0.0;
    double tau = 1.0;
    bool vacuous = false;  // K_0 < 10: the inductive ranges degenerate
};

// Inductive scale ladder.  K_{k} and M_{k} take the smallest integer in
// their allowed ranges; the ladder stops when interval widths underflow.
inline ScaleConstants scale_constants(double lambda, double tau, int n_max = 64) {
    if (!(lambda > 1.0) || !(tau >= 1.0))
        throw Error("scale_constants: need lambda > 1 and tau >= 1");
    ScaleConstants s;
    s.lambda = lambda;
    s.tau = tau;
    long long k0 = (long long)std::floor(std::exp(std::log(lambda) / (28.0 * tau)));
    long long m0 = (long long)std::floor(std::exp(std::log(lambda) / (14.0 * tau)));
    s.K.push_back(k0);
    s.M.push_back(m0);
    s.I_width.push_back(2.0 * std::pow(lambda, -1.0 / 7.0));
    s.vacuous = k0 < 10;
    for (int k = 1; k <= n_max; ++k) {
        long long kp = s.K.back();
        double width = std::pow(0.8, double(kp));
        if (width < 1e-300) break;
        double lgK = double(kp) / (4.0 * tau) * std::log(1.25);
        double lgM = double(kp) / (2.0 * tau) * std::log(1.25);
        if (lgK > 62.0 * std::log(2.0) || lgM > 62.0 * std::log(2.0)) break;
        s.K.push_back((long long)std::ceil(std::exp(lgK)));
        s.M.push_back((long long)std::ceil(std::exp(lgM)));
        s.I_width.push_back(width);
    }
    return s;
}

// Smallest scale n whose return-count budget 2 K_n - 2 accommodates M_C(beta).
inline long long scale_index(double beta, const ScaleConstants& s) {
    if (s.vacuous)
        throw VacuousScales("scale_index: K_0 < 10, scale ladder is vacuous at this lambda");
    long long mc = compute_M_C(beta);
    for (size_t n = 0; n < s.K.size(); ++n)
        if (mc <= 2 * s.K[n] - 2) return (long long)n;
    throw VacuousScales("scale_index: no computed scale accommodates this beta");
}

struct SweepRecord {
    double beta = 0.0;
    double one_minus_beta = 0.0;
    double delta = 0.0;         // min_theta psi
    double argmin_theta = 0.0;
    double sup_deriv = 0.0;     // sup_theta |dpsi/dtheta|
    double argmax_theta = 0.0;
    double lyapunov = 0.0;      // max over random starts
    int depth = 0;
    int m_c = 0;
    double t1_bound = 0.0;
    long long scale_n = -1;     // -1 when the scale ladder is vacuous
};

struct SweepOptions {
    std::vector<double> betas;  // empty -> default grid 1 - 2^-j, j = 7..17
    long long grid_n = 4096;
    double tol = 1e-10;
    long long lyap_n = 1000000;
    long long lyap_burn = 10000;
    int lyap_starts = 10;
    uint64_t seed = 20260816ULL;
};

inline std::vector<double> default_beta_grid() {
    std::vector<double> b;
    for (int j = 7; j <= 17; ++j) b.push_back(1.0 - std::pow(2.0, -j));
    return b;
}

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<std::string> dropped;  // "beta=...: reason"
};

inline double max_lyapunov_over_starts(const dyn::SystemParams& p, long long n,
                                       long long burn, int starts, uint64_t seed) {
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < starts; ++s) {
        rng::SplitMix64 g(rng::mix_stream(seed, (uint64_t)s));
        double theta0 = g.uniform01();
        double x0 = g.uniform(0.01, 0.99);
        double gamma = dyn::lyapunov_estimate(theta0, x0, n, p, burn);
        if (gamma > best) best = gamma;
    }
    return best;
}

// One record per beta, beta ascending.  Records are computed sequentially
// so dropped-record bookkeeping is ordered; the work inside each record
// (curve sampling, probes) is parallel.
inline SweepResult sweep(double lambda, double alpha_c, const rot::RotationNumber& om,
                         const SweepOptions& opt = {}) {
    std::vector<double> betas = opt.betas.empty() ? default_beta_grid() : opt.betas;
    std::sort(betas.begin(), betas.end());
    SweepResult out;
    ScaleConstants sc = scale_constants(lambda, om.tau);
    for (double beta : betas) {
        if (!(beta >= 0.0 && beta < 1.0)) {
            out.dropped.push_back("beta=" + std::to_string(beta) + ": outside [0,1)");
            continue;
        }
        dyn::SystemParams p = dyn::make_params(alpha_c, beta, lambda, om);
        int depth = attr::choose_depth(beta, opt.tol);
        std::vector<double> grid =
            attr::adaptive_grid(opt.grid_n, alpha_c, om, {1, 2, 3});
        attr::CurveSample curve = attr::sample_curve(grid, p, opt.tol, depth);
        size_t bad = curve.unconverged_count();
        if (bad > 0) {
            out.dropped.push_back("beta=" + std::to_string(beta) + ": " +
                                  std::to_string(bad) + " grid points unconverged");
            continue;
        }
        SweepRecord r;
        r.beta = beta;
        r.one_minus_beta = 1.0 - beta;
        attr::Extremum mn = attr::min_distance(curve, p, opt.tol);
        r.delta = mn.value;
        r.argmin_theta = mn.theta;
        attr::Extremum sd = attr::sup_derivative(curve, p, opt.tol);
        r.sup_deriv = sd.value;
        r.argmax_theta = sd.theta;
        r.lyapunov = max_lyapunov_over_starts(p, opt.lyap_n, opt.lyap_burn,
                                              opt.lyap_starts, opt.seed);
        r.depth = depth;
        r.m_c = compute_M_C(beta);
        r.t1_bound = attr::t1_bound(beta);
        r.scale_n = -1;
        if (!sc.vacuous) {
            try {
                r.scale_n = scale_index(beta, sc);
            } catch (const VacuousScales&) {
                r.scale_n = -1;
            }
        }
        out.records.push_back(r);
    }
    return out;
}

struct FitResult {
    std::string kind;              // "linear-distance" or "power-derivative"
    double coefficient = 0.0;      // slope (distance) or prefactor (power)
    double exponent = 0.0;         // power fit only
    double predicted_coefficient = 0.0;  // distance fit only
    double residual = 0.0;         // max deviation over the window (see fits)
    std::vector<double> window;    // betas used
    // free-intercept diagnostics (distance fit)
    double diag_slope = 0.0;
    double diag_intercept = 0.0;
};

inline constexpr double kDefaultFitWindow = 1.0 / 1024.0;  // one_minus_beta <=

// delta(beta) ~ coeff * (1 - beta): least squares through the origin over
// the asymptotic window, with the predicted coefficient (5/8) c_{beta=1}
// evaluated one rotation step past alpha_c.  Residual is the worst relative
// deviation of delta from the fitted line.
inline FitResult fit_linear_distance(const std::vector<SweepRecord>& records,
                                     double lambda, double alpha_c,
                                     const rot::RotationNumber& om,
                                     double window_max = kDefaultFitWindow) {
    FitResult f;
    f.kind = "linear-distance";
    double sxy = 0.0, sxx = 0.0, sx = 0.0, sy = 0.0;
    long long m = 0;
    for (const SweepRecord& r : records) {
        if (r.one_minus_beta > window_max || !(r.one_minus_beta > 0.0)) continue;
        f.window.push_back(r.beta);
        double x = r.one_minus_beta, y = r.delta;
        sxy += x * y;
        sxx += x * x;
        sx += x;
        sy += y;
        ++m;
    }
    if (m < 4) throw InsufficientWindow("fit_linear_distance: fewer than 4 records in window");
    f.coefficient = sxy / sxx;
    double denom = double(m) * sxx - sx * sx;
    f.diag_slope = (double(m) * sxy - sx * sy) / denom;
    f.diag_intercept = (sy - f.diag_slope * sx) / double(m);
    double worst = 0.0;
    for (const SweepRecord& r : records) {
        if (r.one_minus_beta > window_max || !(r.one_minus_beta > 0.0)) continue;
        double fitv = f.coefficient * r.one_minus_beta;
        worst = std::max(worst, std::fabs(r.delta - fitv) / fitv);
    }
    f.residual = worst;
    dyn::SystemParams p1 = dyn::make_params(alpha_c, 1.0, lambda, om);
    double theta1 = dyn::rotate_n(alpha_c, 1, om).value();
    f.predicted_coefficient = (5.0 / 8.0) * dyn::forcing_c(theta1, p1);
    return f;
}

// sup|dpsi/dtheta| ~ coeff * (1 - beta)^exponent: least squares in log-log.
// Residual is the worst absolute deviation of log(sup_deriv) from the line.
inline FitResult fit_power_derivative(const std::vector<SweepRecord>& records,
                                      double window_max = kDefaultFitWindow) {
    FitResult f;
    f.kind = "power-derivative";
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    long long m = 0;
    for (const SweepRecord& r : records) {
        if (r.one_minus_beta > window_max || !(r.one_minus_beta > 0.0)) continue;
        if (!(r.sup_deriv > 0.0)) continue;
        f.window.push_back(r.beta);
        double x = std::log(r.one_minus_beta), y = std::log(r.sup_deriv);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 4) throw InsufficientWindow("fit_power_derivative: fewer than 4 records in window");
    double denom = double(m) * sxx - sx * sx;
    f.exponent = (double(m) * sxy - sx * sy) / denom;
    double intercept = (sy - f.exponent * sx) / double(m);
    f.coefficient = std::exp(intercept);
    double worst = 0.0;
    for (const SweepRecord& r : records) {
        if (r.one_minus_beta > window_max || !(r.one_minus_beta > 0.0)) continue;
        if (!(r.sup_deriv > 0.0)) continue;
        double x = std::log(r.one_minus_beta);
        worst = std::max(worst, std::fabs(std::log(r.sup_deriv) - (intercept + f.exponent * x)));
    }
    f.residual = worst;
    return f;
}

}  // namespace tclab::asym
