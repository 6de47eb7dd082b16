#pragma once

// Locating the critical forcing phase alpha_c at beta = 1: the value where
// the attractor passes through x = 1/2 exactly at theta = alpha, so the full
// peak c(alpha) = 4 maps it to 1 and the next step lands on 0.  The search
// root-finds the defect psi_alpha(alpha) - 1/2 over the admissible window
// of phases whose peaks straddle the return orbit correctly.

#include <cmath>
#include <optional>
#include <vector>

#include "tclab/attractor.hpp"
#include "tclab/dynamics.hpp"
#include "tclab/parallel.hpp"

namespace tclab::crit {

struct ChainValues {
    double psi0 = 0.0;  // psi(alpha_c)
    double psi1 = 0.0;  // psi(alpha_c + omega)
    double psi2 = 0.0;  // psi(alpha_c + 2 omega)
    double residual = 0.0;
};

// Values along the image chain, computed by stepping the pullback states
// forward so that consecutive entries satisfy the exact update rule.
inline ChainValues chain_values(double alpha, const dyn::SystemParams& p, int depth) {
    dyn::LiftedState a = attr::pullback_from_seed(alpha, attr::kSeedLo, depth, p);
    dyn::LiftedState b = attr::pullback_from_seed(alpha, attr::kSeedHi, depth, p);
    ChainValues cv;
    cv.residual = std::fabs(a.x - b.x);
    cv.psi0 = 0.5 * (a.x + b.x);
    a = dyn::step(a, p);
    b = dyn::step(b, p);
    cv.psi1 = 0.5 * (a.x + b.x);
    a = dyn::step(a, p);
    b = dyn::step(b, p);
    cv.psi2 = 0.5 * (a.x + b.x);
    return cv;
}

struct CriticalOptions {
    int scan_n = 4096;        // initial scan resolution over the window
    int max_scan_n = 1 << 20; // doubling cap before giving up
    double tol_alpha = 1e-13; // bisection width target
    int depth = 600;          // pullback depth (beta = 1 gets no certificate)
    double tol = 1e-10;       // residual bookkeeping only at beta = 1
    int max_brackets = 8;
};

struct CriticalResult {
    double alpha_c = 0.0;
    double defect = 0.0;  // psi(alpha_c) - 1/2 at the returned root
    ChainValues chain;
    double bracket_width = 0.0;
    int depth = 0;
    int scan_points = 0;
};

namespace detail {

inline double defect_at(double alpha, double lambda, const rot::RotationNumber& om,
                        int depth) {
    dyn::SystemParams p = dyn::make_params(alpha, 1.0, lambda, om);
    dyn::LiftedState a = attr::pullback_from_seed(alpha, attr::kSeedLo, depth, p);
    dyn::LiftedState b = attr::pullback_from_seed(alpha, attr::kSeedHi, depth, p);
    return 0.5 * (a.x + b.x) - 0.5;
}

inline double bisect_defect(double& lo, double& hi, double flo, double lambda,
                            const rot::RotationNumber& om, int depth, double tol_alpha) {
    while (hi - lo > tol_alpha) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // ran out of doubles
        double fm = defect_at(mid, lambda, om, depth);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline CriticalResult find_alpha_c(double lambda, const rot::RotationNumber& om,
                                   const CriticalOptions& opt = {}) {
    dyn::AlphaWindow win = dyn::alpha_window(lambda, om.value.value());
    if (win.empty())
        throw ConfigError("find_alpha_c: admissible alpha window is empty at this lambda");

    int n = opt.scan_n;
    std::vector<double> alphas, defects;
    std::vector<std::pair<double, double>> brackets;  // (lo, hi)
    while (true) {
        alphas.resize(n);
        defects.assign(n, 0.0);
        double w = win.hi - win.lo;
        for (int i = 0; i < n; ++i)
            alphas[i] = win.lo + w * (double(i) + 0.5) / double(n);
        par::parallel_for(n, [&](long long i) {
            defects[i] = detail::defect_at(alphas[i], lambda, om, opt.depth);
        });
        brackets.clear();
        for (int i = 0; i + 1 < n; ++i) {
            double f0 = defects[i], f1 = defects[i + 1];
            if (!std::isfinite(f0) || !std::isfinite(f1)) continue;
            if ((f0 < 0.0) != (f1 < 0.0))
                brackets.emplace_back(alphas[i], alphas[i + 1]);
        }
        if (!brackets.empty() || n >= opt.max_scan_n) break;
        n *= 2;
    }
    if (brackets.empty())
        throw NoSignChange("find_alpha_c: defect has no sign change over the window");

    if ((int)brackets.size() > opt.max_brackets) brackets.resize(opt.max_brackets);

    CriticalResult best;
    bool have = false;
    for (auto [lo, hi] : brackets) {
        double flo = detail::defect_at(lo, lambda, om, opt.depth);
        double root = detail::bisect_defect(lo, hi, flo, lambda, om, opt.depth, opt.tol_alpha);
        dyn::SystemParams p = dyn::make_params(root, 1.0, lambda, om);
        ChainValues cv = chain_values(root, p, opt.depth);
        if (!have || std::fabs(cv.psi2) < std::fabs(best.chain.psi2)) {
            best.alpha_c = root;
            best.defect = cv.psi0 - 0.5;
            best.chain = cv;
            best.bracket_width = hi - lo;
            best.depth = opt.depth;
            best.scan_points = n;
            have = true;
        }
    }
    return best;
}

// Recheck the chain at a previously located alpha_c, optionally at higher depth.
inline ChainValues verify_chain(double alpha_c, double lambda, const rot::RotationNumber& om,
                                int depth) {
    dyn::SystemParams p = dyn::make_params(alpha_c, 1.0, lambda, om);
    return chain_values(alpha_c, p, depth);
}

}  // namespace tclab::crit
