#pragma once

// Double-double arithmetic: an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
// Used to carry the rotation number and circle coordinates at ~106 bits so
// orbit phases theta_0 + n*omega stay accurate to a few ulps for n up to 1e8.
// Algorithms follow Dekker (1971) and Hida/Li/Bailey's QD library.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "tclab/error.hpp"

namespace tclab::dd {

struct DD {
    double hi = 0.0;
    double lo = 0.0;

    DD() = default;
    explicit DD(double h) : hi(h), lo(0.0) {}
    DD(double h, double l) : hi(h), lo(l) {}

    double value() const { return hi + lo; }
};

// s = a + b exactly as s + err, no precondition on magnitudes.
inline DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

// Requires |a| >= |b|.
inline DD quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

// p = a * b exactly as p + err.  fma gives the exact residual.
inline DD two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline DD renorm(double hi, double lo) { return quick_two_sum(hi, lo); }

inline DD add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    DD t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline DD add(DD a, double b) {
    DD s = two_sum(a.hi, b);
    s.lo += a.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline DD neg(DD a) { return {-a.hi, -a.lo}; }
inline DD sub(DD a, DD b) { return add(a, neg(b)); }
inline DD sub(DD a, double b) { return add(a, -b); }

inline DD mul(DD a, double b) {
    DD p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return quick_two_sum(p.hi, p.lo);
}

inline DD mul(DD a, DD b) {
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline DD div(DD a, DD b) {
    double q1 = a.hi / b.hi;
    DD r = sub(a, mul(b, q1));
    double q2 = r.hi / b.hi;
    r = sub(r, mul(b, q2));
    double q3 = r.hi / b.hi;
    DD q = quick_two_sum(q1, q2);
    return add(q, q3);
}

// sqrt of a double, carried to double-double by one Newton step.
inline DD sqrt_dd(double a) {
    double y = std::sqrt(a);
    double r = std::fma(y, -y, a);  // a - y^2, exact residual
    return quick_two_sum(y, r / (2.0 * y));
}

// Reduce to [0, 1).  Exact for |a| < 2^52.
inline DD frac(DD a) {
    double k = std::floor(a.value());
    DD r = quick_two_sum(a.hi - k, a.lo);
    while (r.value() < 0.0) r = add(r, 1.0);
    while (r.value() >= 1.0) r = sub(r, 1.0);
    // True values within an ulp of the seam collapse to 1.0 before reduction
    // and come out a hair negative; snap them onto the seam itself.
    if (r.value() < 0.0) r = DD(0.0);
    return r;
}

// (sqrt(5) - 1) / 2, the golden rotation number, to ~1e-32.
inline DD golden() {
    DD s = sqrt_dd(5.0);
    DD w = sub(s, 1.0);
    return {w.hi * 0.5, w.lo * 0.5};
}

// Parse a decimal in [0, 1) of the form "0.ddd..." or ".ddd..." to DD.
// Digits beyond 34 carry no information at this precision and are ignored.
inline DD parse_decimal(const std::string& text) {
    size_t i = 0;
    if (i < text.size() && text[i] == '0') ++i;
    if (i >= text.size() || text[i] != '.')
        throw Error("expected a decimal in [0,1) like 0.618..., got '" + text + "'");
    ++i;
    DD v(0.0);
    DD scale(1.0);
    int digits = 0;
    for (; i < text.size(); ++i) {
        char ch = text[i];
        if (ch < '0' || ch > '9')
            throw Error("bad digit in decimal '" + text + "'");
        if (digits >= 34) continue;
        v = add(mul(v, 10.0), double(ch - '0'));
        scale = mul(scale, 10.0);
        ++digits;
    }
    if (digits == 0) throw Error("no digits in decimal '" + text + "'");
    return div(v, scale);
}

}  // namespace tclab::dd
