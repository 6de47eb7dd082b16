#pragma once

#include <stdexcept>
#include <string>

namespace tclab {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Lyapunov sum lost more than the allowed fraction of terms to |1-2x| ~ 0.
struct DegenerateOrbit : Error {
    explicit DegenerateOrbit(const std::string& msg) : Error(msg) {}
};

// Critical-alpha scan exhausted its resolution cap without a sign change.
struct NoSignChange : Error {
    explicit NoSignChange(const std::string& msg) : Error(msg) {}
};

// Fit requested over fewer qualifying records than the minimum window.
struct InsufficientWindow : Error {
    explicit InsufficientWindow(const std::string& msg) : Error(msg) {}
};

// Induction scale constants degenerate at this lambda (K0 < 10).
struct VacuousScales : Error {
    explicit VacuousScales(const std::string& msg) : Error(msg) {}
};

// Bad or inconsistent configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Calibration: no lambda candidate passes the full gated check suite.
struct NonePass : Error {
    explicit NonePass(const std::string& msg) : Error(msg) {}
};

}  // namespace tclab
