#pragma once

// Configuration loading and the on-disk formats: CSV tables (RFC 4180, LF
// line endings, header row) and JSON results.  Floats are serialized with 17
// significant digits so a double round-trips exactly; every command also
// writes a manifest echoing its effective configuration, and a manifest is
// itself accepted as a config file (the loader reads its "config" object).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tclab/asymptotics.hpp"
#include "tclab/critical.hpp"
#include "tclab/error.hpp"
#include "tclab/lemmas.hpp"
#include "tclab/rotation.hpp"

namespace tclab::io {

inline constexpr const char* kToolName = "tclab";
inline constexpr const char* kToolVersion = "0.1.0";

inline std::string fmt17(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

// ---------------------------------------------------------------- config --

struct Config {
    std::string omega_spec = "golden";
    std::string alpha_spec = "mid";  // "mid" | "auto" | decimal number
    double lambda = 1e6;  // default favors sharp asymptotics; `calibrate`
                          // reports the smallest structurally passing candidate
    double beta = 1.0;
    bool has_beta_grid = false;
    std::vector<double> beta_grid;

    long long grid_n = 4096;
    double depth_tol = 1e-10;
    uint64_t seed = 20260816ULL;

    double tau = 1.0;
    long long q_max = 1000000;
    long long depth = -1;  // -1: choose from beta and depth_tol
    double tol_alpha = 1e-13;
    long long lyap_n = 1000000;
    long long lyap_burn = 10000;
    long long lyap_starts = 10;
    long long threads = 0;  // 0: TCLAB_THREADS or hardware
    long long grid_1d = 1000000;
    long long grid_theta = 10000;
    long long grid_x = 1000;
    long long spot_samples = 10000;
    std::vector<double> lambda_candidates = {1e4, 1e5, 1e6, 1e7};

    rot::RotationNumber resolve_omega() const {
        try {
            if (omega_spec == "golden") return rot::make_rotation(dd::golden(), tau, q_max);
            return rot::make_rotation(dd::parse_decimal(omega_spec), tau, q_max);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("config field 'omega': ") + e.what());
        }
    }
    bool alpha_is_auto() const { return alpha_spec == "auto"; }
    bool alpha_is_mid() const { return alpha_spec == "mid"; }
    double alpha_number() const {
        try {
            size_t pos = 0;
            double v = std::stod(alpha_spec, &pos);
            if (pos != alpha_spec.size()) throw std::invalid_argument(alpha_spec);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config field 'alpha': expected \"mid\", \"auto\", or a number, got \"" +
                              alpha_spec + "\"");
        }
    }
};

namespace detail {

using json = nlohmann::json;

inline double as_double(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            return std::stod(v.get<std::string>());
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("config field '" + key + "': expected a number");
}

inline long long as_int(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number()) {
        double d = v.get<double>();
        if (d == (long long)d) return (long long)d;
    }
    throw ConfigError("config field '" + key + "': expected an integer");
}

}  // namespace detail

inline Config config_from_json(const nlohmann::json& root) {
    using detail::as_double;
    using detail::as_int;
    const nlohmann::json& j =
        (root.is_object() && root.contains("config")) ? root.at("config") : root;
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    Config c;
    static const std::vector<std::string> known = {
        "omega", "alpha", "lambda", "beta", "beta_grid", "grid_n", "depth_tol",
        "seed", "tau", "q_max", "depth", "tol_alpha", "lyap_n", "lyap_burn",
        "lyap_starts", "threads", "grid_1d", "grid_theta", "grid_x",
        "spot_samples", "lambda_candidates"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == it.key();
        if (!ok) throw ConfigError("config: unknown field '" + it.key() + "'");
    }
    if (j.contains("omega")) {
        if (!j.at("omega").is_string())
            throw ConfigError("config field 'omega': expected \"golden\" or a decimal string");
        c.omega_spec = j.at("omega").get<std::string>();
    }
    if (j.contains("alpha")) {
        const auto& a = j.at("alpha");
        if (a.is_string())
            c.alpha_spec = a.get<std::string>();
        else if (a.is_number())
            c.alpha_spec = fmt17(a.get<double>());
        else
            throw ConfigError("config field 'alpha': expected \"mid\", \"auto\", or a number");
        if (!c.alpha_is_auto() && !c.alpha_is_mid()) c.alpha_number();  // validate now
    }
    if (j.contains("lambda")) c.lambda = as_double(j, "lambda");
    if (j.contains("beta")) c.beta = as_double(j, "beta");
    if (j.contains("beta_grid")) {
        const auto& g = j.at("beta_grid");
        if (g.is_string() && g.get<std::string>() == "default") {
            c.beta_grid = asym::default_beta_grid();
        } else if (g.is_array()) {
            for (const auto& v : g) {
                if (!v.is_number())
                    throw ConfigError("config field 'beta_grid': expected an array of numbers");
                c.beta_grid.push_back(v.get<double>());
            }
        } else {
            throw ConfigError("config field 'beta_grid': expected \"default\" or an array");
        }
        c.has_beta_grid = true;
    }
    if (j.contains("grid_n")) c.grid_n = as_int(j, "grid_n");
    if (j.contains("depth_tol")) c.depth_tol = as_double(j, "depth_tol");
    if (j.contains("seed")) c.seed = (uint64_t)as_int(j, "seed");
    if (j.contains("tau")) c.tau = as_double(j, "tau");
    if (j.contains("q_max")) c.q_max = as_int(j, "q_max");
    if (j.contains("depth")) c.depth = as_int(j, "depth");
    if (j.contains("tol_alpha")) c.tol_alpha = as_double(j, "tol_alpha");
    if (j.contains("lyap_n")) c.lyap_n = as_int(j, "lyap_n");
    if (j.contains("lyap_burn")) c.lyap_burn = as_int(j, "lyap_burn");
    if (j.contains("lyap_starts")) c.lyap_starts = as_int(j, "lyap_starts");
    if (j.contains("threads")) c.threads = as_int(j, "threads");
    if (j.contains("grid_1d")) c.grid_1d = as_int(j, "grid_1d");
    if (j.contains("grid_theta")) c.grid_theta = as_int(j, "grid_theta");
    if (j.contains("grid_x")) c.grid_x = as_int(j, "grid_x");
    if (j.contains("spot_samples")) c.spot_samples = as_int(j, "spot_samples");
    if (j.contains("lambda_candidates")) {
        c.lambda_candidates.clear();
        for (const auto& v : j.at("lambda_candidates")) {
            if (!v.is_number())
                throw ConfigError("config field 'lambda_candidates': expected an array of numbers");
            c.lambda_candidates.push_back(v.get<double>());
        }
    }
    if (!(c.lambda > 0.0)) throw ConfigError("config field 'lambda': must be positive");
    if (c.grid_n < 2) throw ConfigError("config field 'grid_n': must be at least 2");
    if (!(c.depth_tol > 0.0)) throw ConfigError("config field 'depth_tol': must be positive");
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    try {
        return config_from_json(root);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

// --------------------------------------------------------------- writers --

// Streaming JSON writer preserving insertion order; all doubles via fmt17.
class JsonWriter {
public:
    JsonWriter& begin_object() { return open('{'); }
    JsonWriter& end_object() { return close('}'); }
    JsonWriter& begin_array() { return open('['); }
    JsonWriter& end_array() { return close(']'); }
    JsonWriter& key(const std::string& k) {
        sep();
        emit_string(k);
        buf_ += ':';
        just_keyed_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        sep();
        if (std::isfinite(v)) {
            buf_ += fmt17(v);
        } else {
            emit_string(v != v ? "nan" : (v > 0 ? "inf" : "-inf"));
        }
        return *this;
    }
    JsonWriter& value(long long v) {
        sep();
        buf_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(uint64_t v) {
        sep();
        buf_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(int v) { return value((long long)v); }
    JsonWriter& value(bool v) {
        sep();
        buf_ += v ? "true" : "false";
        return *this;
    }
    JsonWriter& value(const std::string& v) {
        sep();
        emit_string(v);
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& kv(const std::string& k, double v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, long long v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, uint64_t v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, int v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, bool v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, const std::string& v) { return key(k).value(v); }
    JsonWriter& kv(const std::string& k, const char* v) { return key(k).value(v); }
    std::string str() const { return buf_ + "\n"; }

private:
    std::string buf_;
    std::vector<bool> nonempty_;
    bool just_keyed_ = false;

    JsonWriter& open(char c) {
        sep();
        buf_ += c;
        nonempty_.push_back(false);
        return *this;
    }
    JsonWriter& close(char c) {
        nonempty_.pop_back();
        buf_ += c;
        return *this;
    }
    void sep() {
        if (just_keyed_) {
            just_keyed_ = false;
            return;
        }
        if (!nonempty_.empty()) {
            if (nonempty_.back()) buf_ += ',';
            nonempty_.back() = true;
        }
    }
    void emit_string(const std::string& s) {
        buf_ += '"';
        for (char ch : s) {
            switch (ch) {
                case '"': buf_ += "\\\""; break;
                case '\\': buf_ += "\\\\"; break;
                case '\n': buf_ += "\\n"; break;
                case '\r': buf_ += "\\r"; break;
                case '\t': buf_ += "\\t"; break;
                default:
                    if ((unsigned char)ch < 0x20) {
                        char esc[8];
                        std::snprintf(esc, sizeof esc, "\\u%04x", ch);
                        buf_ += esc;
                    } else {
                        buf_ += ch;
                    }
            }
        }
        buf_ += '"';
    }
};

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) { row(header); }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += quote(cells[i]);
        }
        buf_ += '\n';
    }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
    static std::string quote(const std::string& s) {
        bool need = s.find_first_of(",\"\n\r") != std::string::npos;
        if (!need) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
        return out;
    }
};

inline void write_text(const std::string& path, const std::string& content) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("cannot open '" + path + "' for writing");
    size_t n = std::fwrite(content.data(), 1, content.size(), f);
    std::fclose(f);
    if (n != content.size()) throw Error("short write to '" + path + "'");
}

// ------------------------------------------------------------- documents --

inline std::string curve_csv(const attr::CurveSample& c) {
    CsvWriter w({"theta", "psi", "dpsi_dtheta", "dpsi_dbeta", "depth", "residual", "converged"});
    for (size_t i = 0; i < c.size(); ++i)
        w.row({fmt17(c.theta[i]), fmt17(c.psi[i]), fmt17(c.dpsi_dtheta[i]),
               fmt17(c.dpsi_dbeta[i]), std::to_string(c.depth[i]), fmt17(c.residual[i]),
               c.converged[i] ? "1" : "0"});
    return w.str();
}

inline std::string profile_csv(const std::vector<double>& thetas, const dyn::SystemParams& p) {
    CsvWriter w({"theta", "c", "dc_dtheta", "dc_dbeta"});
    for (double th : thetas) {
        dyn::Forcing f = dyn::forcing_all(dd::DD(th), p);
        w.row({fmt17(th), fmt17(f.c), fmt17(f.dc_dtheta), fmt17(f.dc_dbeta)});
    }
    return w.str();
}

inline std::string alpha_c_json(const crit::CriticalResult& r, double lambda,
                                const rot::RotationNumber& om) {
    dyn::AlphaWindow win = dyn::alpha_window(lambda, om.value.value());
    JsonWriter j;
    j.begin_object()
        .kv("lambda", lambda)
        .kv("omega", om.value.value())
        .key("alpha_window")
        .begin_object()
        .kv("lo", win.lo)
        .kv("hi", win.hi)
        .end_object()
        .kv("alpha_c", r.alpha_c)
        .kv("defect", r.defect)
        .key("chain_values")
        .begin_object()
        .kv("psi0", r.chain.psi0)
        .kv("psi1", r.chain.psi1)
        .kv("psi2", r.chain.psi2)
        .kv("residual", r.chain.residual)
        .end_object()
        .kv("bracket_width", r.bracket_width)
        .kv("depth", (long long)r.depth)
        .kv("scan_points", (long long)r.scan_points)
        .end_object();
    return j.str();
}

inline std::string sweep_csv(const asym::SweepResult& s) {
    CsvWriter w({"beta", "one_minus_beta", "delta", "argmin_theta", "sup_deriv",
                 "argmax_theta", "lyapunov", "depth", "M_C", "T1_bound", "scale_n"});
    for (const asym::SweepRecord& r : s.records)
        w.row({fmt17(r.beta), fmt17(r.one_minus_beta), fmt17(r.delta),
               fmt17(r.argmin_theta), fmt17(r.sup_deriv), fmt17(r.argmax_theta),
               fmt17(r.lyapunov), std::to_string(r.depth), std::to_string(r.m_c),
               fmt17(r.t1_bound), std::to_string(r.scale_n)});
    return w.str();
}

inline void fit_json(JsonWriter& j, const asym::FitResult& f) {
    j.begin_object()
        .kv("kind", f.kind)
        .kv("coefficient", f.coefficient)
        .kv("exponent", f.exponent)
        .kv("predicted_coefficient", f.predicted_coefficient)
        .kv("residual", f.residual)
        .key("window_betas")
        .begin_array();
    for (double b : f.window) j.value(b);
    j.end_array()
        .kv("diag_slope", f.diag_slope)
        .kv("diag_intercept", f.diag_intercept)
        .end_object();
}

inline std::string fits_json(const asym::FitResult& dist, const asym::FitResult& deriv) {
    JsonWriter j;
    j.begin_object().key("distance");
    fit_json(j, dist);
    j.key("derivative");
    fit_json(j, deriv);
    j.end_object();
    return j.str();
}

inline std::string lemmas_csv(const lem::VerifySuite& s) {
    CsvWriter w({"lemma", "gating", "vacuous", "passed", "margin", "samples", "worst_witness"});
    for (const lem::LemmaReport& r : s.reports)
        w.row({r.id, r.gating ? "1" : "0", r.vacuous ? "1" : "0", r.passed ? "1" : "0",
               fmt17(r.margin), std::to_string(r.samples), r.witness});
    return w.str();
}

inline std::string summary_json(const lem::VerifySuite& s) {
    JsonWriter j;
    j.begin_object()
        .kv("lambda", s.lambda)
        .kv("alpha", s.alpha)
        .kv("all_gated_pass", s.all_gated_pass)
        .key("lemmas")
        .begin_array();
    for (const lem::LemmaReport& r : s.reports) {
        j.begin_object()
            .kv("lemma", r.id)
            .kv("gating", r.gating)
            .kv("vacuous", r.vacuous)
            .kv("passed", r.passed)
            .kv("margin", r.margin)
            .kv("samples", r.samples)
            .kv("worst_witness", r.witness)
            .end_object();
    }
    j.end_array().end_object();
    return j.str();
}

inline std::string calibration_json(const lem::CalibrationResult& c) {
    JsonWriter j;
    j.begin_object().kv("lambda", c.lambda).key("candidates").begin_array();
    for (const lem::VerifySuite& s : c.suites) {
        j.begin_object()
            .kv("lambda", s.lambda)
            .kv("alpha", s.alpha)
            .kv("all_gated_pass", s.all_gated_pass)
            .key("margins")
            .begin_object();
        for (const lem::LemmaReport& r : s.reports) j.kv(r.id, r.margin);
        j.end_object().end_object();
    }
    j.end_array().end_object();
    return j.str();
}

// ---------------------------------------------------------------- manifest --

inline void config_echo(JsonWriter& j, const Config& c) {
    j.begin_object()
        .kv("omega", c.omega_spec)
        .kv("alpha", c.alpha_spec)
        .kv("lambda", c.lambda);
    if (c.has_beta_grid) {
        j.key("beta_grid").begin_array();
        for (double b : c.beta_grid) j.value(b);
        j.end_array();
    } else {
        j.kv("beta", c.beta);
    }
    j.kv("grid_n", c.grid_n)
        .kv("depth_tol", c.depth_tol)
        .kv("seed", c.seed)
        .kv("tau", c.tau)
        .kv("q_max", c.q_max)
        .kv("depth", c.depth)
        .kv("tol_alpha", c.tol_alpha)
        .kv("lyap_n", c.lyap_n)
        .kv("lyap_burn", c.lyap_burn)
        .kv("lyap_starts", c.lyap_starts)
        .kv("threads", c.threads)
        .kv("grid_1d", c.grid_1d)
        .kv("grid_theta", c.grid_theta)
        .kv("grid_x", c.grid_x)
        .kv("spot_samples", c.spot_samples)
        .key("lambda_candidates")
        .begin_array();
    for (double l : c.lambda_candidates) j.value(l);
    j.end_array().end_object();
}

inline std::string manifest_json(const std::string& command, const Config& c,
                                 const rot::RotationNumber& om,
                                 const std::vector<std::string>& outputs,
                                 double alpha_effective, const std::string& timestamp) {
    JsonWriter j;
    j.begin_object()
        .kv("tool", kToolName)
        .kv("version", kToolVersion)
        .kv("command", command)
        .kv("timestamp", timestamp)
        .key("config");
    config_echo(j, c);
    j.key("derived")
        .begin_object()
        .kv("omega_value", om.value.value())
        .kv("omega_hi", om.value.hi)
        .kv("omega_lo", om.value.lo)
        .kv("kappa", om.kappa)
        .kv("tau", om.tau)
        .kv("alpha_effective", alpha_effective)
        .end_object()
        .key("outputs")
        .begin_array();
    for (const std::string& o : outputs) j.value(o);
    j.end_array().end_object();
    return j.str();
}

}  // namespace tclab::io
