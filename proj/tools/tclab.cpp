// Command-line front end.  Subcommands: attractor | profile | find-alpha |
// sweep | verify | calibrate.  Precedence: CLI flag > config file > default.
// Exit codes: 0 success, 1 runtime failure (including a failing gated check
// under `verify`), 2 configuration error.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tclab/io.hpp"

namespace fs = std::filesystem;
using namespace tclab;

namespace {

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string& command, const io::Config& c,
                    const rot::RotationNumber& om, const std::vector<std::string>& outputs,
                    double alpha_effective, const std::string& out_dir) {
    io::write_text(out_dir + "/manifest.json",
                   io::manifest_json(command, c, om, outputs, alpha_effective, utc_timestamp()));
}

// "mid" | "auto" | number -> concrete alpha; "auto" runs the critical search
double resolve_alpha(const io::Config& c, const rot::RotationNumber& om, bool prefer_auto) {
    if (c.alpha_is_auto() || (prefer_auto && c.alpha_is_mid())) {
        crit::CriticalOptions opt;
        opt.tol_alpha = c.tol_alpha;
        if (c.depth > 0) opt.depth = (int)c.depth;
        return crit::find_alpha_c(c.lambda, om, opt).alpha_c;
    }
    if (c.alpha_is_mid()) return dyn::alpha_window_mid(c.lambda, om.value.value());
    return c.alpha_number();
}

int run_attractor(const io::Config& c, const std::string& out) {
    rot::RotationNumber om = c.resolve_omega();
    double alpha = resolve_alpha(c, om, /*prefer_auto=*/false);
    dyn::SystemParams p = dyn::make_params(alpha, c.beta, c.lambda, om);
    int depth = c.depth > 0 ? (int)c.depth : attr::choose_depth(c.beta, c.depth_tol);
    attr::CurveSample curve =
        attr::sample_curve(attr::uniform_grid(c.grid_n), p, c.depth_tol, depth);
    io::write_text(out + "/curve.csv", io::curve_csv(curve));
    write_manifest("attractor", c, om, {"curve.csv"}, alpha, out);
    return 0;
}

int run_profile(const io::Config& c, const std::string& out) {
    rot::RotationNumber om = c.resolve_omega();
    double alpha = resolve_alpha(c, om, /*prefer_auto=*/false);
    dyn::SystemParams p = dyn::make_params(alpha, c.beta, c.lambda, om);
    io::write_text(out + "/profile.csv", io::profile_csv(attr::uniform_grid(c.grid_n), p));
    write_manifest("profile", c, om, {"profile.csv"}, alpha, out);
    return 0;
}

int run_find_alpha(const io::Config& c, const std::string& out) {
    rot::RotationNumber om = c.resolve_omega();
    crit::CriticalOptions opt;
    opt.tol_alpha = c.tol_alpha;
    if (c.depth > 0) opt.depth = (int)c.depth;
    crit::CriticalResult r = crit::find_alpha_c(c.lambda, om, opt);
    io::write_text(out + "/alpha_c.json", io::alpha_c_json(r, c.lambda, om));
    write_manifest("find-alpha", c, om, {"alpha_c.json"}, r.alpha_c, out);
    return 0;
}

int run_sweep(const io::Config& c, const std::string& out) {
    rot::RotationNumber om = c.resolve_omega();
    double alpha_c = resolve_alpha(c, om, /*prefer_auto=*/true);
    asym::SweepOptions opt;
    if (c.has_beta_grid) opt.betas = c.beta_grid;
    opt.grid_n = c.grid_n;
    opt.tol = c.depth_tol;
    opt.lyap_n = c.lyap_n;
    opt.lyap_burn = c.lyap_burn;
    opt.lyap_starts = (int)c.lyap_starts;
    opt.seed = c.seed;
    asym::SweepResult s = asym::sweep(c.lambda, alpha_c, om, opt);
    for (const std::string& d : s.dropped) std::fprintf(stderr, "sweep: dropped %s\n", d.c_str());
    asym::FitResult dist = asym::fit_linear_distance(s.records, c.lambda, alpha_c, om);
    asym::FitResult deriv = asym::fit_power_derivative(s.records);
    io::write_text(out + "/sweep.csv", io::sweep_csv(s));
    io::write_text(out + "/fits.json", io::fits_json(dist, deriv));
    write_manifest("sweep", c, om, {"sweep.csv", "fits.json"}, alpha_c, out);
    return 0;
}

int run_verify(const io::Config& c, const std::string& out) {
    rot::RotationNumber om = c.resolve_omega();
    lem::VerifyOptions opt;
    opt.grid_1d = c.grid_1d;
    opt.grid_theta = c.grid_theta;
    opt.grid_x = c.grid_x;
    opt.spot_samples = c.spot_samples;
    opt.seed = c.seed;
    if (c.alpha_is_auto()) {
        crit::CriticalOptions copt;
        copt.tol_alpha = c.tol_alpha;
        opt.alpha = crit::find_alpha_c(c.lambda, om, copt).alpha_c;
    } else if (!c.alpha_is_mid()) {
        opt.alpha = c.alpha_number();
    }
    lem::VerifySuite s = lem::run_all(c.lambda, om, opt);
    io::write_text(out + "/lemmas.csv", io::lemmas_csv(s));
    io::write_text(out + "/summary.json", io::summary_json(s));
    write_manifest("verify", c, om, {"lemmas.csv", "summary.json"}, s.alpha, out);
    for (const lem::LemmaReport& r : s.reports)
        std::printf("%-32s %s margin=%.3g%s\n", r.id.c_str(),
                    r.passed ? (r.vacuous ? "pass (vacuous)" : "pass") : "FAIL", r.margin,
                    r.gating ? "" : " [advisory]");
    if (!s.all_gated_pass) {
        std::fprintf(stderr, "verify: gated check failed at lambda=%s\n",
                     io::fmt17(c.lambda).c_str());
        return 1;
    }
    return 0;
}

int run_calibrate(const io::Config& c, const std::string& out) {
    rot::RotationNumber om = c.resolve_omega();
    lem::VerifyOptions opt;
    opt.grid_1d = c.grid_1d;
    opt.grid_theta = c.grid_theta;
    opt.grid_x = c.grid_x;
    opt.spot_samples = c.spot_samples;
    opt.seed = c.seed;
    lem::CalibrationResult r = lem::calibrate_lambda(c.lambda_candidates, om, opt);
    io::write_text(out + "/calibration.json", io::calibration_json(r));
    write_manifest("calibrate", c, om, {"calibration.json"},
                   std::numeric_limits<double>::quiet_NaN(), out);
    std::printf("calibrated lambda = %s\n", io::fmt17(r.lambda).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the quasi-periodically forced quadratic map"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    double flag_lambda = 0, flag_beta = 0, flag_alpha_num = 0, flag_depth_tol = 0;
    std::string flag_alpha;
    long long flag_grid = 0, flag_seed = 0, flag_threads = -1;
    auto* o_config = app.add_option("--config", config_path, "JSON config file (or a manifest)");
    auto* o_out = app.add_option("--out", out_dir, "output directory (default: .)");
    auto* o_lambda = app.add_option("--lambda", flag_lambda, "forcing localization parameter");
    auto* o_beta = app.add_option("--beta", flag_beta, "forcing strength in [0, 1]");
    auto* o_alpha = app.add_option("--alpha", flag_alpha, "peak offset: number, 'mid', or 'auto'");
    auto* o_grid = app.add_option("--grid", flag_grid, "phase grid size");
    auto* o_dtol = app.add_option("--depth-tol", flag_depth_tol, "pullback residual target");
    auto* o_seed = app.add_option("--seed", flag_seed, "RNG seed");
    auto* o_threads = app.add_option("--threads", flag_threads, "worker threads (0 = hardware)");
    (void)flag_alpha_num;

    const std::pair<const char*, const char*> subs[] = {
        {"attractor", "sample the invariant curve on a phase grid"},
        {"profile", "tabulate the forcing coefficient c(theta)"},
        {"find-alpha", "locate the critical peak offset alpha_c"},
        {"sweep", "beta sweep: distances, derivatives, Lyapunov, fits"},
        {"verify", "run the lemma verifier suite at one lambda"},
        {"calibrate", "pick the smallest lambda candidate passing the suite"},
    };
    for (auto [name, desc] : subs) app.add_subcommand(name, desc)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        io::Config cfg = o_config->count() ? io::load_config(config_path) : io::Config{};
        if (o_lambda->count()) cfg.lambda = flag_lambda;
        if (o_beta->count()) cfg.beta = flag_beta;
        if (o_alpha->count()) {
            cfg.alpha_spec = flag_alpha;
            if (!cfg.alpha_is_auto() && !cfg.alpha_is_mid()) cfg.alpha_number();
        }
        if (o_grid->count()) cfg.grid_n = flag_grid;
        if (o_dtol->count()) cfg.depth_tol = flag_depth_tol;
        if (o_seed->count()) cfg.seed = (uint64_t)flag_seed;
        if (o_threads->count() >= 1 && flag_threads >= 0)
            cfg.threads = flag_threads;
        if (cfg.threads > 0) par::set_threads((int)cfg.threads);

        if (o_out->count() || !fs::exists(out_dir)) fs::create_directories(out_dir);

        if (app.got_subcommand("attractor")) return run_attractor(cfg, out_dir);
        if (app.got_subcommand("profile")) return run_profile(cfg, out_dir);
        if (app.got_subcommand("find-alpha")) return run_find_alpha(cfg, out_dir);
        if (app.got_subcommand("sweep")) return run_sweep(cfg, out_dir);
        if (app.got_subcommand("verify")) return run_verify(cfg, out_dir);
        if (app.got_subcommand("calibrate")) return run_calibrate(cfg, out_dir);
        std::fprintf(stderr, "no subcommand\n");
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
