// Command-line front end: stationary law, limit coefficients, fixation
// curves, Monte Carlo estimators and the acceptance suite.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wflevy/easg.hpp"
#include "wflevy/fixation.hpp"
#include "wflevy/io.hpp"
#include "wflevy/odes.hpp"
#include "wflevy/sde.hpp"
#include "wflevy/stationary.hpp"
#include "wflevy/validation.hpp"

namespace {

using namespace wflevy;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Common {
    double sigma = 0.8;
    std::vector<std::string> atoms;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;

    Environment environment() const {
        std::vector<Atom> parsed;
        for (const auto& a : atoms) parsed.push_back(parse_atom(a));
        return Environment(sigma, parsed);
    }
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void emit(const Common& c, const std::string& text) {
    if (c.out.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file(c.out, text);
}

void add_common(CLI::App& app, Common& c) {
    app.add_option("--sigma", c.sigma, "Drift of the environment (>= 0)")->capture_default_str();
    app.add_option("--atom", c.atoms, "Jump atom z:w with z in (-1, 1) \\ {0} and w > 0; repeatable");
    app.add_option("--out", c.out, "Output file or prefix (default: standard output)");
    app.add_option("--seed", c.seed, "Base random seed")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

int cmd_pi(const Common& c, int K) {
    const auto env = c.environment();
    StationaryDistribution pi;
    try {
        pi = compute_pi(env, K);
    } catch (const CutoffTooSmall& e) {
        throw UsageError(e.what());
    }
    emit(c, pi_csv(pi));
    std::fprintf(stderr, "pi(1) bracket [%s, %s] width %s; certified tail beyond K=%d: %s\n",
                 format_number(pi.pi1_bracket.lower).c_str(), format_number(pi.pi1_bracket.upper).c_str(),
                 format_number(pi.pi1_bracket.width()).c_str(), K, format_number(pi.tail_upper).c_str());
    return 0;
}

int cmd_coeffs(const Common& c, int K, int J, int ratio_terms, bool grid) {
    const auto env = c.environment();
    std::string text = params_line(env);

    const auto ode = extract_b_ode(env, J);
    text += fmt::format("# b from the Q-system, J={} (t={:g}, window delta {:.3g}, raw mass {:.9g})\n", J,
                        ode.report.t_final, ode.report.window_delta, ode.report.raw_mass);
    for (int j = 1; j <= J; ++j) text += fmt::format("{} {:.9g}\n", j, ode.b[j - 1]);

    const auto ratios = b_ratios(env, ratio_terms);
    const auto norm = normalize_b(ratios, ratio_terms);
    if (norm.ok) {
        text += fmt::format("# b from the ratio recursion, normalized over j <= {}\n", norm.j_sum);
        for (int j = 1; j <= std::min(J, norm.j_sum); ++j) text += fmt::format("{} {:.9g}\n", j, norm.coeffs.b[j - 1]);
    } else {
        text += fmt::format("# ratio recursion: normalization refused: {}\n", norm.reason);
    }
    text += "# b_j / b_1 from the ratio recursion\n";
    for (int j = 1; j <= J; ++j) text += fmt::format("{} {:.9g}\n", j, ratios[j - 1]);

    if (grid) {
        const auto lim = extract_a(env, K);
        const int k_max = std::min(12, K - 1);
        const auto res = relation_residuals(env, lim.a, ode.b, k_max);
        text += fmt::format("# a grid, K={} (t={:g}, window delta {:.3g}, raw mass {:.9g})\n", K, lim.report.t_final,
                            lim.report.window_delta, lim.report.raw_mass);
        text += fmt::format("# residuals: a relation (k <= {}) {:.3g}, b relation {:.3g}, b - column sums of a {:.3g}\n",
                            k_max, res.a_relation_max, res.b_relation_max, res.b_vs_a_max);
        for (int k = 1; k <= K; ++k)
            for (int j = 1; j <= k; ++j) text += fmt::format("{} {} {:.9g}\n", k, j, lim.a(k, j));
    }
    emit(c, text);
    return 0;
}

int cmd_fixation(const Common& c, int K, int points, bool closed_form, bool reference) {
    if (reference) {
        if (c.out.empty()) throw UsageError("--reference writes four files and needs --out PREFIX");
        for (const auto& curve : reference_curves(K, points)) {
            std::string name = curve.label;
            for (auto& ch : name)
                if (ch == '=' || ch == '.') ch = '_';
            const std::string path = c.out + "_" + name + ".csv";
            write_file(path, curve_csv(curve));
            std::fprintf(stderr, "wrote %s\n", path.c_str());
        }
        return 0;
    }
    const auto env = c.environment();
    Curve curve;
    if (closed_form) {
        if (env.has_jumps()) throw UsageError("--closed-form applies only without jump atoms");
        for (int n = 0; n < points; ++n) {
            const double x = static_cast<double>(n) / (points - 1);
            curve.points.push_back({x, closed_form_no_env(x, env.sigma()), 0.0});
        }
    } else {
        curve = series_curve(make_series(env, K), points);
    }
    emit(c, curve_csv(curve));
    return 0;
}

struct SimulateArgs {
    std::string mode = "sde";
    double x0 = 0.5;
    double T = -1.0;
    double dt = 1e-3;
    double t_max = 200.0;
    std::int64_t samples = 10000;
    int power = 1;
    int m = 1;
    int i = 1;
    int cap = 20;
    int K = 64;
    int J = 16;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
    const auto env = c.environment();
    std::string text;
    if (a.mode == "sde") {
        PathConfig cfg;
        cfg.x0 = a.x0;
        cfg.dt = a.dt;
        cfg.T_max = a.t_max;
        cfg.seed = c.seed;
        if (a.T >= 0.0) {
            cfg.T_max = std::max(cfg.T_max, a.T);
            const auto e = estimate_moment(env, a.power, a.T, a.samples, cfg, c.threads);
            text = fmt::format("x0,l,T,moment,se\n{:.9g},{},{:.9g},{:.9g},{:.9g}\n", a.x0, a.power, a.T, e.value,
                               e.std_error);
        } else {
            const auto f = estimate_fixation(env, a.samples, cfg, c.threads);
            text = fmt::format("x0,h,se,undecided\n{:.9g},{:.9g},{:.9g},{:.9g}\n", a.x0, f.h, f.std_error,
                               f.undecided_fraction);
        }
    } else if (a.mode == "easg") {
        const double T = a.T >= 0.0 ? a.T : 1.0;
        const auto mc = estimate_duality_coeffs(env, a.m, a.i, T, a.samples, c.seed, c.threads, a.cap);
        const auto R = integrate_r(env, std::max(a.K, a.m), T, {}, a.m, a.i);
        const auto Q = integrate_q(env, std::max(a.J, a.i), T, {}, a.i);
        text = "kind,k,j,mc,se,ode\n";
        for (int k = 1; k <= mc.cap; ++k)
            for (int j = 1; j <= k; ++j)
                if (mc.r(k, j).value != 0.0 || R(k, j) != 0.0)
                    text += fmt::format("R,{},{},{:.9g},{:.9g},{:.9g}\n", k, j, mc.r(k, j).value,
                                        mc.r(k, j).std_error, R(k, j));
        for (int j = 1; j <= mc.cap; ++j)
            if (mc.q(j).value != 0.0 || Q(j) != 0.0)
                text += fmt::format("Q,,{},{:.9g},{:.9g},{:.9g}\n", j, mc.q(j).value, mc.q(j).std_error, Q(j));
        std::fprintf(stderr, "overflow fraction %s over %lld runs\n", format_number(mc.overflow_fraction()).c_str(),
                     static_cast<long long>(mc.runs));
    } else if (a.mode == "line-count") {
        LineCountOptions lc;
        lc.horizon = a.T >= 0.0 ? a.T : 1e5;
        lc.burn_in = std::min(100.0, 0.1 * lc.horizon);
        lc.seed = c.seed;
        const auto occ = simulate_line_count(env, lc);
        const auto pi = compute_pi_auto(env);
        text = "k,fraction,se,pi\n";
        for (int k = 1; k <= static_cast<int>(occ.fraction.size()); ++k)
            text += fmt::format("{},{:.9g},{:.9g},{:.9g}\n", k, occ.at(k), occ.se(k), pi(k));
    } else {
        throw UsageError(fmt::format("unknown --mode '{}'", a.mode));
    }
    emit(c, text);
    return 0;
}

int cmd_validate(bool quick, const std::vector<int>& only, int threads, std::uint64_t seed) {
    ValidationOptions opts;
    opts.quick = quick;
    opts.threads = threads;
    if (seed != 0) opts.seed = seed;
    int failed = 0;
    run_validation(opts, only, [&](const CriterionResult& r) {
        if (!r.passed) ++failed;
        std::printf("%s\n", format_result(r).c_str());
        std::fflush(stdout);
    });
    return failed == 0 ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixation probabilities of Wright-Fisher diffusions in a compound Poisson environment"};
    app.set_config("--config", "", "Read options from a key=value file; subcommand keys go in a [name] section");
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    add_common(app, common);
    int K = 64;
    int J = 16;
    int ratio_terms = 60;
    bool no_grid = false;
    int points = 201;
    bool closed_form = false;
    bool reference = false;
    SimulateArgs sim;
    bool quick = false;
    std::vector<int> only;

    auto* pi = app.add_subcommand("pi", "Stationary law of the line-counting process (CSV k,pi,ratio)");
    pi->add_option("--K", K, "Cutoff")->capture_default_str()->check(CLI::PositiveNumber);

    auto* coeffs = app.add_subcommand("coeffs", "Limit coefficients b (two routes) and the a grid");
    coeffs->add_option("--K", K, "Cutoff of the a grid")->capture_default_str()->check(CLI::Range(2, 256));
    coeffs->add_option("--J", J, "Truncation of the Q-system")->capture_default_str()->check(CLI::Range(2, 64));
    coeffs->add_option("--ratio-terms", ratio_terms, "Terms of the ratio recursion")->capture_default_str();
    coeffs->add_flag("--no-grid", no_grid, "Skip the a grid");

    auto* fix = app.add_subcommand("fixation", "Fixation probability h(x) on a grid (CSV x,h,err)");
    fix->add_option("--K", K, "Series cutoff")->capture_default_str()->check(CLI::Range(2, 256));
    fix->add_option("--points", points, "Grid points on [0, 1]")->capture_default_str()->check(CLI::Range(2, 100001));
    fix->add_flag("--closed-form", closed_form, "Use the closed form (no atoms only)");
    fix->add_flag("--reference", reference, "Write the four sigma=lambda=0.8 curves to PREFIX_a_*.csv");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimators");
    simulate->add_option("--mode", sim.mode, "sde, easg or line-count")
        ->capture_default_str()
        ->check(CLI::IsMember({"sde", "easg", "line-count"}));
    simulate->add_option("--x0", sim.x0, "Initial frequency (sde)")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--T", sim.T, "Time horizon; sde: moment time, easg: graph time, line-count: horizon");
    simulate->add_option("--dt", sim.dt, "Euler step (sde)")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--t-max", sim.t_max, "Fixation horizon (sde)")->capture_default_str();
    simulate->add_option("--samples", sim.samples, "Paths or graphs")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--l", sim.power, "Moment power (sde with --T)")->capture_default_str();
    simulate->add_option("--m", sim.m, "Initial lines (easg)")->capture_default_str();
    simulate->add_option("--i", sim.i, "Initial block size (easg)")->capture_default_str();
    simulate->add_option("--cap", sim.cap, "Line cap (easg)")->capture_default_str()->check(CLI::Range(1, 30));
    simulate->add_option("--K", sim.K, "R-system cutoff for the comparison (easg)")->capture_default_str();
    simulate->add_option("--J", sim.J, "Q-system truncation for the comparison (easg)")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Run the acceptance criteria");
    validate->add_flag("--quick", quick, "Only the cheap criteria");
    validate->add_option("--criterion", only, "Run only these criteria (1-13); repeatable")
        ->check(CLI::Range(1, kCriteria));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    const bool seed_given = app.count("--seed") > 0;
    try {
        if (*pi) return cmd_pi(common, K);
        if (*coeffs) return cmd_coeffs(common, K, J, ratio_terms, !no_grid);
        if (*fix) return cmd_fixation(common, K, points, closed_form, reference);
        if (*simulate) return cmd_simulate(common, sim);
        if (*validate) return cmd_validate(quick, only, common.threads, seed_given ? common.seed : 0);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitUsage;
}
