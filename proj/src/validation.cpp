#include "wflevy/validation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "wflevy/easg.hpp"
#include "wflevy/fixation.hpp"
#include "wflevy/odes.hpp"
#include "wflevy/sde.hpp"
#include "wflevy/stationary.hpp"

namespace wflevy {

namespace {

constexpr int kSeriesCutoff = 64;

struct Context {
    ValidationOptions opts;
    std::map<std::string, SeriesRepresentation> series;

    const SeriesRepresentation& series_for(const Environment& env) {
        const auto key = env.describe();
        auto it = series.find(key);
        if (it == series.end()) it = series.emplace(key, make_series(env, kSeriesCutoff)).first;
        return it->second;
    }
    std::uint64_t seed(int criterion) const { return opts.seed + 1000003ULL * static_cast<std::uint64_t>(criterion); }
};

struct Outcome {
    bool passed = true;
    std::string measured;
};

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome reference_reproduction(Context&) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool all_ok = true;
    for (const auto& row : reference_coefficients()) {
        const auto norm = normalize_b(b_ratios(reference_environment(row.a), 60));
        if (!norm.ok || norm.coeffs.b.size() < 7) {
            all_ok = false;
            continue;
        }
        for (int j = 0; j < 7; ++j) worst = std::max(worst, std::abs(norm.coeffs.b[j] - row.b[j]));
    }
    const double secs = elapsed_since(start);
    return {all_ok && worst <= 5e-7 && secs < 1.0,
            fmt::format("max |b - ref| = {:.3g} (tol 5e-07) over 28 values, {:.3f} s", worst, secs)};
}

Outcome closed_form_row(Context&) {
    const double sigma = 0.8;
    const auto norm = normalize_b(b_ratios(reference_environment(0.0), 60));
    if (!norm.ok) return {false, "normalization refused: " + norm.reason};
    double worst = 0.0;
    double factorial = 1.0;
    for (int k = 1; k <= 7; ++k) {
        factorial *= k;
        const double exact = std::pow(sigma, k - 1) / factorial * sigma / std::expm1(sigma);
        worst = std::max(worst, std::abs(norm.coeffs.b[k - 1] - exact));
    }
    return {worst <= 1e-12, fmt::format("max |b_k - closed form| = {:.3g} (tol 1e-12)", worst)};
}

Outcome low_order_ratios(Context& ctx) {
    Rng rng = make_stream(ctx.seed(3), 0);
    std::uniform_real_distribution<double> sigma_draw(0.0, 2.0), z_draw(-0.95, 0.95), w_draw(0.05, 1.5);
    std::uniform_int_distribution<int> count_draw(1, 3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Atom> atoms;
        for (int n = count_draw(rng); n > 0; --n) {
            double z = 0.0;
            while (std::abs(z) < 1e-3) z = z_draw(rng);
            atoms.push_back({z, w_draw(rng)});
        }
        const Environment env(sigma_draw(rng), atoms);
        const auto r = b_ratios(env, 3);
        const double s = env.sigma(), m1 = env.moment(1), m2 = env.moment(2);
        worst = std::max(worst, std::abs(r[1] - (s - m1) / 2.0));
        worst = std::max(worst, std::abs(r[2] - (2.0 * s - 2.0 * m1 - m2) * (s - m1) / 12.0));
    }
    return {worst <= 1e-12, fmt::format("max deviation of b2/b1, b3/b1 over 20 environments = {:.3g} (tol 1e-12)", worst)};
}

Outcome absolute_b(Context&) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& row : reference_coefficients()) {
        const auto lim = extract_b_ode(reference_environment(row.a), 16, {}, Stabilization{1.0, 1e-9, 200.0});
        for (int j = 0; j < 7; ++j) worst = std::max(worst, std::abs(lim.b[j] - row.b[j]));
    }
    const double secs = elapsed_since(start);
    return {worst <= 1e-4 && secs < 120.0,
            fmt::format("max |b_ode - ref| = {:.3g} (tol 1e-04), {:.2f} s", worst, secs)};
}

Outcome limit_relations(Context& ctx) {
    double residual = 0.0, row_gap = 0.0, corner_gap = 0.0;
    for (double a : {0.1, 0.2, 0.3}) {
        const Environment env = reference_environment(a);
        const auto& s = ctx.series_for(env);
        const auto pi = compute_pi_auto(env);
        residual = std::max(residual, relation_residuals(env, s.a, {}, 12).a_relation_max);
        for (int k = 1; k <= 12; ++k) row_gap = std::max(row_gap, std::abs(s.a.row_sum(k) - pi(k)));
        corner_gap = std::max(corner_gap, std::abs(s.a(1, 1) - pi(1)));
    }
    return {residual <= 1e-5 && row_gap <= 1e-6 && corner_gap <= 1e-6,
            fmt::format("relation residual {:.3g} (tol 1e-05), max |row sum - pi| {:.3g} (tol 1e-06), "
                        "|a(1,1) - pi(1)| {:.3g} (tol 1e-06)",
                        residual, row_gap, corner_gap)};
}

Outcome series_endpoint(Context& ctx) {
    bool ok = true;
    std::string detail;
    for (const auto& row : reference_coefficients()) {
        const auto v = h_series(1.0, ctx.series_for(reference_environment(row.a)));
        const bool in = v.value >= 1.0 - v.error_bound - 1e-6 && v.value <= 1.0 + 1e-6;
        ok = ok && in;
        detail += fmt::format("{}a={:g}: h(1)={:.9f} err={:.3g}", detail.empty() ? "" : "; ", row.a, v.value,
                              v.error_bound);
    }
    return {ok, detail};
}

Outcome martingale(Context& ctx) {
    const Environment env(0.5, {{0.5, 1.0}});
    const auto& s = ctx.series_for(env);
    double gap = 0.0;
    for (int n = 0; n <= 100; ++n) {
        const double x = n / 100.0;
        gap = std::max(gap, std::abs(h_series(x, s).value - x));
    }
    const auto lim = extract_b_ode(env, 16);
    double b_max = 0.0;
    for (int j = 2; j <= 7; ++j) b_max = std::max(b_max, std::abs(lim.b[j - 1]));
    return {gap <= s.pi_tail + 1e-4 && b_max <= 1e-6,
            fmt::format("max |h(x) - x| = {:.3g} (tol {:.3g}), max |b_j| for j=2..7 = {:.3g} (tol 1e-06)", gap,
                        s.pi_tail + 1e-4, b_max)};
}

Outcome one_sided(Context& ctx) {
    const Environment env(0.5, {{-0.3, 0.7}});
    const auto& s = ctx.series_for(env);
    const double a_min = *std::min_element(s.a.values.begin(), s.a.values.end());
    // b_1 from the first column of the limit grid, b_j / b_1 from the
    // recursion: two independent routes whose product must sum to one.
    double b1 = 0.0;
    for (int k = 1; k <= s.K; ++k) b1 += s.a(k, 1);
    const auto ratios = b_ratios(env, 60);
    const auto norm = normalize_b(ratios);
    if (!norm.ok) return {false, "ratio normalization refused: " + norm.reason};
    double ratio_sum = 0.0, b_min = 0.0;
    for (int j = 1; j <= norm.j_sum; ++j) {
        ratio_sum += ratios[j - 1];
        b_min = std::min(b_min, b1 * ratios[j - 1]);
    }
    const double total = b1 * ratio_sum;
    return {a_min >= -1e-9 && b_min >= -1e-9 && std::abs(total - 1.0) <= 1e-4,
            fmt::format("min a = {:.3g}, min b = {:.3g} (tol -1e-09), sum b = {:.10f} (tol 1e-04)", a_min, b_min,
                        total)};
}

Outcome stationary_checks(Context& ctx) {
    const Environment env = reference_environment(0.1);
    const auto pi = compute_pi_auto(env);
    double mean_rate = 0.0;
    for (int k = 1; k <= pi.cutoff; ++k)
        mean_rate += pi(k) * (static_cast<double>(k) * (k - 1) + k * env.sigma() + env.total_mass());
    LineCountOptions lc;
    lc.seed = ctx.seed(9);
    lc.burn_in = 100.0;
    lc.horizon = lc.burn_in + static_cast<double>(1000000) / mean_rate;
    const auto occ = simulate_line_count(env, lc);
    double worst_z = 0.0;
    bool ok = true;
    for (int k = 1; k <= 8; ++k) {
        const double z = std::abs(occ.at(k) - pi(k)) / occ.se(k);
        ok = ok && std::abs(occ.at(k) - pi(k)) <= 3.0 * occ.se(k);
        worst_z = std::max(worst_z, z);
    }
    double worst_dual = 0.0;
    for (int d = 2; d <= 6; ++d) {
        const auto est = siegmund_absorption(env, d, 256, 100000, ctx.seed(9) + d, ctx.opts.threads);
        const double gap = std::abs(est.estimate - pi.tail_from(d));
        ok = ok && gap <= 3.0 * est.std_error + est.cap_bias_bound;
        worst_dual = std::max(worst_dual, gap / (3.0 * est.std_error + est.cap_bias_bound));
    }
    return {ok, fmt::format("occupation: {} events, max |z| = {:.2f} (tol 3); dual absorption: max gap / tolerance = {:.2f}",
                            occ.events, worst_z, worst_dual)};
}

Outcome easg_invariants(Context& ctx) {
    Rng rng = make_stream(ctx.seed(10), 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::int64_t graphs = 10000;
    double sum_err = 0.0, bound = 0.0, poly_lo = 0.0, poly_hi = 1.0, overflow = 0.0, compose = 0.0;
    double subset_lo = 1.0, subset_hi = 0.0;
    int composed = 0;
    for (double a : {0.1, 0.2, 0.3}) {
        const Environment env = reference_environment(a);
        std::int64_t overflowed = 0;
        for (std::int64_t g = 0; g < graphs; ++g) {
            const EASGState st = run_to(env, 1, 1, 2.0, 20, rng);
            if (st.overflowed()) {
                ++overflowed;
                continue;
            }
            // Replay to check the total mass and the size bound after every event.
            EASGState replay = EASGState::init(1, 1, 20);
            for (const auto& e : st.log()) {
                replay.apply(e);
                double total = 0.0;
                for (const auto& en : replay.entries()) {
                    total += en.value;
                    const int k = std::popcount(en.mask);
                    bound = std::max(bound, std::abs(en.value) / std::pow(k, k));
                }
                sum_err = std::max(sum_err, std::abs(total - 1.0));
            }
            const auto rep = check_invariants(st, rng);
            sum_err = std::max(sum_err, rep.sum_error);
            bound = std::max(bound, rep.max_bound_ratio);
            subset_lo = std::min(subset_lo, rep.min_subset_sum);
            subset_hi = std::max(subset_hi, rep.max_subset_sum);
            for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                const double p = st.graph_polynomial(x);
                poly_lo = std::min(poly_lo, p);
                poly_hi = std::max(poly_hi, p);
            }
            if (composed < 100 && !st.log().empty()) {
                compose = std::max(compose, compose_check(st, unif(rng) * 2.0));
                ++composed;
            }
        }
        overflow = std::max(overflow, static_cast<double>(overflowed) / static_cast<double>(graphs));
    }

    // Single multiple branching from i lines: the level sums have a closed form.
    double level_gap = 0.0;
    for (int i = 1; i <= 3; ++i) {
        for (double S : {0.1, 0.2, 0.3, -0.3, -0.9}) {
            EASGState st = EASGState::init(i, i, 20);
            st.apply_multiple_branching(S);
            const auto sums = st.size_sums();
            for (int j = i; j <= 2 * i; ++j) {
                const double expect = binomial(i, j - i) * std::pow(1.0 + S, 2 * i - j) * std::pow(-S, j - i);
                level_gap = std::max(level_gap, std::abs(sums[j - 1] - expect));
            }
        }
    }

    const bool ok = sum_err <= 1e-9 && bound <= 1.0 + 1e-9 && poly_lo >= -1e-9 && poly_hi <= 1.0 + 1e-9 &&
                    subset_lo >= -1e-9 && subset_hi <= 1.0 + 1e-9 && overflow < 1e-3 && level_gap <= 1e-12 &&
                    compose <= 1e-9 && composed == 100;
    return {ok, fmt::format("{} graphs per set: |sum F - 1| {:.2g}, max |F|/|A|^|A| {:.3g}, polynomial in "
                            "[{:.3g}, {:.3g}], subset sums in [{:.3g}, {:.3g}], overflow {:.2g}, level-sum oracle "
                            "{:.2g}, composition {:.2g} on {} logs",
                            graphs, sum_err, bound, poly_lo, poly_hi, subset_lo, subset_hi, overflow, level_gap, compose,
                            composed)};
}

Outcome moment_duality(Context& ctx) {
    const auto start = std::chrono::steady_clock::now();
    const Environment env = reference_environment(0.1);
    const std::vector<int> powers{1, 2};
    const std::vector<double> times{0.5, 1.0};
    std::vector<std::vector<CoefficientGrid>> grids(2);
    for (int l : powers)
        for (double T : times) grids[l - 1].push_back(integrate_r(env, kSeriesCutoff, T, {}, l, l));
    bool ok = true;
    double worst = 0.0;
    int n = 0;
    for (double x : {0.3, 0.7}) {
        PathConfig cfg;
        cfg.x0 = x;
        cfg.dt = 1e-3;
        cfg.seed = ctx.seed(11) + static_cast<std::uint64_t>(++n);
        const auto mc = estimate_moments(env, powers, times, 100000, cfg, ctx.opts.threads);
        for (std::size_t a = 0; a < powers.size(); ++a) {
            for (std::size_t b = 0; b < times.size(); ++b) {
                const double exact = grids[a][b].polynomial(x);
                const double tol = 3.0 * mc[a][b].std_error + 0.005;
                const double gap = std::abs(mc[a][b].value - exact);
                ok = ok && gap <= tol;
                worst = std::max(worst, gap / tol);
            }
        }
    }
    const double secs = elapsed_since(start);
    return {ok && secs < 300.0, fmt::format("8 (l, T, x) cells: max gap / tolerance = {:.2f}, {:.1f} s", worst, secs)};
}

Outcome fixation_cross(Context& ctx) {
    bool ok = true;
    std::string detail;
    double worst = 0.0, undecided = 0.0;
    int n = 0;
    for (double a : {0.1, 0.0}) {
        const Environment env = reference_environment(a);
        const auto& s = ctx.series_for(env);
        for (double x : {0.25, 0.5, 0.75}) {
            PathConfig cfg;
            cfg.x0 = x;
            cfg.seed = ctx.seed(12) + static_cast<std::uint64_t>(++n);
            const auto est = estimate_fixation(env, 10000, cfg, ctx.opts.threads);
            const double tol = 3.0 * est.std_error + 0.01;
            std::vector<double> targets{h_series(x, s).value};
            if (a == 0.0) targets.push_back(closed_form_no_env(x, env.sigma()));
            for (double target : targets) {
                const double gap = std::abs(est.h - target);
                ok = ok && gap <= tol;
                worst = std::max(worst, gap / tol);
            }
            undecided = std::max(undecided, est.undecided_fraction);
        }
    }
    return {ok, fmt::format("max gap / tolerance = {:.2f}, max undecided fraction {:.2g}", worst, undecided)};
}

Outcome easg_vs_ode(Context& ctx) {
    bool ok = true;
    double worst = 0.0, overflow = 0.0;
    int compared = 0;
    for (double a : {0.1, 0.3}) {
        const Environment env = reference_environment(a);
        const auto mc = estimate_duality_coeffs(env, 1, 1, 1.0, 100000, ctx.seed(13) + (a > 0.2 ? 1 : 0),
                                                ctx.opts.threads);
        overflow = std::max(overflow, mc.overflow_fraction());
        const auto R = integrate_r(env, kSeriesCutoff, 1.0);
        const auto Q = integrate_q(env, 16, 1.0);
        auto compare = [&](double exact, const Estimate& e) {
            if (std::abs(exact) <= 0.01) return;
            ++compared;
            const double z = std::abs(e.value - exact) / e.std_error;
            ok = ok && std::abs(e.value - exact) <= 3.0 * e.std_error;
            worst = std::max(worst, z);
        };
        for (int k = 1; k <= mc.cap; ++k)
            for (int j = 1; j <= k; ++j) compare(R(k, j), mc.r(k, j));
        for (int j = 1; j <= mc.cap; ++j) compare(Q(j), mc.q(j));
    }
    return {ok, fmt::format("{} coefficients above 0.01: max |z| = {:.2f} (tol 3), overflow {:.2g}", compared, worst,
                            overflow)};
}

struct Criterion {
    int id;
    const char* title;
    Outcome (*run)(Context&);
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {1, "reference coefficients from the ratio recursion", reference_reproduction},
        {2, "closed form without environment", closed_form_row},
        {3, "closed-form low-order ratios", low_order_ratios},
        {4, "absolute b from the Q-system", absolute_b},
        {5, "limit relations of the R-system", limit_relations},
        {6, "series endpoint h(1)", series_endpoint},
        {7, "martingale environment", martingale},
        {8, "one-sided environment", one_sided},
        {9, "stationary law cross-checks", stationary_checks},
        {10, "E-ASG exact invariants", easg_invariants},
        {11, "moment duality against the SDE", moment_duality},
        {12, "fixation probability against the SDE", fixation_cross},
        {13, "E-ASG estimates against the ODEs", easg_vs_ode},
    };
    return all;
}

}  // namespace

const std::vector<ReferenceRow>& reference_coefficients() {
    static const std::vector<ReferenceRow> rows{
        {0.0, {0.6527730, 0.2611092, 0.0696291, 0.0139258, 0.0022281, 0.0002971, 0.0000340}},
        {0.1, {0.6830193, 0.2458870, 0.0586850, 0.0106059, 0.0015752, 0.0002021, 0.0000229}},
        {0.2, {0.7145930, 0.2286698, 0.0475633, 0.0078140, 0.0011734, 0.0001641, 0.0000201}},
        {0.3, {0.7473968, 0.2092711, 0.0365527, 0.0056493, 0.0009582, 0.0001497, 0.0000206}},
    };
    return rows;
}

Environment reference_environment(double a) {
    if (a == 0.0) return Environment(0.8, {});
    return Environment(0.8, {{a, 0.8}});
}

std::vector<int> quick_criteria() { return {1, 2, 3, 4, 9, 10, 13}; }

std::vector<CriterionResult> run_validation(const ValidationOptions& opts, const std::vector<int>& only,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    Context ctx;
    ctx.opts = opts;
    std::vector<int> selected = only;
    if (selected.empty()) {
        if (opts.quick) {
            selected = quick_criteria();
        } else {
            for (int id = 1; id <= kCriteria; ++id) selected.push_back(id);
        }
    }
    std::vector<CriterionResult> out;
    for (const auto& c : criteria()) {
        if (std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        CriterionResult r;
        r.id = c.id;
        r.title = c.title;
        const auto start = std::chrono::steady_clock::now();
        try {
            const Outcome o = c.run(ctx);
            r.passed = o.passed;
            r.measured = o.measured;
        } catch (const std::exception& e) {
            r.passed = false;
            r.measured = fmt::format("error: {}", e.what());
        }
        r.seconds = elapsed_since(start);
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result(const CriterionResult& r) {
    return fmt::format("{} {:>2} {}: {} ({:.1f} s)", r.passed ? "PASS" : "FAIL", r.id, r.title, r.measured, r.seconds);
}

}  // namespace wflevy
