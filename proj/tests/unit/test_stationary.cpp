#include <doctest.h>

#include <cmath>
#include <numeric>

#include "wflevy/stationary.hpp"

using namespace wflevy;

namespace {

const Environment kRef(0.8, {{0.1, 0.8}});
const Environment kNone(0.0, {});

}  // namespace

TEST_CASE("unnormalized ratios") {
    const auto r0 = unnormalized_ratios(kNone, 5);
    CHECK(r0[0] == 1.0);
    for (int k = 1; k < 5; ++k) CHECK(r0[k] == 0.0);

    const auto r = unnormalized_ratios(kRef, 8);
    CHECK(r[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(r[2] == doctest::Approx(0.32).epsilon(1e-15));
}

TEST_CASE("computed law satisfies the recursion") {
    for (const auto& env : {kRef, Environment(2.0, {{-0.5, 1.0}, {0.7, 2.0}}), Environment(0.3, {})}) {
        const auto pi = compute_pi_auto(env);
        const double sigma = env.sigma(), lambda = env.total_mass();
        for (int k = 2; k <= pi.cutoff; ++k) {
            double s = 0.0;
            for (int l = (k + 1) / 2; l <= k - 1; ++l) s += pi(l);
            const double rhs = sigma / k * pi(k - 1) + lambda / (static_cast<double>(k) * (k - 1)) * s;
            if (rhs == 0.0)
                CHECK(pi(k) == 0.0);
            else if (rhs > 1e-280)
                CHECK(std::abs(pi(k) - rhs) <= 1e-12 * rhs);
        }
    }
}

TEST_CASE("tail bound") {
    CHECK(tail_bound(kNone, 2) == 0.0);
    CHECK(tail_bound(kNone, 50) == 0.0);
    for (const auto& env : {kRef, Environment(5.0, {{-0.9, 5.0}})}) CHECK(tail_bound(env, 1) <= 1.0);

    // Non-increasing from k = 4 on.
    for (const auto& env : {kRef, Environment(3.0, {{0.5, 2.0}})}) {
        double prev = tail_bound(env, 4);
        for (int k = 5; k <= 400; ++k) {
            const double t = tail_bound(env, k);
            CHECK(t <= prev);
            prev = t;
        }
    }

    // Dominates the tail of a much longer computed law.
    const auto pi = compute_pi(kRef, 512);
    for (int k : {4, 8, 16, 32, 64}) {
        double exact = 0.0;
        for (int j = k; j <= 512; ++j) exact += pi(j);
        CHECK(tail_bound(kRef, k) >= exact);
    }
}

TEST_CASE("compute_pi") {
    const auto trivial = compute_pi(kNone, 4);
    CHECK(trivial(1) == 1.0);
    CHECK(trivial(2) == 0.0);
    CHECK(trivial.pi1_bracket.width() == 0.0);

    const auto pi = compute_pi(kRef, 64);
    CHECK(pi.pi.size() == 64);
    CHECK(pi(2) / pi(1) == doctest::Approx(0.8).epsilon(1e-15));
    const double total = std::accumulate(pi.pi.begin(), pi.pi.end(), 0.0);
    CHECK(total <= 1.0 + 1e-15);
    CHECK(total >= 1.0 - 2.0 * pi.tail_upper);
    CHECK(pi.pi1_bracket.lower <= pi.pi1_bracket.upper);

    CHECK_THROWS_AS(compute_pi(Environment(3.0, {{0.5, 3.0}}), 4), CutoffTooSmall);
}

TEST_CASE("occupation fractions match the stationary law") {
    LineCountOptions opts;
    opts.horizon = 20000.0;
    opts.seed = 11;

    const auto none = simulate_line_count(kNone, opts);
    CHECK(none.at(1) == 1.0);

    const auto occ = simulate_line_count(kRef, opts);
    const auto pi = compute_pi_auto(kRef);
    CHECK(pi(1) >= pi.pi1_bracket.lower);
    CHECK(occ.at(1) >= pi.pi1_bracket.lower - 3.0 * occ.se(1));
    CHECK(occ.at(1) <= pi.pi1_bracket.upper + 3.0 * occ.se(1));
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(occ.at(k) - pi(k)) <= 3.0 * occ.se(k));
    // Ratio at k = 2: delta method on fraction(2) / fraction(1).
    const double ratio = occ.at(2) / occ.at(1);
    const double ratio_se = ratio * std::hypot(occ.se(2) / occ.at(2), occ.se(1) / occ.at(1));
    CHECK(std::abs(ratio - 0.8) <= 3.0 * ratio_se);

    // Pure birth-death chain against its recursion.
    const Environment bd(0.8, {});
    const auto occ_bd = simulate_line_count(bd, opts);
    const auto pi_bd = compute_pi_auto(bd);
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(occ_bd.at(k) - pi_bd(k)) <= 3.0 * occ_bd.se(k));
}

TEST_CASE("transient line-count distribution starts at its initial state") {
    const auto p = line_count_distribution(kRef, 3, 0.0, 100, 1);
    CHECK(p[2].value == 1.0);
    double total = 0.0;
    for (const auto& e : line_count_distribution(kRef, 1, 0.5, 2000, 3)) total += e.value;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Siegmund dual absorption") {
    CHECK(siegmund_absorption(kRef, 1, 64, 100, 1).estimate == 1.0);
    CHECK(siegmund_absorption(kNone, 2, 64, 100, 1).estimate == 0.0);

    const auto pi = compute_pi_auto(kRef);
    for (int d = 2; d <= 4; ++d) {
        const auto est = siegmund_absorption(kRef, d, 256, 20000, 5 + d);
        CHECK(std::abs(est.estimate - pi.tail_from(d)) <= 3.0 * est.std_error + est.cap_bias_bound);
    }
    const auto two = siegmund_absorption(kRef, 2, 256, 20000, 3);
    CHECK(std::abs(two.estimate - (1.0 - pi(1))) <= 3.0 * two.std_error + two.cap_bias_bound);
}
