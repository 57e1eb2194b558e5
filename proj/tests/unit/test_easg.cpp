#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wflevy/easg.hpp"
#include "wflevy/odes.hpp"
#include "wflevy/stats.hpp"
#include "wflevy/stationary.hpp"

using namespace wflevy;

namespace {

const Environment kRef(0.8, {{0.1, 0.8}});

// Dense reference: F over all 2^n subsets, each update written directly as
// a sum or product over subsets rather than over the sparse support.
struct DenseF {
    int n = 0;
    std::vector<double> f;

    static DenseF init(int m, int i) {
        DenseF d{m, std::vector<double>(std::size_t{1} << m, 0.0)};
        d.f[(1u << i) - 1] = 1.0;
        return d;
    }

    void coalesce(int a, int b) {
        if (a > b) std::swap(a, b);
        std::vector<double> g(std::size_t{1} << (n - 1), 0.0);
        for (std::uint32_t B = 0; B < f.size(); ++B) {
            std::uint32_t img = 0;
            int q = 0;
            for (int p = 0; p < n; ++p) {
                if (p == b) continue;
                const bool in = (B >> p) & 1u || (p == a && ((B >> b) & 1u));
                if (in) img |= 1u << q;
                ++q;
            }
            g[img] += f[B];
        }
        f = std::move(g);
        --n;
    }

    void multiple(double S) {
        std::vector<double> g(std::size_t{1} << (2 * n), 0.0);
        for (std::uint32_t A = 1; A < g.size(); ++A) {
            std::uint32_t parent = 0;
            int alpha = 0, beta = 0, gamma = 0;
            for (int p = 0; p < n; ++p) {
                const bool c = (A >> p) & 1u, in = (A >> (n + p)) & 1u;
                if (c || in) parent |= 1u << p;
                alpha += c && !in;
                beta += in && !c;
                gamma += c && in;
            }
            const double c_only = 1.0 + (S < 0.0 ? S : 0.0);
            const double i_only = S > 0.0 ? S : 0.0;
            // std::pow(0, 0) is 1, matching the convention of the update.
            g[A] = f[parent] * std::pow(c_only, alpha) * std::pow(i_only, beta) * std::pow(-S, gamma);
        }
        f = std::move(g);
        n *= 2;
    }

    void single(int line) {
        std::vector<double> g(std::size_t{1} << (n + 1), 0.0);
        for (std::uint32_t A = 1; A < g.size(); ++A) {
            const bool c = (A >> line) & 1u, in = (A >> n) & 1u;
            if (c != in) continue;
            g[A] = f[A & ((1u << n) - 1)];
        }
        f = std::move(g);
        ++n;
    }

    double max_gap(const EASGState& s) const {
        double gap = 0.0;
        for (std::uint32_t A = 0; A < f.size(); ++A) gap = std::max(gap, std::abs(f[A] - s.value(A)));
        return gap;
    }
};

}  // namespace

TEST_CASE("init") {
    const auto s = EASGState::init(1, 1);
    CHECK(s.value(0b1) == 1.0);
    const auto t = EASGState::init(3, 2);
    CHECK(t.value(0b011) == 1.0);
    CHECK(t.entries().size() == 1);
    CHECK(EASGState::init(2, 2).value(0b11) == 1.0);
    CHECK_THROWS_AS(EASGState::init(2, 3), std::invalid_argument);
    CHECK_THROWS_AS(EASGState::init(2, 1, 31), std::invalid_argument);
}

TEST_CASE("coalescence") {
    auto s = EASGState::init(2, 2);
    s.apply_coalescence(0, 1);
    CHECK(s.lines() == 1);
    CHECK(s.value(0b1) == 1.0);

    auto t = EASGState::init(2, 1);
    t.apply_coalescence(0, 1);
    CHECK(t.value(0b1) == 1.0);

    // An entry avoiding both lines is only relabeled.
    auto u = EASGState::init(4, 1);
    u.apply_coalescence(2, 3);
    CHECK(u.value(0b1) == 1.0);
    CHECK(u.entries().size() == 1);
}

TEST_CASE("multiple branching") {
    auto s = EASGState::init(1, 1);
    s.apply_multiple_branching(0.1);
    CHECK(s.value(0b01) == doctest::Approx(1.0));
    CHECK(s.value(0b10) == doctest::Approx(0.1));
    CHECK(s.value(0b11) == doctest::Approx(-0.1));

    auto t = EASGState::init(1, 1);
    t.apply_multiple_branching(-0.3);
    CHECK(t.value(0b01) == doctest::Approx(0.7));
    CHECK(t.value(0b10) == 0.0);
    CHECK(t.value(0b11) == doctest::Approx(0.3));

    for (double S : {0.1, 0.2, 0.3, -0.3, -0.9}) {
        auto u = EASGState::init(1, 1);
        u.apply_multiple_branching(S);
        const auto sums = u.size_sums();
        CHECK(sums[0] == doctest::Approx(1.0 + S).epsilon(1e-14));
        CHECK(sums[1] == doctest::Approx(-S).epsilon(1e-14));
    }
}

TEST_CASE("single branching") {
    auto s = EASGState::init(1, 1);
    s.apply_single_branching(0);
    CHECK(s.value(0b11) == 1.0);
    CHECK(s.value(0b01) == 0.0);
    CHECK(s.value(0b10) == 0.0);

    auto t = EASGState::init(2, 1);
    t.apply_single_branching(1);
    CHECK(t.value(0b001) == 1.0);
    CHECK(t.value(0b011) == 0.0);
    CHECK(t.value(0b101) == 0.0);
    CHECK(t.entries().size() == 1);
}

TEST_CASE("overflow freezes the state") {
    auto s = EASGState::init(3, 1, 5);
    const auto before = s.entries().size();
    CHECK_FALSE(s.apply_multiple_branching(0.2));
    CHECK(s.overflowed());
    CHECK(s.entries().size() == before);
    CHECK(s.log().empty());
    CHECK_FALSE(s.apply_coalescence(0, 1));
}

TEST_CASE("sparse updates match the dense subset formulas") {
    Rng rng(99);
    const Environment env(0.9, {{0.35, 0.6}, {-0.45, 0.7}});
    for (int rep = 0; rep < 200; ++rep) {
        auto s = EASGState::init(2, 1 + rep % 2, 12);
        auto d = DenseF::init(2, 1 + rep % 2);
        for (int e = 0; e < 12; ++e) {
            if (!step(s, env, rng)) break;
            const auto& ev = s.log().back();
            switch (ev.kind) {
                case EventRecord::Kind::coalescence: d.coalesce(ev.a, ev.b); break;
                case EventRecord::Kind::multiple_branching: d.multiple(ev.weight); break;
                case EventRecord::Kind::single_branching: d.single(ev.a); break;
            }
            REQUIRE(d.n == s.lines());
            CHECK(d.max_gap(s) <= 1e-12);
            Rng check_rng(rep);
            CHECK(check_invariants(s, check_rng).ok());
        }
    }
}

TEST_CASE("level sums after one branching from i lines") {
    for (int i = 1; i <= 3; ++i) {
        for (double S : {0.1, 0.3, -0.3, -0.9}) {
            auto s = EASGState::init(i, i);
            s.apply_multiple_branching(S);
            const auto sums = s.size_sums();
            for (int j = i; j <= 2 * i; ++j) {
                const double expect = binomial(i, j - i) * std::pow(1.0 + S, 2 * i - j) * std::pow(-S, j - i);
                CHECK(std::abs(sums[j - 1] - expect) <= 1e-12);
            }
        }
    }
}

TEST_CASE("event rates") {
    // n = 1 without sigma: only multiple branchings, at rate lambda.
    Rng rng(4);
    const Environment jumps_only(0.0, {{0.1, 0.8}});
    MeanAccumulator wait;
    for (int r = 0; r < 20000; ++r) {
        auto s = EASGState::init(1, 1);
        step(s, jumps_only, rng);
        CHECK(s.log().back().kind == EventRecord::Kind::multiple_branching);
        wait.add(s.time());
    }
    CHECK(std::abs(wait.mean() - 1.0 / 0.8) <= 3.0 * wait.std_error());

    // With three lines and no environment only coalescences happen, at rate 6.
    MeanAccumulator w3;
    for (int r = 0; r < 20000; ++r) {
        auto s = EASGState::init(3, 1);
        step(s, Environment(0.0, {}), rng);
        CHECK(s.log().back().kind == EventRecord::Kind::coalescence);
        w3.add(s.time());
    }
    CHECK(std::abs(w3.mean() - 1.0 / 6.0) <= 3.0 * w3.std_error());
}

TEST_CASE("run_to") {
    Rng rng(8);
    const auto s0 = run_to(kRef, 2, 1, 0.0, 20, rng);
    CHECK(s0.log().empty());
    CHECK(s0.value(0b01) == 1.0);

    const auto collapse = run_to(Environment(0.0, {}), 5, 2, 50.0, 20, rng);
    CHECK(collapse.lines() == 1);
    CHECK(collapse.value(0b1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(collapse.time() == 50.0);

    int overflowed = 0;
    for (int r = 0; r < 200; ++r) overflowed += run_to(Environment(0.5, {{0.5, 40.0}}), 1, 1, 2.0, 8, rng).overflowed();
    CHECK(overflowed > 0);
}

TEST_CASE("graph polynomial") {
    auto s = EASGState::init(1, 1);
    s.apply_multiple_branching(0.1);
    CHECK(s.graph_polynomial(0.5) == doctest::Approx(0.525).epsilon(1e-14));
    Rng rng(12);
    for (int r = 0; r < 100; ++r) {
        const auto g = run_to(kRef, 2, 1, 1.5, 20, rng);
        if (g.overflowed()) continue;
        CHECK(std::abs(g.graph_polynomial(1.0) - 1.0) <= 1e-9);
        CHECK(g.graph_polynomial(0.0) == 0.0);
    }
}

TEST_CASE("type assignment") {
    Rng rng(21);
    const auto g = run_to(kRef, 1, 1, 2.0, 20, rng);
    for (int r = 0; r < 50; ++r) {
        CHECK(assign_types(g, 1.0, rng));
        CHECK_FALSE(assign_types(g, 0.0, rng));
    }

    auto one = EASGState::init(1, 1);
    one.apply_multiple_branching(0.1);
    MeanAccumulator hit;
    for (int r = 0; r < 100000; ++r) hit.add(assign_types(one, 0.5, rng) ? 1.0 : 0.0);
    CHECK(std::abs(hit.mean() - 0.525) <= 4.0 * hit.std_error());
}

TEST_CASE("type assignment averages to the graph polynomial on fixed graphs") {
    Rng rng(33);
    const Environment env(0.8, {{0.3, 0.8}, {-0.4, 0.5}});
    for (int gidx = 0; gidx < 50; ++gidx) {
        EASGState g = run_to(env, 2, 1 + gidx % 2, 1.0, 20, rng);
        if (g.overflowed()) continue;
        for (double x : {0.25, 0.5, 0.75}) {
            MeanAccumulator hit;
            for (int r = 0; r < 10000; ++r) hit.add(assign_types(g, x, rng) ? 1.0 : 0.0);
            const double p = g.graph_polynomial(x);
            INFO("graph " << gidx << ", x = " << x);
            CHECK(std::abs(hit.mean() - p) <= 4.0 * std::max(hit.std_error(), std::sqrt(p * (1 - p) / 10000.0)));
        }
    }
}

TEST_CASE("composition over a split time") {
    Rng rng(44);
    int checked = 0;
    while (checked < 100) {
        const auto g = run_to(kRef, 2, 1, 2.0, 20, rng);
        if (g.overflowed() || g.log().empty()) continue;
        CHECK(compose_check(g, 0.0) <= 1e-12);
        CHECK(compose_check(g, g.log().back().time) <= 1e-12);
        CHECK(compose_check(g, std::uniform_real_distribution<double>(0.0, 2.0)(rng)) <= 1e-9);
        ++checked;
    }
}

TEST_CASE("duality coefficient estimates") {
    const auto t0 = estimate_duality_coeffs(kRef, 2, 1, 0.0, 100, 1);
    CHECK(t0.r(2, 1).value == 1.0);
    CHECK(t0.r(1, 1).value == 0.0);
    CHECK(t0.r(2, 2).value == 0.0);

    const auto collapse = estimate_duality_coeffs(Environment(0.0, {}), 2, 1, 30.0, 1000, 2);
    CHECK(collapse.r(1, 1).value == doctest::Approx(1.0).epsilon(1e-12));

    const auto mc = estimate_duality_coeffs(kRef, 1, 1, 1.0, 40000, 3);
    const auto ode = integrate_r(kRef, 32, 1.0);
    CHECK(mc.overflow_fraction() < 1e-3);
    for (int k = 1; k <= 4; ++k) {
        for (int j = 1; j <= k; ++j) {
            INFO("k = " << k << ", j = " << j);
            CHECK(std::abs(mc.r(k, j).value - ode(k, j)) <= 3.0 * mc.r(k, j).std_error + 1e-12);
        }
    }
}

TEST_CASE("same seed, same estimates, any thread count") {
    const auto a = estimate_duality_coeffs(kRef, 1, 1, 1.0, 2000, 9, 1);
    const auto b = estimate_duality_coeffs(kRef, 1, 1, 1.0, 2000, 9, 3);
    for (std::size_t n = 0; n < a.R.size(); ++n) CHECK(a.R[n].value == b.R[n].value);
}

TEST_CASE("event log format") {
    auto s = EASGState::init(2, 1);
    s.set_time(0.5);
    s.apply_coalescence(0, 1);
    s.set_time(0.75);
    s.apply_multiple_branching(0.25);
    CHECK(format_event_log(s) == "0.5 coalescence 0,1 0\n0.75 multiple_branching - 0.25\n");
}
