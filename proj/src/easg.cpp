#include "wflevy/easg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "wflevy/odes.hpp"

namespace wflevy {

namespace {

using Entry = EASGState::Entry;

constexpr std::uint32_t bit(int p) { return std::uint32_t{1} << p; }

void sort_and_combine(std::vector<Entry>& f) {
    std::sort(f.begin(), f.end(), [](const Entry& x, const Entry& y) { return x.mask < y.mask; });
    std::size_t out = 0;
    for (std::size_t r = 0; r < f.size();) {
        Entry e = f[r++];
        while (r < f.size() && f[r].mask == e.mask) e.value += f[r++].value;
        if (e.value != 0.0) f[out++] = e;
    }
    f.resize(out);
}

// Waiting time to the next event and the event sampler, split so that
// run_to can discard an event that would land after the horizon.
double total_rate(const EASGState& s, const Environment& env) {
    const double n = s.lines();
    return n * (n - 1.0) + n * env.sigma() + env.total_mass();
}

bool fire(EASGState& s, const Environment& env, Rng& rng) {
    const int n = s.lines();
    const double down = static_cast<double>(n) * (n - 1);
    const double single = n * env.sigma();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) * total_rate(s, env);
    if (u < down) {
        std::uniform_int_distribution<int> first(0, n - 1), second(0, n - 2);
        const int a = first(rng);
        int b = second(rng);
        if (b >= a) ++b;
        return s.apply_coalescence(a, b);
    }
    if (u < down + single) {
        std::uniform_int_distribution<int> line(0, n - 1);
        return s.apply_single_branching(line(rng));
    }
    const auto& atoms = env.atoms();
    double v = unif(rng) * env.total_mass();
    std::size_t pick = 0;
    while (pick + 1 < atoms.size() && v >= atoms[pick].w) v -= atoms[pick++].w;
    return s.apply_multiple_branching(atoms[pick].z);
}

}  // namespace

const char* kind_name(EventRecord::Kind kind) {
    switch (kind) {
        case EventRecord::Kind::coalescence: return "coalescence";
        case EventRecord::Kind::multiple_branching: return "multiple_branching";
        case EventRecord::Kind::single_branching: return "single_branching";
    }
    return "unknown";
}

EASGState EASGState::init(int m, int i, int cap) {
    if (cap < 1 || cap > 30) throw std::invalid_argument(fmt::format("cap={} outside 1..30", cap));
    if (i < 1 || i > m || m > cap)
        throw std::invalid_argument(fmt::format("init requires 1 <= i <= m <= cap, got i={} m={} cap={}", i, m, cap));
    EASGState s;
    s.n_ = m;
    s.m_ = m;
    s.i_ = i;
    s.cap_ = cap;
    s.f_.push_back({bit(i) - 1, 1.0});
    for (int p = 0; p < m; ++p) s.ids_.push_back(s.next_id_++);
    return s;
}

double EASGState::value(std::uint32_t mask) const {
    auto it = std::lower_bound(f_.begin(), f_.end(), mask, [](const Entry& e, std::uint32_t m) { return e.mask < m; });
    return (it != f_.end() && it->mask == mask) ? it->value : 0.0;
}

void EASGState::record(EventRecord e) {
    e.time = t_;
    log_.push_back(e);
}

bool EASGState::apply_coalescence(int a, int b) {
    if (overflowed_) return false;
    if (a == b || a < 0 || b < 0 || a >= n_ || b >= n_)
        throw std::invalid_argument(fmt::format("cannot coalesce lines {} and {} of {}", a, b, n_));
    if (a > b) std::swap(a, b);
    record({0.0, EventRecord::Kind::coalescence, n_, a, b, 0.0});
    const std::uint32_t low = bit(b) - 1;
    for (auto& e : f_) {
        const bool had_b = e.mask & bit(b);
        std::uint32_t m = (e.mask & low) | ((e.mask >> (b + 1)) << b);
        if (had_b) m |= bit(a);
        e.mask = m;
    }
    sort_and_combine(f_);
    ids_.erase(ids_.begin() + b);
    --n_;
    return true;
}

bool EASGState::apply_multiple_branching(double S) {
    if (overflowed_) return false;
    if (!(S > -1.0 && S < 1.0) || S == 0.0)
        throw std::invalid_argument(fmt::format("multiple branching weight {} outside (-1, 1) \\ {{0}}", S));
    if (2 * n_ > cap_) {
        overflowed_ = true;
        return false;
    }
    record({0.0, EventRecord::Kind::multiple_branching, n_, -1, -1, S});
    const double c_only = S < 0.0 ? 1.0 + S : 1.0;
    const double i_only = S > 0.0 ? S : 0.0;
    const double both = -S;
    std::vector<Entry> next;
    std::vector<Entry> partial;
    for (const auto& e : f_) {
        partial.assign(1, {0, e.value});
        for (std::uint32_t rest = e.mask; rest; rest &= rest - 1) {
            const int p = std::countr_zero(rest);
            const std::uint32_t c = bit(p), in = bit(n_ + p);
            const std::size_t width = partial.size();
            for (std::size_t r = 0; r < width; ++r) {
                const Entry base = partial[r];
                partial[r] = {base.mask | c, base.value * c_only};
                if (i_only != 0.0) partial.push_back({base.mask | in, base.value * i_only});
                partial.push_back({base.mask | c | in, base.value * both});
            }
        }
        next.insert(next.end(), partial.begin(), partial.end());
    }
    f_ = std::move(next);
    sort_and_combine(f_);
    for (int p = 0; p < n_; ++p) ids_.push_back(next_id_++);
    n_ *= 2;
    return true;
}

bool EASGState::apply_single_branching(int line) {
    if (overflowed_) return false;
    if (line < 0 || line >= n_) throw std::invalid_argument(fmt::format("no line {} among {}", line, n_));
    if (n_ + 1 > cap_) {
        overflowed_ = true;
        return false;
    }
    record({0.0, EventRecord::Kind::single_branching, n_, line, -1, -1.0});
    // Sets holding exactly one son vanish, so only "both" and "neither" survive.
    for (auto& e : f_)
        if (e.mask & bit(line)) e.mask |= bit(n_);
    sort_and_combine(f_);
    ids_.push_back(next_id_++);
    ++n_;
    return true;
}

bool EASGState::apply(const EventRecord& e) {
    if (e.lines_before != n_)
        throw std::invalid_argument(
            fmt::format("event expects {} lines but the state has {}", e.lines_before, n_));
    t_ = e.time;
    switch (e.kind) {
        case EventRecord::Kind::coalescence: return apply_coalescence(e.a, e.b);
        case EventRecord::Kind::multiple_branching: return apply_multiple_branching(e.weight);
        case EventRecord::Kind::single_branching: return apply_single_branching(e.a);
    }
    return false;
}

std::vector<double> EASGState::size_sums() const {
    std::vector<double> s(n_, 0.0);
    for (const auto& e : f_) s[std::popcount(e.mask) - 1] += e.value;
    return s;
}

double EASGState::graph_polynomial(double x) const {
    const auto s = size_sums();
    double p = 0.0;
    for (int j = n_; j >= 1; --j) p = (p + s[j - 1]) * x;
    return p;
}

bool step(EASGState& state, const Environment& env, Rng& rng) {
    if (state.overflowed()) return false;
    const double rate = total_rate(state, env);
    if (rate <= 0.0) return false;
    std::exponential_distribution<double> wait(rate);
    state.set_time(state.time() + wait(rng));
    return fire(state, env, rng);
}

EASGState run_to(const Environment& env, int m, int i, double T, int cap, Rng& rng) {
    if (T < 0.0) throw std::invalid_argument("run_to requires T >= 0");
    EASGState s = EASGState::init(m, i, cap);
    for (;;) {
        const double rate = total_rate(s, env);
        if (rate <= 0.0) break;
        const double next = s.time() + std::exponential_distribution<double>(rate)(rng);
        if (next > T) break;
        s.set_time(next);
        if (!fire(s, env, rng)) break;
    }
    if (!s.overflowed()) s.set_time(T);
    return s;
}

bool assign_types(const EASGState& state, double x, Rng& rng) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(fmt::format("x={} outside [0, 1]", x));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // 0 is type 0, 1 is type 1.
    std::vector<unsigned char> type(state.lines());
    for (auto& t : type) t = unif(rng) < x ? 0 : 1;
    const auto& log = state.log();
    for (auto it = log.rbegin(); it != log.rend(); ++it) {
        const EventRecord& e = *it;
        const int n = e.lines_before;
        switch (e.kind) {
            case EventRecord::Kind::coalescence:
                type.insert(type.begin() + e.b, type[e.a]);
                break;
            case EventRecord::Kind::multiple_branching: {
                const unsigned char favoured = e.weight > 0.0 ? 0 : 1;
                const double p_real = std::abs(e.weight);
                for (int p = 0; p < n; ++p) {
                    const bool real = unif(rng) < p_real;
                    if (real && type[n + p] == favoured) type[p] = favoured;
                }
                type.resize(n);
                break;
            }
            case EventRecord::Kind::single_branching:
                // Weight -1: always real, favours type 1.
                if (type[n] == 1) type[e.a] = 1;
                type.resize(n);
                break;
        }
    }
    for (int p = 0; p < state.initial_block(); ++p)
        if (type[p] != 0) return false;
    return true;
}

InvariantReport check_invariants(const EASGState& state, Rng& rng, int subsets) {
    InvariantReport r;
    double total = 0.0;
    for (const auto& e : state.entries()) {
        total += e.value;
        const int k = std::popcount(e.mask);
        r.max_bound_ratio = std::max(r.max_bound_ratio, std::abs(e.value) / std::pow(k, k));
    }
    r.sum_error = std::abs(total - 1.0);
    const int n = state.lines();
    const std::uint32_t full = n >= 32 ? ~std::uint32_t{0} : bit(n) - 1;
    std::uniform_int_distribution<std::uint32_t> draw(0, full);
    auto subset_sum = [&](std::uint32_t B) {
        double s = 0.0;
        for (const auto& e : state.entries())
            if ((e.mask & ~B) == 0) s += e.value;
        r.min_subset_sum = std::min(r.min_subset_sum, s);
        r.max_subset_sum = std::max(r.max_subset_sum, s);
    };
    subset_sum(full);
    for (int t = 0; t < subsets; ++t) subset_sum(draw(rng));
    return r;
}

double compose_check(const EASGState& state, double split_time) {
    EASGState prefix = EASGState::init(state.m_, state.i_, state.cap_);
    const auto& log = state.log();
    std::size_t split = 0;
    while (split < log.size() && log[split].time <= split_time) prefix.apply(log[split++]);

    std::map<std::uint32_t, double> composite;
    for (const auto& b : prefix.f_) {
        EASGState branch = prefix;
        branch.f_.assign(1, {b.mask, 1.0});
        for (std::size_t e = split; e < log.size(); ++e) branch.apply(log[e]);
        for (const auto& a : branch.f_) composite[a.mask] += b.value * a.value;
    }
    for (const auto& a : state.f_) composite[a.mask] -= a.value;
    double gap = 0.0;
    for (const auto& [mask, diff] : composite) gap = std::max(gap, std::abs(diff));
    return gap;
}

Estimate DualityEstimate::r(int k, int j) const {
    if (k < 1 || k > cap || j < 1 || j > k) return {};
    return R[CoefficientGrid::index(k, j)];
}

Estimate DualityEstimate::q(int j) const {
    if (j < 1 || j > cap) return {};
    return Q[j - 1];
}

DualityEstimate estimate_duality_coeffs(const Environment& env, int m, int i, double T, std::int64_t n_samples,
                                        std::uint64_t seed, int threads, int cap) {
    if (n_samples < 1) throw std::invalid_argument("estimate_duality_coeffs requires n_samples >= 1");
    EASGState::init(m, i, cap);  // validates the shape
    const std::size_t lattice = CoefficientGrid::lattice_size(cap);

    struct Partial {
        std::vector<double> r_sum, r_sq, q_sum, q_sq;
        std::int64_t used = 0;
        std::int64_t overflowed = 0;
    };
    std::vector<Partial> parts(kDefaultStreams);
    for_each_stream(kDefaultStreams, threads, [&](int s) {
        Partial& p = parts[s];
        p.r_sum.assign(lattice, 0.0);
        p.r_sq.assign(lattice, 0.0);
        p.q_sum.assign(cap, 0.0);
        p.q_sq.assign(cap, 0.0);
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(s));
        const std::int64_t runs = n_samples / kDefaultStreams + (s < n_samples % kDefaultStreams ? 1 : 0);
        for (std::int64_t r = 0; r < runs; ++r) {
            const EASGState st = run_to(env, m, i, T, cap, rng);
            if (st.overflowed()) {
                ++p.overflowed;
                continue;
            }
            ++p.used;
            const auto sums = st.size_sums();
            const int k = st.lines();
            for (int j = 1; j <= k; ++j) {
                const double v = sums[j - 1];
                p.r_sum[CoefficientGrid::index(k, j)] += v;
                p.r_sq[CoefficientGrid::index(k, j)] += v * v;
                p.q_sum[j - 1] += v;
                p.q_sq[j - 1] += v * v;
            }
        }
    });

    DualityEstimate out;
    out.m = m;
    out.i = i;
    out.T = T;
    out.cap = cap;
    out.runs = n_samples;
    std::vector<double> r_sum(lattice, 0.0), r_sq(lattice, 0.0), q_sum(cap, 0.0), q_sq(cap, 0.0);
    std::int64_t used = 0;
    for (const auto& p : parts) {
        used += p.used;
        out.overflowed += p.overflowed;
        for (std::size_t n = 0; n < lattice; ++n) {
            r_sum[n] += p.r_sum[n];
            r_sq[n] += p.r_sq[n];
        }
        for (int j = 0; j < cap; ++j) {
            q_sum[j] += p.q_sum[j];
            q_sq[j] += p.q_sq[j];
        }
    }
    auto summarize = [used](double s, double sq) {
        if (used == 0) return Estimate{};
        const double N = static_cast<double>(used);
        const double mean = s / N;
        const double var = used > 1 ? std::max(0.0, (sq - N * mean * mean) / (N - 1.0)) : 0.0;
        return Estimate{mean, std::sqrt(var / N)};
    };
    out.R.resize(lattice);
    for (std::size_t n = 0; n < lattice; ++n) out.R[n] = summarize(r_sum[n], r_sq[n]);
    out.Q.resize(cap);
    for (int j = 0; j < cap; ++j) out.Q[j] = summarize(q_sum[j], q_sq[j]);
    return out;
}

std::string format_event_log(const EASGState& state) {
    std::string out;
    for (const auto& e : state.log()) {
        std::string args = "-";
        if (e.kind == EventRecord::Kind::coalescence)
            args = fmt::format("{},{}", e.a, e.b);
        else if (e.kind == EventRecord::Kind::single_branching)
            args = fmt::format("{}", e.a);
        out += fmt::format("{:.9g} {} {} {:.9g}\n", e.time, kind_name(e.kind), args, e.weight);
    }
    return out;
}

}  // namespace wflevy
