#include "wflevy/sde.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace wflevy {

namespace {

// Advances x by Euler steps over `duration`, stopping early once x leaves
// (lo, hi). Returns the time actually simulated.
double euler(double& x, double duration, double sigma, double dt, Rng& rng, double lo, double hi,
             std::normal_distribution<double>& normal) {
    double elapsed = 0.0;
    while (elapsed < duration) {
        if (x <= lo || x >= hi) break;
        const double h = std::min(dt, duration - elapsed);
        const double v = x * (1.0 - x);
        x += -sigma * v * h + std::sqrt(2.0 * v * h) * normal(rng);
        x = std::clamp(x, 0.0, 1.0);
        elapsed += h;
    }
    return elapsed;
}

std::int64_t stream_share(std::int64_t n, int s) {
    return n / kDefaultStreams + (s < n % kDefaultStreams ? 1 : 0);
}

}  // namespace

void PathConfig::validate() const {
    if (!(x0 >= 0.0 && x0 <= 1.0)) throw std::invalid_argument(fmt::format("x0={} outside [0, 1]", x0));
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(T_max > 0.0)) throw std::invalid_argument("T_max must be positive");
    if (!(boundary_tol > 0.0 && boundary_tol < 0.5)) throw std::invalid_argument("boundary_tol must lie in (0, 0.5)");
}

JumpSchedule sample_jump_schedule(const Environment& env, double T_max, Rng& rng) {
    if (!(T_max > 0.0)) throw std::invalid_argument("T_max must be positive");
    JumpSchedule out;
    const double lambda = env.total_mass();
    if (lambda <= 0.0) return out;
    const auto count = std::poisson_distribution<long long>(lambda * T_max)(rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    out.resize(count);
    for (auto& j : out) j.time = unif(rng) * T_max;
    std::sort(out.begin(), out.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });
    const auto& atoms = env.atoms();
    for (auto& j : out) {
        double v = unif(rng) * lambda;
        std::size_t pick = 0;
        while (pick + 1 < atoms.size() && v >= atoms[pick].w) v -= atoms[pick++].w;
        j.z = atoms[pick].z;
    }
    return out;
}

double evolve_between_jumps(double x, double duration, double sigma, double dt, Rng& rng) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(fmt::format("x={} outside [0, 1]", x));
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    std::normal_distribution<double> normal(0.0, 1.0);
    euler(x, duration, sigma, dt, rng, 0.0, 1.0, normal);
    return x;
}

FixationEstimate estimate_fixation(const Environment& env, std::int64_t n_paths, const PathConfig& cfg, int threads) {
    cfg.validate();
    if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
    const double lo = cfg.boundary_tol;
    const double hi = 1.0 - cfg.boundary_tol;
    std::vector<std::int64_t> ones(kDefaultStreams, 0), zeros(kDefaultStreams, 0);
    for_each_stream(kDefaultStreams, threads, [&](int s) {
        Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(s));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::int64_t p = 0, n = stream_share(n_paths, s); p < n; ++p) {
            const JumpSchedule jumps = sample_jump_schedule(env, cfg.T_max, rng);
            double x = cfg.x0;
            double t = 0.0;
            for (const Jump& j : jumps) {
                t += euler(x, j.time - t, env.sigma(), cfg.dt, rng, lo, hi, normal);
                if (x <= lo || x >= hi) break;
                t = j.time;
                x = apply_jump(x, j.z);
            }
            if (x > lo && x < hi) euler(x, cfg.T_max - t, env.sigma(), cfg.dt, rng, lo, hi, normal);
            if (x >= hi)
                ++ones[s];
            else if (x <= lo)
                ++zeros[s];
        }
    });
    FixationEstimate out;
    out.paths = n_paths;
    for (int s = 0; s < kDefaultStreams; ++s) {
        out.fixed_one += ones[s];
        out.fixed_zero += zeros[s];
    }
    const std::int64_t decided = out.fixed_one + out.fixed_zero;
    out.undecided_fraction = static_cast<double>(n_paths - decided) / static_cast<double>(n_paths);
    if (decided > 0) {
        out.h = static_cast<double>(out.fixed_one) / static_cast<double>(decided);
        out.std_error = std::sqrt(out.h * (1.0 - out.h) / static_cast<double>(decided));
    }
    return out;
}

std::vector<std::vector<Estimate>> estimate_moments(const Environment& env, const std::vector<int>& powers,
                                                    const std::vector<double>& times, std::int64_t n_paths,
                                                    const PathConfig& cfg, int threads) {
    cfg.validate();
    if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
    for (int l : powers)
        if (l < 1) throw std::invalid_argument("moment powers must be >= 1");
    for (double T : times)
        if (!(T >= 0.0 && T <= cfg.T_max)) throw std::invalid_argument(fmt::format("time {} outside [0, T_max]", T));

    std::vector<double> order(times);
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    const double horizon = order.empty() ? 0.0 : order.back();

    const std::size_t cells = powers.size() * order.size();
    std::vector<std::vector<MeanAccumulator>> acc(kDefaultStreams, std::vector<MeanAccumulator>(cells));
    for_each_stream(kDefaultStreams, threads, [&](int s) {
        Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(s));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::int64_t p = 0, n = stream_share(n_paths, s); p < n; ++p) {
            JumpSchedule jumps;
            if (horizon > 0.0) jumps = sample_jump_schedule(env, horizon, rng);
            std::size_t next_jump = 0;
            double x = cfg.x0;
            double t = 0.0;
            for (std::size_t c = 0; c < order.size(); ++c) {
                const double until = order[c];
                while (next_jump < jumps.size() && jumps[next_jump].time <= until) {
                    euler(x, jumps[next_jump].time - t, env.sigma(), cfg.dt, rng, 0.0, 1.0, normal);
                    t = jumps[next_jump].time;
                    x = apply_jump(x, jumps[next_jump].z);
                    ++next_jump;
                }
                euler(x, until - t, env.sigma(), cfg.dt, rng, 0.0, 1.0, normal);
                t = until;
                for (std::size_t a = 0; a < powers.size(); ++a)
                    acc[s][a * order.size() + c].add(std::pow(x, powers[a]));
            }
        }
    });

    std::vector<MeanAccumulator> total(cells);
    for (const auto& part : acc)
        for (std::size_t n = 0; n < cells; ++n) total[n].merge(part[n]);
    std::vector<std::vector<Estimate>> out(powers.size(), std::vector<Estimate>(times.size()));
    for (std::size_t a = 0; a < powers.size(); ++a) {
        for (std::size_t b = 0; b < times.size(); ++b) {
            const auto c = static_cast<std::size_t>(std::lower_bound(order.begin(), order.end(), times[b]) - order.begin());
            const auto& m = total[a * order.size() + c];
            out[a][b] = Estimate{m.mean(), m.std_error()};
        }
    }
    return out;
}

Estimate estimate_moment(const Environment& env, int l, double T, std::int64_t n_paths, const PathConfig& cfg,
                         int threads) {
    return estimate_moments(env, {l}, {T}, n_paths, cfg, threads)[0][0];
}

std::vector<PathPoint> sample_path(const Environment& env, double T, int stride, const PathConfig& cfg) {
    cfg.validate();
    if (!(T > 0.0) || stride < 1) throw std::invalid_argument("sample_path requires T > 0 and stride >= 1");
    Rng rng = make_stream(cfg.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const JumpSchedule jumps = sample_jump_schedule(env, T, rng);
    std::vector<PathPoint> out{{0.0, cfg.x0}};
    double x = cfg.x0;
    double t = 0.0;
    std::size_t next_jump = 0;
    long long steps = 0;
    while (t < T) {
        const double until = next_jump < jumps.size() ? jumps[next_jump].time : T;
        while (t < until) {
            const double h = std::min(cfg.dt, until - t);
            euler(x, h, env.sigma(), cfg.dt, rng, 0.0, 1.0, normal);
            t = (h == until - t) ? until : t + h;
            if (++steps % stride == 0 || t >= T) out.push_back({t, x});
        }
        if (next_jump < jumps.size()) {
            x = apply_jump(x, jumps[next_jump++].z);
            out.push_back({t, x});
        }
    }
    return out;
}

}  // namespace wflevy
