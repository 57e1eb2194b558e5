#include "wflevy/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "wflevy/random.hpp"

namespace wflevy {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

// Samples assigned to stream s when n samples are spread over `streams`.
std::int64_t stream_share(std::int64_t n, int streams, int s) {
    return n / streams + (s < n % streams ? 1 : 0);
}

// exp(n log(sigma+lambda) - (log 2 / 2) n (n - 1)); 0 when sigma+lambda = 0.
double dyadic_factor(double growth, int n) {
    if (growth <= 0.0) return 0.0;
    return std::exp(std::log(growth) * n - 0.5 * kLog2 * n * (n - 1.0));
}

}  // namespace

double StationaryDistribution::tail_from(int k) const {
    double s = tail_upper;
    for (int j = std::max(k, 1); j <= cutoff; ++j) s += pi[j - 1];
    return std::min(1.0, s);
}

std::vector<double> unnormalized_ratios(const Environment& env, int K) {
    if (K < 1) throw std::invalid_argument("unnormalized_ratios requires K >= 1");
    const double sigma = env.sigma();
    const double lambda = env.total_mass();
    std::vector<double> r(K, 0.0);
    r[0] = 1.0;
    for (int k = 2; k <= K; ++k) {
        const int lo = (k + 1) / 2;
        double window = 0.0;
        // Summed directly: r spans many orders of magnitude, so a prefix-sum
        // difference would cancel catastrophically.
        for (int l = lo; l <= k - 1; ++l) window += r[l - 1];
        r[k - 1] = sigma / k * r[k - 2] + lambda / (static_cast<double>(k) * (k - 1)) * window;
    }
    return r;
}

double pi_term_bound(const Environment& env, long long j) {
    const double growth = env.sigma() + env.total_mass();
    if (j <= 1) return 1.0;
    if (j <= 3) return std::min(1.0, growth / static_cast<double>(j));
    const double c = env.sigma() * growth + env.total_mass();
    const int n = static_cast<int>(std::floor(std::log2(static_cast<double>(j)))) - 2;
    const double jj = static_cast<double>(j);
    return std::min(1.0, c / (jj * (jj - 1.0)) * dyadic_factor(growth, n));
}

double tail_bound(const Environment& env, long long k) {
    k = std::max<long long>(k, 1);
    const double growth = env.sigma() + env.total_mass();
    if (growth == 0.0) return k <= 1 ? 1.0 : 0.0;

    double total = 0.0;
    long long j = k;
    for (; j < 4; ++j) total += pi_term_bound(env, j);

    const double c = env.sigma() * growth + env.total_mass();
    double previous_block = std::numeric_limits<double>::infinity();
    for (int guard = 0; guard < 64; ++guard) {
        const int p = static_cast<int>(std::floor(std::log2(static_cast<double>(j))));
        if (p >= 61) return 1.0;
        const long long block_end = (1LL << (p + 1)) - 1;
        // sum_{i=j}^{b} 1/(i(i-1)) = 1/(j-1) - 1/b
        const double telescoped = 1.0 / static_cast<double>(j - 1) - 1.0 / static_cast<double>(block_end);
        const double block = c * dyadic_factor(growth, p - 2) * telescoped;
        total += block;
        if (total >= 1.0) return 1.0;
        if (block < 1e-18 * total && block < previous_block) {
            total += 2.0 * block;
            return std::min(1.0, total);
        }
        previous_block = block;
        j = block_end + 1;
    }
    return 1.0;
}

StationaryDistribution compute_pi(const Environment& env, int K) {
    if (K < 1) throw std::invalid_argument("compute_pi requires K >= 1");
    const double eps = tail_bound(env, static_cast<long long>(K) + 1);
    if (eps >= 0.5)
        throw CutoffTooSmall(fmt::format(
            "cutoff K={} too small: certified tail bound {:.3g} >= 0.5; increase K", K, eps));
    StationaryDistribution out;
    out.env = env;
    out.cutoff = K;
    out.tail_upper = eps;
    auto r = unnormalized_ratios(env, K);
    const double S = std::accumulate(r.begin(), r.end(), 0.0);
    out.pi1_bracket = Bracket{(1.0 - eps) / S, 1.0 / S};
    const double scale = out.pi1_bracket.midpoint();
    out.pi.resize(K);
    for (int k = 0; k < K; ++k) out.pi[k] = r[k] * scale;
    return out;
}

StationaryDistribution compute_pi_auto(const Environment& env, double target_tail) {
    int K = 64;
    while (K < (1 << 16) && tail_bound(env, static_cast<long long>(K) + 1) >= target_tail) K *= 2;
    return compute_pi(env, K);
}

OccupationEstimate simulate_line_count(const Environment& env, const LineCountOptions& opts) {
    if (!(opts.horizon > opts.burn_in) || opts.burn_in < 0.0)
        throw std::invalid_argument("simulate_line_count requires horizon > burn_in >= 0");
    if (opts.batches < 2) throw std::invalid_argument("simulate_line_count requires at least 2 batches");
    const double sigma = env.sigma();
    const double lambda = env.total_mass();
    const double window = opts.horizon - opts.burn_in;
    const double batch_len = window / opts.batches;

    Rng rng = make_stream(opts.seed, 0);
    std::exponential_distribution<double> unit_exp(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<std::vector<double>> batch_occ(opts.batches);
    std::vector<double> occ;
    auto record = [&](int n, double a, double b) {
        a = std::max(a, opts.burn_in);
        b = std::min(b, opts.horizon);
        if (b <= a) return;
        if (static_cast<int>(occ.size()) < n) {
            occ.resize(n, 0.0);
            for (auto& v : batch_occ) v.resize(n, 0.0);
        }
        occ[n - 1] += b - a;
        int bi = std::min(opts.batches - 1, static_cast<int>((a - opts.burn_in) / batch_len));
        while (a < b) {
            const double bend = (bi == opts.batches - 1) ? opts.horizon : opts.burn_in + (bi + 1) * batch_len;
            const double seg_end = std::min(b, bend);
            batch_occ[bi][n - 1] += seg_end - a;
            a = seg_end;
            ++bi;
            if (bi >= opts.batches) break;
        }
    };

    OccupationEstimate est;
    int n = 1;
    double t = 0.0;
    while (t < opts.horizon) {
        const double down = static_cast<double>(n) * (n - 1);
        const double up = n * sigma;
        const double total = down + up + lambda;
        const double wait = total > 0.0 ? unit_exp(rng) / total : std::numeric_limits<double>::infinity();
        record(n, t, t + wait);
        t += wait;
        if (t >= opts.horizon) break;
        ++est.events;
        const double u = unif(rng) * total;
        if (u < down)
            n -= 1;
        else if (u < down + up)
            n += 1;
        else
            n *= 2;
        est.max_state = std::max(est.max_state, n);
    }

    est.observed_time = window;
    const int states = static_cast<int>(occ.size());
    est.fraction.assign(states, 0.0);
    est.std_error.assign(states, 0.0);
    for (int k = 0; k < states; ++k) {
        est.fraction[k] = occ[k] / window;
        MeanAccumulator acc;
        for (int b = 0; b < opts.batches; ++b) {
            const double len = (b == opts.batches - 1) ? window - batch_len * (opts.batches - 1) : batch_len;
            acc.add(batch_occ[b][k] / len);
        }
        est.std_error[k] = acc.std_error();
    }
    return est;
}

std::vector<Estimate> line_count_distribution(const Environment& env, int m, double t,
                                              std::int64_t n_samples, std::uint64_t seed, int threads) {
    if (m < 1 || t < 0.0 || n_samples < 1)
        throw std::invalid_argument("line_count_distribution requires m >= 1, t >= 0, n_samples >= 1");
    const double sigma = env.sigma();
    const double lambda = env.total_mass();
    std::vector<std::vector<std::int64_t>> counts(kDefaultStreams);
    for_each_stream(kDefaultStreams, threads, [&](int s) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(s));
        std::exponential_distribution<double> unit_exp(1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto& c = counts[s];
        const auto runs = stream_share(n_samples, kDefaultStreams, s);
        for (std::int64_t r = 0; r < runs; ++r) {
            int n = m;
            double clock = 0.0;
            for (;;) {
                const double down = static_cast<double>(n) * (n - 1);
                const double up = n * sigma;
                const double total = down + up + lambda;
                if (total <= 0.0) break;
                clock += unit_exp(rng) / total;
                if (clock >= t) break;
                const double u = unif(rng) * total;
                if (u < down)
                    n -= 1;
                else if (u < down + up)
                    n += 1;
                else
                    n *= 2;
            }
            if (static_cast<int>(c.size()) < n) c.resize(n, 0);
            ++c[n - 1];
        }
    });
    std::size_t width = 0;
    for (const auto& c : counts) width = std::max(width, c.size());
    std::vector<Estimate> out(width);
    const double N = static_cast<double>(n_samples);
    for (std::size_t k = 0; k < width; ++k) {
        std::int64_t hits = 0;
        for (const auto& c : counts)
            if (k < c.size()) hits += c[k];
        const double p = hits / N;
        out[k] = Estimate{p, std::sqrt(p * (1.0 - p) / N)};
    }
    return out;
}

AbsorptionEstimate siegmund_absorption(const Environment& env, int d, int cap, std::int64_t n_samples,
                                       std::uint64_t seed, int threads) {
    if (d < 1 || cap <= d || n_samples < 1)
        throw std::invalid_argument("siegmund_absorption requires d >= 1, cap > d, n_samples >= 1");
    AbsorptionEstimate out;
    out.cap_bias_bound = tail_bound(env, static_cast<long long>(cap) + 1);
    if (d == 1) {
        out.estimate = 1.0;
        return out;
    }
    const double sigma = env.sigma();
    const double lambda = env.total_mass();
    std::vector<std::int64_t> absorbed(kDefaultStreams, 0), escaped(kDefaultStreams, 0);
    for_each_stream(kDefaultStreams, threads, [&](int s) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(s));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const auto runs = stream_share(n_samples, kDefaultStreams, s);
        for (std::int64_t r = 0; r < runs; ++r) {
            int i = d;
            while (i > 1 && i <= cap) {
                // Only the embedded jump chain matters for hitting probabilities.
                const double up = static_cast<double>(i) * (i - 1);
                const double down = sigma * (i - 1);
                const double u = unif(rng) * (up + down + lambda);
                if (u < up)
                    i += 1;
                else if (u < up + down)
                    i -= 1;
                else
                    i = (i + 1) / 2;
            }
            if (i == 1)
                ++absorbed[s];
            else
                ++escaped[s];
        }
    });
    const double N = static_cast<double>(n_samples);
    const double p = std::accumulate(absorbed.begin(), absorbed.end(), std::int64_t{0}) / N;
    out.estimate = p;
    out.std_error = std::sqrt(p * (1.0 - p) / N);
    out.escape_fraction = std::accumulate(escaped.begin(), escaped.end(), std::int64_t{0}) / N;
    return out;
}

}  // namespace wflevy
