#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wflevy/environment.hpp"
#include "wflevy/stats.hpp"

namespace wflevy {

/// Raised by compute_pi when the certified tail mass beyond the cutoff is
/// not below one half.
class CutoffTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Bracket {
    double lower = 0.0;
    double upper = 0.0;
    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (lower + upper); }
};

/// Stationary law of the line-counting process of the enlarged ancestral
/// graph, truncated at `cutoff`, with a rigorous bracket on pi(1).
struct StationaryDistribution {
    Environment env;
    int cutoff = 0;
    std::vector<double> pi;  // pi[k-1] = pi(k), k = 1..cutoff
    double tail_upper = 0.0; // certified bound on sum_{j > cutoff} pi(j)
    Bracket pi1_bracket;

    double operator()(int k) const { return (k >= 1 && k <= cutoff) ? pi[k - 1] : 0.0; }
    /// sum_{j >= k} pi(j) restricted to the stored range, plus tail_upper.
    double tail_from(int k) const;
};

/// r(1) = 1 and r(k) = (sigma/k) r(k-1) + lambda/(k(k-1)) sum_{l=floor((k+1)/2)}^{k-1} r(l).
/// Result index 0 holds r(1).
std::vector<double> unnormalized_ratios(const Environment& env, int K);

/// Upper bound on pi(j) for a single j (the per-term bound summed by tail_bound).
double pi_term_bound(const Environment& env, long long j);

/// Certified upper bound on sum_{j >= k} pi(j), clamped to 1.
///
/// Per-term bounds: 1 for j = 1, min(1, (sigma+lambda)/j) for j = 2, 3, and
/// for j >= 4 the explicit super-polynomial bound with n = floor(log2 j) - 2:
///   (sigma(sigma+lambda)+lambda)/(j(j-1)) * exp(n log(sigma+lambda) - (log 2/2) n (n-1)).
/// The bound is constant in n on dyadic blocks, so each block is summed in
/// closed form. The infinite sum is closed once a block contributes less than
/// 1e-18 of the running total, adding twice the last block as a geometric
/// safety margin. That closing step is a heuristic of this library, not part
/// of the underlying bound; it is only taken after the block sums have
/// started to decrease.
double tail_bound(const Environment& env, long long k);

/// Normalized stationary law with cutoff K. Throws CutoffTooSmall if
/// tail_bound(K+1) >= 0.5.
StationaryDistribution compute_pi(const Environment& env, int K);

/// compute_pi with the smallest power-of-two cutoff (>= 64, <= 1 << 16) whose
/// certified tail is below `target_tail`.
StationaryDistribution compute_pi_auto(const Environment& env, double target_tail = 1e-14);

struct OccupationEstimate {
    std::vector<double> fraction;  // fraction[k-1]: time share spent in state k
    std::vector<double> std_error; // batch-means standard errors
    double observed_time = 0.0;
    std::int64_t events = 0;
    int max_state = 1;

    double at(int k) const { return (k >= 1 && k <= static_cast<int>(fraction.size())) ? fraction[k - 1] : 0.0; }
    double se(int k) const { return (k >= 1 && k <= static_cast<int>(std_error.size())) ? std_error[k - 1] : 0.0; }
};

struct LineCountOptions {
    double horizon = 1e5;
    double burn_in = 100.0;
    int batches = 50;
    std::uint64_t seed = 1;
};

/// Simulates the line-counting chain (rates k(k-1) down, k sigma up, lambda
/// doubling) from state 1 and returns time-occupation fractions after the
/// burn-in. Standard errors come from `batches` equal time batches.
OccupationEstimate simulate_line_count(const Environment& env, const LineCountOptions& opts);

/// Monte Carlo estimate of P_m(|V_t| = k), k = 1..size, from independent runs.
std::vector<Estimate> line_count_distribution(const Environment& env, int m, double t,
                                              std::int64_t n_samples, std::uint64_t seed,
                                              int threads = 1);

struct AbsorptionEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double escape_fraction = 0.0;
    double cap_bias_bound = 0.0; // tail_bound(cap + 1)
};

/// Simulates the Siegmund dual D (rates i(i-1) up, sigma(i-1) down, lambda to
/// floor((i+1)/2)) from d and returns the fraction of runs absorbed at 1;
/// runs that exceed `cap` count as escaped.
AbsorptionEstimate siegmund_absorption(const Environment& env, int d, int cap, std::int64_t n_samples,
                                       std::uint64_t seed, int threads = 1);

}  // namespace wflevy
