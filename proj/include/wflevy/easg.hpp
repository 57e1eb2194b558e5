#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wflevy/environment.hpp"
#include "wflevy/random.hpp"
#include "wflevy/stats.hpp"

namespace wflevy {

/// One generation of the enlarged ancestral selection graph. Line positions
/// refer to the ordering just before the event.
struct EventRecord {
    enum class Kind { coalescence, multiple_branching, single_branching };

    double time = 0.0;
    Kind kind = Kind::coalescence;
    int lines_before = 0;
    int a = -1;           // coalescence: surviving line; single branching: the branching line
    int b = -1;           // coalescence: the line merged into a
    double weight = 0.0;  // S for multiple branchings, -1 for single ones
};

const char* kind_name(EventRecord::Kind kind);

/// Live E-ASG together with its encoding function F.
///
/// Lines are bit positions 0..n-1 and subsets are bit masks. F is stored
/// sparsely as (mask, value) pairs sorted by mask; the empty set never
/// appears. Branchings keep the continuing line at the parent's position and
/// put incoming lines at the end: a multiple branching sends the incoming
/// line of position p to n + p, a single branching sends it to n. A
/// coalescence of positions a < b keeps a and removes b, shifting higher
/// positions down. Stable line ids follow the same moves.
class EASGState {
public:
    struct Entry {
        std::uint32_t mask = 0;
        double value = 0.0;
    };

    /// m lines with F the indicator of the first i lines. Throws unless
    /// 1 <= i <= m <= cap <= 30.
    static EASGState init(int m, int i, int cap = 20);

    int lines() const { return n_; }
    int cap() const { return cap_; }
    int initial_lines() const { return m_; }
    int initial_block() const { return i_; }
    double time() const { return t_; }
    bool overflowed() const { return overflowed_; }
    const std::vector<Entry>& entries() const { return f_; }
    const std::vector<EventRecord>& log() const { return log_; }
    const std::vector<int>& line_ids() const { return ids_; }

    /// F(A) for the subset given as a bit mask; zero if absent.
    double value(std::uint32_t mask) const;

    /// Moves the clock; events are stamped with the current time.
    void set_time(double t) { t_ = t; }

    /// Each returns false and freezes the state (setting overflowed) if the
    /// event would exceed the cap; F is then left unchanged.
    bool apply_coalescence(int a, int b);
    bool apply_multiple_branching(double S);
    bool apply_single_branching(int line);

    /// Re-applies a recorded event (time included).
    bool apply(const EventRecord& e);

    /// s[j-1] = sum of F(A) over |A| = j, j = 1..lines().
    std::vector<double> size_sums() const;

    /// sum_A F(A) x^{|A|}.
    double graph_polynomial(double x) const;

private:
    friend double compose_check(const EASGState& state, double split_time);

    void record(EventRecord e);

    int n_ = 0;
    int cap_ = 20;
    int m_ = 1;
    int i_ = 1;
    int next_id_ = 0;
    double t_ = 0.0;
    bool overflowed_ = false;
    std::vector<Entry> f_;
    std::vector<int> ids_;
    std::vector<EventRecord> log_;
};

/// Samples one event: total rate n(n-1) + n sigma + lambda, split into a
/// uniform coalescing pair, a uniform single branching, or a multiple
/// branching whose weight is atom z_i with probability w_i / lambda.
/// Returns false when no event is possible (rate zero) or on overflow.
bool step(EASGState& state, const Environment& env, Rng& rng);

/// Runs from init(m, i, cap) up to time T or the first overflow. F is the
/// one at time T: an event that would land after T is discarded.
EASGState run_to(const Environment& env, int m, int i, double T, int cap, Rng& rng);

/// Draws types on the final lines (type 0 with probability x), marks each
/// branching real with probability |weight|, and propagates types back to
/// the initial lines. Returns true iff the first i initial lines all carry
/// type 0. A real branching with positive weight gives the parent type 0 if
/// the incoming line has type 0; with negative weight type 1 if the incoming
/// line has type 1; in every other case the parent takes the continuing
/// line's type.
bool assign_types(const EASGState& state, double x, Rng& rng);

struct InvariantReport {
    double sum_error = 0.0;         // |sum_A F(A) - 1|
    double max_bound_ratio = 0.0;   // max |F(A)| / |A|^{|A|}
    double min_subset_sum = 1.0;    // over the sampled subsets B of sum_{A in B} F(A)
    double max_subset_sum = 0.0;
    bool ok(double tol = 1e-9) const {
        return sum_error <= tol && max_bound_ratio <= 1.0 + tol && min_subset_sum >= -tol &&
               max_subset_sum <= 1.0 + tol;
    }
};

/// Checks the exact identities of F: total mass one, |F(A)| <= |A|^{|A|},
/// and subset sums in [0, 1] for `subsets` random subsets plus the full set.
InvariantReport check_invariants(const EASGState& state, Rng& rng, int subsets = 200);

/// Replays the log up to split_time, then replays the remaining events once
/// per subset B in the support of F at the split, starting from the
/// indicator of B. Returns max_A |sum_B F_split(B) f(B, A) - F(A)|.
double compose_check(const EASGState& state, double split_time);

struct DualityEstimate {
    int m = 1;
    int i = 1;
    double T = 0.0;
    int cap = 20;
    std::int64_t runs = 0;
    std::int64_t overflowed = 0;
    std::vector<Estimate> R;  // lattice k <= cap, indexed like CoefficientGrid
    std::vector<Estimate> Q;  // Q[j-1], j <= cap

    double overflow_fraction() const { return runs ? static_cast<double>(overflowed) / runs : 0.0; }
    Estimate r(int k, int j) const;
    Estimate q(int j) const;
};

/// Monte Carlo estimates of R_T^{m,k}(i, j) and Q_T(i, j). Overflowed runs
/// are dropped; their fraction is reported and biases the estimates.
DualityEstimate estimate_duality_coeffs(const Environment& env, int m, int i, double T, std::int64_t n_samples,
                                        std::uint64_t seed, int threads = 1, int cap = 20);

/// Text dump of the event log, one `time kind args weight` line per event.
std::string format_event_log(const EASGState& state);

}  // namespace wflevy
