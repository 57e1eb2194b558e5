#pragma once

#include <cstdint>
#include <vector>

#include "wflevy/environment.hpp"
#include "wflevy/random.hpp"
#include "wflevy/stats.hpp"

namespace wflevy {

struct PathConfig {
    double x0 = 0.5;
    double T_max = 200.0;
    double dt = 1e-3;
    double boundary_tol = 1e-6;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument unless x0 in [0, 1], dt > 0, T_max > 0
    /// and 0 < boundary_tol < 0.5.
    void validate() const;
};

struct Jump {
    double time = 0.0;
    double z = 0.0;
};

using JumpSchedule = std::vector<Jump>;

/// Jump times and sizes of the compound Poisson part on (0, T_max]: a
/// Poisson(lambda T_max) number of uniform times, sorted, with sizes drawn
/// from the atoms in proportion to their weights.
JumpSchedule sample_jump_schedule(const Environment& env, double T_max, Rng& rng);

/// Euler-Maruyama for dX = -sigma X(1-X) dt + sqrt(2X(1-X)) dB over
/// `duration`, clamped to [0, 1] after every step. 0 and 1 are absorbing.
double evolve_between_jumps(double x, double duration, double sigma, double dt, Rng& rng);

/// x + x(1-x) z.
inline double apply_jump(double x, double z) { return x + x * (1.0 - x) * z; }

struct FixationEstimate {
    double h = 0.0;  // fraction fixed at 1 among decided paths
    double std_error = 0.0;
    double undecided_fraction = 0.0;
    std::int64_t paths = 0;
    std::int64_t fixed_one = 0;
    std::int64_t fixed_zero = 0;
};

/// Runs paths from cfg.x0 until they leave (boundary_tol, 1 - boundary_tol)
/// or reach cfg.T_max.
FixationEstimate estimate_fixation(const Environment& env, std::int64_t n_paths, const PathConfig& cfg,
                                   int threads = 1);

/// E[X(T)^l] from X(0) = cfg.x0.
Estimate estimate_moment(const Environment& env, int l, double T, std::int64_t n_paths, const PathConfig& cfg,
                         int threads = 1);

/// Moments for every (l, T) pair from one set of paths. result[a][b] is the
/// estimate for powers[a] at times[b]. Times must lie in [0, cfg.T_max].
std::vector<std::vector<Estimate>> estimate_moments(const Environment& env, const std::vector<int>& powers,
                                                    const std::vector<double>& times, std::int64_t n_paths,
                                                    const PathConfig& cfg, int threads = 1);

struct PathPoint {
    double t = 0.0;
    double x = 0.0;
};

/// One path on [0, T] recorded every `stride` Euler steps and right after
/// every jump.
std::vector<PathPoint> sample_path(const Environment& env, double T, int stride, const PathConfig& cfg);

}  // namespace wflevy
