#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "wflevy/environment.hpp"

namespace wflevy {

/// Raised when an ODE run does not settle before Stabilization::t_max, or
/// when the solution leaves any reasonable range.
class NoStabilization : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StepPolicy {
    double max_dt = 0.01;  // the step is further capped at 0.5 / d_K
};

struct Stabilization {
    double window = 1.0;
    double tol = 1e-9;
    double t_max = 200.0;
};

/// R_t^{m,k}(i, j) on the lattice 1 <= j <= k <= K, stored row by row.
struct CoefficientGrid {
    Environment env;
    int m = 1;
    int i = 1;
    int K = 0;
    double t = 0.0;
    std::vector<double> values;

    /// Grid at t = 0: one at (m, i), zero elsewhere.
    static CoefficientGrid initial(const Environment& env, int K, int m = 1, int i = 1);

    static std::size_t index(int k, int j) {
        return static_cast<std::size_t>(k) * (k - 1) / 2 + static_cast<std::size_t>(j - 1);
    }
    static std::size_t lattice_size(int K) { return static_cast<std::size_t>(K) * (K + 1) / 2; }

    /// Zero outside the lattice.
    double operator()(int k, int j) const {
        return (k >= 1 && k <= K && j >= 1 && j <= k) ? values[index(k, j)] : 0.0;
    }
    double& at(int k, int j) { return values[index(k, j)]; }

    double row_sum(int k) const;
    double total() const;
    /// sum_{k, j} R(k, j) x^j.
    double polynomial(double x) const;
};

/// Q_t(i, j) for j = 1..J. values[j-1] holds Q(j).
struct QVector {
    Environment env;
    int i = 1;
    int J = 0;
    double t = 0.0;
    std::vector<double> values;

    static QVector initial(const Environment& env, int J, int i = 1);
    double operator()(int j) const { return (j >= 1 && j <= J) ? values[j - 1] : 0.0; }
    double total() const;
};

/// Right-hand side of the R-system. Lattice points with k > K read as zero.
std::vector<double> r_rhs(const CoefficientGrid& grid);

/// Right-hand side of the Q-system. Q(0) and Q(J+1) read as zero.
std::vector<double> q_rhs(const QVector& q);

/// Classical RK4 from the t = 0 grid to time T with a fixed step
/// dt <= min(policy.max_dt, 0.5 / d_K). Returns the raw (unnormalized) grid.
/// Throws std::runtime_error if the solution stops being finite.
CoefficientGrid integrate_r(const Environment& env, int K, double T, const StepPolicy& policy = {},
                            int m = 1, int i = 1);

/// Same scheme for the Q-system, with the step capped at 0.5 / d_J. With
/// jumps of both signs the truncated Q-system can have eigenvalues with
/// positive real part once J is large (J = 32 with one atom at 0.3 already
/// does), so keep J moderate; a blow-up is reported as std::runtime_error.
QVector integrate_q(const Environment& env, int J, double T, const StepPolicy& policy = {}, int i = 1);

struct StabilizationReport {
    double t_final = 0.0;
    double window_delta = 0.0;  // max change of the renormalized solution over the last window
    double raw_mass = 0.0;      // total mass of the raw truncated solution at t_final
};

struct ALimit {
    CoefficientGrid a;  // renormalized to total mass one
    StabilizationReport report;
};

struct BLimit {
    std::vector<double> b;  // b[j-1] = b_j, renormalized to sum one
    StabilizationReport report;
};

/// Integrates the R-system window by window until the grid, divided by its
/// total mass, changes by less than stab.tol over one window.
///
/// The truncated system leaks the mass that would flow above K, so the raw
/// grid decays slowly to zero. In the full system the total mass is
/// conserved and equals one, so the renormalized grid is the consistent
/// estimate of the limit. The raw mass is kept in the report.
ALimit extract_a(const Environment& env, int K, const StepPolicy& policy = {}, const Stabilization& stab = {},
                 int m = 1, int i = 1);

/// Q-system analogue of extract_a; the sum of Q(j) over j is one for every t
/// in the untruncated system, which fixes the normalization.
BLimit extract_b_ode(const Environment& env, int J, const StepPolicy& policy = {},
                     const Stabilization& stab = {}, int i = 1);

/// Max |a(k, j)| difference between the limits started from (m, i) = (1, 1)
/// and (2, 1). The limit does not depend on the start, so this measures
/// integration and truncation error.
double start_independence_gap(const Environment& env, int K, const StepPolicy& policy = {},
                              const Stabilization& stab = {});

/// Max |b_j| difference over j <= J_report between extract_b_ode at
/// J_report + 4 and J_report + 8.
double j_stability_gap(const Environment& env, int J_report, const StepPolicy& policy = {},
                       const Stabilization& stab = {});

/// b_j / b_1 for j = 1..J from the stationary relation for b, solved for
/// b_{j+1} with b_0 = 0, b_1 = 1.
std::vector<double> b_ratios(const Environment& env, int J);

struct LatticeResidual {
    int k = 0;
    int j = 0;
    double value = 0.0;
};

struct RelationResiduals {
    std::vector<LatticeResidual> a_relation;  // one per (k, j), k <= k_max
    double a_relation_max = 0.0;
    std::vector<double> b_relation;  // j = 1..J-1
    double b_relation_max = 0.0;
    std::vector<double> b_vs_a;  // b_j - sum_k a(k, j), j = 1..min(J, K)
    double b_vs_a_max = 0.0;
};

/// Residuals of the linear limit relations.
///
/// For every k <= k_max (k_max < K) and j <= k the stationary relation
/// between the rows k-1, k, k/2 and k+1 of a; for b the relation
/// -d_j b_j + f_j b_{j-1} + sum_{l <= j+1} tau(l, j) b_l for j < J; and the
/// column-sum identity b_j = sum_k a(k, j). An empty b skips the b parts.
RelationResiduals relation_residuals(const Environment& env, const CoefficientGrid& a,
                                     const std::vector<double>& b, int k_max);

}  // namespace wflevy
