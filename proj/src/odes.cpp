#include "wflevy/odes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace wflevy {

namespace {

// Compressed sparse row matrix; both ODE systems are linear and autonomous.
struct SparseOperator {
    std::size_t n = 0;
    std::vector<std::size_t> row_start{0};
    std::vector<std::size_t> col;
    std::vector<double> coef;

    void add(std::size_t c, double v) {
        if (v == 0.0) return;
        col.push_back(c);
        coef.push_back(v);
    }
    void end_row() {
        row_start.push_back(col.size());
        ++n;
    }
    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        y.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t p = row_start[r]; p < row_start[r + 1]; ++p) s += coef[p] * x[col[p]];
            y[r] = s;
        }
    }
};

SparseOperator build_r_operator(const Environment& env, int K) {
    using G = CoefficientGrid;
    SparseOperator op;
    op.col.reserve(G::lattice_size(K) * 8);
    op.coef.reserve(G::lattice_size(K) * 8);
    for (int k = 1; k <= K; ++k) {
        for (int j = 1; j <= k; ++j) {
            const OdeCoeffs c = env.ode_coeffs(k, j);
            if (k + 1 <= K) {
                op.add(G::index(k + 1, j + 1), env.tau(j + 1, j));
                op.add(G::index(k + 1, j), c.e_kj);
            }
            if (k >= 2 && j >= 2) op.add(G::index(k - 1, j - 1), c.f_j);
            if (j <= k - 1) op.add(G::index(k - 1, j), c.f_kj);
            op.add(G::index(k, j), -env.d(k));
            if (k % 2 == 0) {
                const int top = std::min(j, k / 2);
                for (int l = 1; l <= top; ++l) op.add(G::index(k / 2, l), env.tau(l, j));
            }
            op.end_row();
        }
    }
    return op;
}

SparseOperator build_q_operator(const Environment& env, int J) {
    SparseOperator op;
    for (int j = 1; j <= J; ++j) {
        // Diagonal collects -d_j and tau(j, j).
        double diag = -env.d(j);
        if (j >= 2) op.add(j - 2, env.ode_coeffs(j, j).f_j);
        for (int l = 1; l <= std::min(j + 1, J); ++l) {
            if (l == j)
                diag += env.tau(l, j);
            else
                op.add(l - 1, env.tau(l, j));
        }
        op.add(j - 1, diag);
        op.end_row();
    }
    return op;
}

class Rk4 {
public:
    Rk4(const SparseOperator& op, double dt) : op_(op), dt_(dt) {}

    // Advances y by exactly `duration`, using steps no longer than dt.
    void advance(std::vector<double>& y, double duration) {
        if (duration <= 0.0) return;
        const auto steps = static_cast<long long>(std::ceil(duration / dt_ - 1e-9));
        const double h = duration / static_cast<double>(std::max(1LL, steps));
        for (long long s = 0; s < std::max(1LL, steps); ++s) step(y, h);
    }

private:
    void step(std::vector<double>& y, double h) {
        const std::size_t n = y.size();
        k1_.resize(n);
        tmp_.resize(n);
        acc_.resize(n);
        op_.apply(y, k1_);
        for (std::size_t r = 0; r < n; ++r) {
            acc_[r] = k1_[r];
            tmp_[r] = y[r] + 0.5 * h * k1_[r];
        }
        op_.apply(tmp_, k1_);
        for (std::size_t r = 0; r < n; ++r) {
            acc_[r] += 2.0 * k1_[r];
            tmp_[r] = y[r] + 0.5 * h * k1_[r];
        }
        op_.apply(tmp_, k1_);
        for (std::size_t r = 0; r < n; ++r) {
            acc_[r] += 2.0 * k1_[r];
            tmp_[r] = y[r] + h * k1_[r];
        }
        op_.apply(tmp_, k1_);
        for (std::size_t r = 0; r < n; ++r) y[r] += h / 6.0 * (acc_[r] + k1_[r]);
    }

    const SparseOperator& op_;
    double dt_;
    std::vector<double> k1_, tmp_, acc_;
};

double step_size(const Environment& env, int top, const StepPolicy& policy) {
    if (!(policy.max_dt > 0.0)) throw std::invalid_argument("StepPolicy::max_dt must be positive");
    return std::min(policy.max_dt, 0.5 / env.d(top));
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void require_finite(const std::vector<double>& v, const char* what, double T) {
    for (double x : v)
        if (!std::isfinite(x))
            throw std::runtime_error(fmt::format("{}: solution not finite at t={}; the truncated system is unstable "
                                                 "at this size, reduce the truncation",
                                                 what, T));
}

// Runs the linear system window by window until the mass-normalized
// solution settles. Returns the normalized solution.
std::vector<double> run_to_stationarity(const SparseOperator& op, std::vector<double> y, double dt,
                                        const Stabilization& stab, StabilizationReport& report,
                                        const char* what) {
    if (!(stab.window > 0.0) || !(stab.tol > 0.0))
        throw std::invalid_argument("Stabilization window and tol must be positive");
    Rk4 rk(op, dt);
    auto normalized = [&](const std::vector<double>& v) {
        const double mass = sum(v);
        if (!std::isfinite(mass) || std::abs(mass) < 1e-8)
            throw NoStabilization(fmt::format("{}: total mass degenerated to {:.3g} at t={:.3g}", what, mass,
                                              report.t_final));
        std::vector<double> out(v.size());
        double peak = 0.0;
        for (std::size_t r = 0; r < v.size(); ++r) {
            out[r] = v[r] / mass;
            peak = std::max(peak, std::abs(out[r]));
        }
        if (!std::isfinite(peak) || peak > 1e6)
            throw NoStabilization(fmt::format("{}: solution blew up (max |value| {:.3g}) at t={:.3g}", what, peak,
                                              report.t_final));
        return out;
    };
    std::vector<double> previous = normalized(y);
    report.t_final = 0.0;
    while (report.t_final < stab.t_max) {
        rk.advance(y, stab.window);
        report.t_final += stab.window;
        std::vector<double> current = normalized(y);
        double delta = 0.0;
        for (std::size_t r = 0; r < y.size(); ++r) delta = std::max(delta, std::abs(current[r] - previous[r]));
        report.window_delta = delta;
        report.raw_mass = sum(y);
        if (delta < stab.tol) return current;
        previous = std::move(current);
    }
    throw NoStabilization(fmt::format("{}: no stabilization by t_max={} (last window delta {:.3g}, tol {:.3g})", what,
                                      stab.t_max, report.window_delta, stab.tol));
}

}  // namespace

CoefficientGrid CoefficientGrid::initial(const Environment& env, int K, int m, int i) {
    if (K < 1 || m < 1 || i < 1 || i > m || m > K)
        throw std::invalid_argument(fmt::format("invalid grid shape K={} m={} i={}", K, m, i));
    CoefficientGrid g;
    g.env = env;
    g.K = K;
    g.m = m;
    g.i = i;
    g.values.assign(lattice_size(K), 0.0);
    g.at(m, i) = 1.0;
    return g;
}

double CoefficientGrid::row_sum(int k) const {
    if (k < 1 || k > K) return 0.0;
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += values[index(k, j)];
    return s;
}

double CoefficientGrid::total() const { return sum(values); }

double CoefficientGrid::polynomial(double x) const {
    // Column sums first, then Horner in x.
    std::vector<double> column(K, 0.0);
    for (int k = 1; k <= K; ++k)
        for (int j = 1; j <= k; ++j) column[j - 1] += values[index(k, j)];
    double p = 0.0;
    for (int j = K; j >= 1; --j) p = (p + column[j - 1]) * x;
    return p;
}

QVector QVector::initial(const Environment& env, int J, int i) {
    if (J < 1 || i < 1 || i > J) throw std::invalid_argument(fmt::format("invalid Q shape J={} i={}", J, i));
    QVector q;
    q.env = env;
    q.J = J;
    q.i = i;
    q.values.assign(J, 0.0);
    q.values[i - 1] = 1.0;
    return q;
}

double QVector::total() const { return sum(values); }

std::vector<double> r_rhs(const CoefficientGrid& grid) {
    if (grid.values.size() != CoefficientGrid::lattice_size(grid.K))
        throw std::invalid_argument("grid values do not match the lattice size");
    std::vector<double> out;
    build_r_operator(grid.env, grid.K).apply(grid.values, out);
    return out;
}

std::vector<double> q_rhs(const QVector& q) {
    if (static_cast<int>(q.values.size()) != q.J) throw std::invalid_argument("Q values do not match J");
    std::vector<double> out;
    build_q_operator(q.env, q.J).apply(q.values, out);
    return out;
}

CoefficientGrid integrate_r(const Environment& env, int K, double T, const StepPolicy& policy, int m, int i) {
    if (K < 2) throw std::invalid_argument("integrate_r requires K >= 2");
    if (T < 0.0) throw std::invalid_argument("integrate_r requires T >= 0");
    CoefficientGrid g = CoefficientGrid::initial(env, K, m, i);
    const auto op = build_r_operator(env, K);
    Rk4(op, step_size(env, K, policy)).advance(g.values, T);
    require_finite(g.values, "R-system", T);
    g.t = T;
    return g;
}

QVector integrate_q(const Environment& env, int J, double T, const StepPolicy& policy, int i) {
    if (T < 0.0) throw std::invalid_argument("integrate_q requires T >= 0");
    QVector q = QVector::initial(env, J, i);
    const auto op = build_q_operator(env, J);
    Rk4(op, step_size(env, J, policy)).advance(q.values, T);
    require_finite(q.values, "Q-system", T);
    q.t = T;
    return q;
}

ALimit extract_a(const Environment& env, int K, const StepPolicy& policy, const Stabilization& stab, int m,
                 int i) {
    if (K < 2) throw std::invalid_argument("extract_a requires K >= 2");
    ALimit out;
    out.a = CoefficientGrid::initial(env, K, m, i);
    const auto op = build_r_operator(env, K);
    out.a.values = run_to_stationarity(op, out.a.values, step_size(env, K, policy), stab, out.report, "R-system");
    out.a.t = out.report.t_final;
    return out;
}

BLimit extract_b_ode(const Environment& env, int J, const StepPolicy& policy, const Stabilization& stab, int i) {
    QVector q = QVector::initial(env, J, i);
    const auto op = build_q_operator(env, J);
    BLimit out;
    out.b = run_to_stationarity(op, q.values, step_size(env, J, policy), stab, out.report, "Q-system");
    return out;
}

double start_independence_gap(const Environment& env, int K, const StepPolicy& policy, const Stabilization& stab) {
    const auto first = extract_a(env, K, policy, stab, 1, 1);
    const auto second = extract_a(env, K, policy, stab, 2, 1);
    double gap = 0.0;
    for (std::size_t n = 0; n < first.a.values.size(); ++n)
        gap = std::max(gap, std::abs(first.a.values[n] - second.a.values[n]));
    return gap;
}

double j_stability_gap(const Environment& env, int J_report, const StepPolicy& policy, const Stabilization& stab) {
    const auto lo = extract_b_ode(env, J_report + 4, policy, stab);
    const auto hi = extract_b_ode(env, J_report + 8, policy, stab);
    double gap = 0.0;
    for (int j = 0; j < J_report; ++j) gap = std::max(gap, std::abs(lo.b[j] - hi.b[j]));
    return gap;
}

std::vector<double> b_ratios(const Environment& env, int J) {
    if (J < 1) throw std::invalid_argument("b_ratios requires J >= 1");
    std::vector<double> b(J + 1, 0.0);  // b[0] = b_0 = 0
    b[1] = 1.0;
    for (int j = 1; j <= J - 1; ++j) {
        double s = env.d(j) * b[j] - env.ode_coeffs(j, j).f_j * b[j - 1];
        for (int l = 1; l <= j; ++l) s -= env.tau(l, j) * b[l];
        b[j + 1] = s / env.tau(j + 1, j);
    }
    return {b.begin() + 1, b.end()};
}

RelationResiduals relation_residuals(const Environment& env, const CoefficientGrid& a, const std::vector<double>& b,
                                     int k_max) {
    if (k_max >= a.K) throw std::invalid_argument("relation_residuals requires k_max < K");
    RelationResiduals out;
    std::vector<double> rhs;
    build_r_operator(env, a.K).apply(a.values, rhs);
    for (int k = 1; k <= k_max; ++k) {
        for (int j = 1; j <= k; ++j) {
            const double v = rhs[CoefficientGrid::index(k, j)];
            out.a_relation.push_back({k, j, v});
            out.a_relation_max = std::max(out.a_relation_max, std::abs(v));
        }
    }
    const int J = static_cast<int>(b.size());
    auto bj = [&](int j) { return (j >= 1 && j <= J) ? b[j - 1] : 0.0; };
    for (int j = 1; j <= J - 1; ++j) {
        double v = -env.d(j) * bj(j) + env.ode_coeffs(j, j).f_j * bj(j - 1);
        for (int l = 1; l <= j + 1; ++l) v += env.tau(l, j) * bj(l);
        out.b_relation.push_back(v);
        out.b_relation_max = std::max(out.b_relation_max, std::abs(v));
    }
    for (int j = 1; j <= std::min(J, a.K); ++j) {
        double column = 0.0;
        for (int k = j; k <= a.K; ++k) column += a(k, j);
        const double v = bj(j) - column;
        out.b_vs_a.push_back(v);
        out.b_vs_a_max = std::max(out.b_vs_a_max, std::abs(v));
    }
    return out;
}

}  // namespace wflevy
