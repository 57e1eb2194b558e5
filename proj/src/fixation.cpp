#include "wflevy/fixation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wflevy/stationary.hpp"

namespace wflevy {

double SeriesRepresentation::term(int k, double x) const {
    if (k < 1 || k > K) return 0.0;
    double p = 0.0;
    for (int j = k; j >= 1; --j) p = (p + a(k, j)) * x;
    return p;
}

SeriesRepresentation make_series(const Environment& env, int K, const StepPolicy& policy, const Stabilization& stab) {
    auto limit = extract_a(env, K, policy, stab);
    SeriesRepresentation s;
    s.a = std::move(limit.a);
    s.K = K;
    s.pi_tail = tail_bound(env, static_cast<long long>(K) + 1);
    s.report = limit.report;
    return s;
}

SeriesValue h_series(double x, const SeriesRepresentation& s) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(fmt::format("x={} outside [0, 1]", x));
    return {s.a.polynomial(x), s.pi_tail};
}

double h_taylor(double x, const TaylorCoefficients& b, int n) {
    if (b.mode == TaylorCoefficients::Mode::ratio)
        throw std::invalid_argument("ratio-mode coefficients carry no scale; normalize them first");
    if (n < 0 || n > static_cast<int>(b.b.size()))
        throw std::invalid_argument(fmt::format("order n={} exceeds the {} stored coefficients", n, b.b.size()));
    double p = 0.0;
    for (int k = n; k >= 1; --k) p = (p + b.b[k - 1]) * x;
    return p;
}

double closed_form_no_env(double x, double sigma) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(fmt::format("x={} outside [0, 1]", x));
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    if (sigma == 0.0 || x == 0.0 || x == 1.0) return x;
    return std::expm1(sigma * x) / std::expm1(sigma);
}

NormalizationOutcome normalize_b(const std::vector<double>& ratios, int j_max) {
    NormalizationOutcome out;
    const int n = std::min<int>(j_max, static_cast<int>(ratios.size()));
    if (n < 1) {
        out.reason = "no ratios to normalize";
        return out;
    }
    auto mag = [&](int j) { return std::abs(ratios[j - 1]); };

    int peak_at = 1;
    int stop = n;
    bool converged = false;
    for (int j = 1; j <= n; ++j) {
        if (mag(j) > out.peak) {
            out.peak = mag(j);
            peak_at = j;
        }
        if (mag(j) < 1e-16 * out.peak) {
            stop = j;
            converged = true;
            break;
        }
        if (j > peak_at && j < n && mag(j + 1) > mag(j)) {
            stop = j;
            break;
        }
    }
    out.j_sum = stop;
    out.last = mag(stop);

    if (!converged) {
        if (!(out.last <= 1e-7 * out.peak)) {
            out.reason = fmt::format("ratios not decayed: |b_{0}/b_1| = {1:.3g} at j = {0} against peak {2:.3g}",
                                     stop, out.last, out.peak);
            return out;
        }
        for (int j = std::max(2, stop - 4); j <= stop; ++j) {
            if (mag(j) > mag(j - 1)) {
                out.reason = fmt::format("ratios not monotone before j = {}", stop);
                return out;
            }
        }
    }

    double total = 0.0;
    for (int j = 1; j <= stop; ++j) total += ratios[j - 1];
    if (!(std::isfinite(total) && total > 0.0)) {
        out.reason = fmt::format("ratio sum {:.3g} is not positive", total);
        return out;
    }
    out.ok = true;
    out.coeffs.mode = TaylorCoefficients::Mode::normalized;
    out.coeffs.b.resize(stop);
    for (int j = 1; j <= stop; ++j) out.coeffs.b[j - 1] = ratios[j - 1] / total;
    return out;
}

Curve series_curve(const SeriesRepresentation& s, int points, std::string label) {
    if (points < 2) throw std::invalid_argument("a curve needs at least 2 points");
    Curve c;
    c.label = std::move(label);
    c.points.reserve(points);
    for (int n = 0; n < points; ++n) {
        const double x = static_cast<double>(n) / (points - 1);
        const auto v = h_series(x, s);
        c.points.push_back({x, v.value, v.error_bound});
    }
    return c;
}

std::vector<Curve> reference_curves(int K, int points, const StepPolicy& policy, const Stabilization& stab) {
    constexpr double sigma = 0.8;
    constexpr double lambda = 0.8;
    std::vector<Curve> out;
    Curve flat;
    flat.label = "a=0";
    for (int n = 0; n < points; ++n) {
        const double x = static_cast<double>(n) / (points - 1);
        flat.points.push_back({x, closed_form_no_env(x, sigma), 0.0});
    }
    out.push_back(std::move(flat));
    for (double a : {0.1, 0.2, 0.3}) {
        const Environment env(sigma, {{a, lambda}});
        out.push_back(series_curve(make_series(env, K, policy, stab), points, fmt::format("a={:g}", a)));
    }
    return out;
}

}  // namespace wflevy
