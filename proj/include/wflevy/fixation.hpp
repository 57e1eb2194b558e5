#pragma once

#include <string>
#include <vector>

#include "wflevy/environment.hpp"
#include "wflevy/odes.hpp"

namespace wflevy {

/// h(x) = sum_k P_k(x) with P_k(x) = sum_{j <= k} a(k, j) x^j, truncated at K.
struct SeriesRepresentation {
    CoefficientGrid a;
    int K = 0;
    double pi_tail = 0.0;  // tail_bound(K + 1), bounds the omitted terms
    StabilizationReport report;

    /// P_k(x); zero for k outside 1..K.
    double term(int k, double x) const;
};

/// Builds the series from the stationary R-system limit.
SeriesRepresentation make_series(const Environment& env, int K, const StepPolicy& policy = {},
                                 const Stabilization& stab = {});

struct SeriesValue {
    double value = 0.0;
    double error_bound = 0.0;
};

/// Truncated series value with the certified tail bound of the omitted terms.
SeriesValue h_series(double x, const SeriesRepresentation& s);

struct TaylorCoefficients {
    enum class Mode { absolute, ratio, normalized };
    std::vector<double> b;  // b[j-1] = b_j
    Mode mode = Mode::absolute;
};

/// sum_{k <= n} b_k x^k. Throws std::invalid_argument in ratio mode (no
/// scale) or when n exceeds the stored length.
double h_taylor(double x, const TaylorCoefficients& b, int n);

/// (e^{sigma x} - 1) / (e^sigma - 1), the fixation probability without
/// random environment; x itself when sigma = 0.
double closed_form_no_env(double x, double sigma);

struct NormalizationOutcome {
    bool ok = false;
    TaylorCoefficients coeffs;  // normalized mode, b_1..b_{j_sum} when ok
    int j_sum = 0;              // last index included in the sum
    double peak = 0.0;          // max |ratio| seen
    double last = 0.0;          // |ratio(j_sum)|
    std::string reason;         // why normalization was refused
};

/// Normalizes b_j / b_1 ratios so that they sum to one.
///
/// The ratios are scanned up to min(j_max, size). The sum stops at the first
/// index where |ratio| falls below 1e-16 of the running peak (converged), or
/// at the first index past the peak where the magnitudes start to grow
/// again (turnaround; the ratios of two-sided environments eventually
/// explode). The result is accepted if the sum converged, or if at the
/// stopping index |ratio| <= 1e-7 * peak and the last five magnitudes were
/// non-increasing. Otherwise `ok` is false and `reason` explains why.
NormalizationOutcome normalize_b(const std::vector<double>& ratios, int j_max = 60);

struct CurvePoint {
    double x = 0.0;
    double h = 0.0;
    double err = 0.0;
};

struct Curve {
    std::string label;
    std::vector<CurvePoint> points;
};

/// h on `points` equally spaced x in [0, 1] from the series representation.
Curve series_curve(const SeriesRepresentation& s, int points = 201, std::string label = "");

/// The four fixation curves for sigma = 0.8 and jump measure 0.8 delta_a,
/// a in {0, 0.1, 0.2, 0.3}. A jump of size 0 has no effect, so the a = 0
/// curve is the closed form without environment.
std::vector<Curve> reference_curves(int K = 64, int points = 201, const StepPolicy& policy = {},
                                  const Stabilization& stab = {});

}  // namespace wflevy
