#pragma once

#include <cmath>
#include <cstdint>

namespace wflevy {

/// Sample mean / variance accumulator (Welford) with exact pairwise merge.
class MeanAccumulator {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const MeanAccumulator& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double n = static_cast<double>(n_ + o.n_);
        const double delta = o.mean_ - mean_;
        mean_ += delta * static_cast<double>(o.n_) / n;
        m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
        n_ += o.n_;
    }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Estimate with its Monte Carlo standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

}  // namespace wflevy
