#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wflevy/environment.hpp"

namespace wflevy {

/// Published b_1..b_7 for sigma = 0.8 and jump measure 0.8 delta_a.
struct ReferenceRow {
    double a = 0.0;
    std::array<double, 7> b{};
};

const std::vector<ReferenceRow>& reference_coefficients();

/// sigma = 0.8 with a single atom 0.8 delta_a, or no atoms for a = 0.
Environment reference_environment(double a);

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string measured;
    double seconds = 0.0;
};

struct ValidationOptions {
    bool quick = false;  // only the cheap criteria, at full sample sizes
    int threads = 1;
    std::uint64_t seed = 20240611;
};

/// Number of acceptance criteria.
inline constexpr int kCriteria = 13;

/// Criteria run in quick mode.
std::vector<int> quick_criteria();

/// Runs the selected criteria (all of them when `only` is empty), calling
/// on_result after each one. Expensive intermediate results (limit grids)
/// are shared between criteria.
std::vector<CriterionResult> run_validation(const ValidationOptions& opts, const std::vector<int>& only = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS  3  title: measured (1.2 s)".
std::string format_result(const CriterionResult& r);

}  // namespace wflevy
