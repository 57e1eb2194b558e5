#pragma once

#include <string>
#include <vector>

#include "wflevy/environment.hpp"
#include "wflevy/fixation.hpp"
#include "wflevy/odes.hpp"
#include "wflevy/stationary.hpp"

namespace wflevy {

/// Nine significant digits, the precision of every emitted table.
std::string format_number(double v);

/// "# params: sigma=... atoms=z:w,..." comment line, newline included.
std::string params_line(const Environment& env);

/// CSV with header `k,pi,ratio`; ratio is pi(k)/pi(1).
std::string pi_csv(const StationaryDistribution& pi);

/// CSV with header `x,h,err`.
std::string curve_csv(const Curve& curve);

/// Params line followed by one `k j value` record per lattice point.
std::string grid_dump(const Environment& env, const CoefficientGrid& grid);

/// Params line followed by one `j value` record per coefficient.
std::string b_dump(const Environment& env, const std::vector<double>& b);

/// Writes text to path, throwing std::runtime_error on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace wflevy
