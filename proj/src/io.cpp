#include "wflevy/io.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace wflevy {

std::string format_number(double v) { return fmt::format("{:.9g}", v); }

std::string params_line(const Environment& env) { return "# params: " + env.describe() + "\n"; }

std::string pi_csv(const StationaryDistribution& pi) {
    std::string out = "k,pi,ratio\n";
    const double first = pi(1);
    for (int k = 1; k <= pi.cutoff; ++k)
        out += fmt::format("{},{:.9g},{:.9g}\n", k, pi(k), first > 0.0 ? pi(k) / first : 0.0);
    return out;
}

std::string curve_csv(const Curve& curve) {
    std::string out = "x,h,err\n";
    for (const auto& p : curve.points) out += fmt::format("{:.9g},{:.9g},{:.9g}\n", p.x, p.h, p.err);
    return out;
}

std::string grid_dump(const Environment& env, const CoefficientGrid& grid) {
    std::string out = params_line(env);
    for (int k = 1; k <= grid.K; ++k)
        for (int j = 1; j <= k; ++j) out += fmt::format("{} {} {:.9g}\n", k, j, grid(k, j));
    return out;
}

std::string b_dump(const Environment& env, const std::vector<double>& b) {
    std::string out = params_line(env);
    for (std::size_t j = 0; j < b.size(); ++j) out += fmt::format("{} {:.9g}\n", j + 1, b[j]);
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
    f << text;
    if (!f) throw std::runtime_error(fmt::format("failed writing '{}'", path));
}

}  // namespace wflevy
