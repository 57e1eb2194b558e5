#include "wflevy/environment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace wflevy {

namespace {

void validate_atom(const Atom& a) {
    if (!std::isfinite(a.z) || !(a.z > -1.0 && a.z < 1.0))
        throw std::invalid_argument(fmt::format("atom position z={} outside (-1, 1)", a.z));
    if (a.z == 0.0)
        throw std::invalid_argument("atom position z=0 has no effect and is rejected");
    if (!std::isfinite(a.w) || !(a.w > 0.0))
        throw std::invalid_argument(fmt::format("atom weight w={} must be positive", a.w));
}

double parse_double(std::string_view s) {
    // std::from_chars for double is available in GCC 11.
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw std::invalid_argument(fmt::format("cannot parse number '{}'", s));
    return v;
}

}  // namespace

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return std::round(r);
}

Environment::Environment(double sigma, std::vector<Atom> atoms)
    : sigma_(sigma), atoms_(std::move(atoms)) {
    if (!std::isfinite(sigma_) || sigma_ < 0.0)
        throw std::invalid_argument(fmt::format("sigma={} must be non-negative", sigma_));
    for (const auto& a : atoms_) {
        validate_atom(a);
        lambda_ += a.w;
    }
}

double Environment::moment(int p) const {
    if (p < 0) throw std::invalid_argument("moment order must be non-negative");
    double s = 0.0;
    for (const auto& a : atoms_) s += a.w * std::pow(a.z, p);
    return s;
}

double Environment::tau(int i, int j) const {
    if (i < 1 || j < 1) throw std::invalid_argument("tau requires i, j >= 1");
    if (j < i - 1 || j > 2 * i) return 0.0;
    if (j == i - 1) return static_cast<double>(i) * (i - 1);
    double integral = 0.0;
    for (const auto& a : atoms_)
        integral += a.w * std::pow(1.0 + a.z, 2 * i - j) * std::pow(-a.z, j - i);
    return binomial(i, j - i) * integral;
}

double Environment::d(int j) const {
    return lambda_ + static_cast<double>(j) * (j - 1) + j * sigma_;
}

OdeCoeffs Environment::ode_coeffs(int k, int j) const {
    if (k < 1 || j < 1) throw std::invalid_argument("ode_coeffs requires k, j >= 1");
    OdeCoeffs c;
    c.d_j = d(j);
    c.e_kj = static_cast<double>(k + 1) * k - static_cast<double>(j) * (j - 1);
    c.f_j = (j - 1) * sigma_;
    c.f_kj = (k - 1 - j) * sigma_;
    return c;
}

std::string Environment::describe() const {
    std::string out = fmt::format("sigma={:.9g} atoms=", sigma_);
    if (atoms_.empty()) out += "none";
    for (std::size_t n = 0; n < atoms_.size(); ++n) {
        if (n) out += ',';
        out += fmt::format("{:.9g}:{:.9g}", atoms_[n].z, atoms_[n].w);
    }
    return out;
}

Atom parse_atom(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos || text.find(':', colon + 1) != std::string_view::npos)
        throw std::invalid_argument(fmt::format("atom '{}' must have the form z:w", text));
    Atom a{parse_double(text.substr(0, colon)), parse_double(text.substr(colon + 1))};
    validate_atom(a);
    return a;
}

}  // namespace wflevy
