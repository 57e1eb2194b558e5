#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wflevy {

/// One atom z with mass w of the jump measure.
struct Atom {
    double z = 0.0;
    double w = 0.0;
};

/// The four scalars entering the duality ODE systems for a lattice point (k, j).
struct OdeCoeffs {
    double d_j = 0.0;   // lambda + j(j-1) + j sigma
    double e_kj = 0.0;  // (k+1)k - j(j-1)
    double f_j = 0.0;   // (j-1) sigma
    double f_kj = 0.0;  // (k-1-j) sigma
};

/// Levy environment: drift sigma >= 0 plus a finite atomic jump measure on (-1, 1).
///
/// The environment process is L(t) = -sigma t + (compound Poisson with Levy
/// measure sum_i w_i delta_{z_i}). Positive jumps favour type 0, negative
/// jumps and the drift favour type 1. Every integral against the jump measure
/// is a finite sum, so all coefficients are evaluated exactly in double
/// precision.
class Environment {
public:
    Environment() = default;

    /// Throws std::invalid_argument unless sigma >= 0 and every atom has
    /// z in (-1, 1) \ {0} and w > 0.
    Environment(double sigma, std::vector<Atom> atoms);

    double sigma() const { return sigma_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    bool has_jumps() const { return !atoms_.empty(); }

    /// lambda = nu((-1, 1)).
    double total_mass() const { return lambda_; }

    /// sum_i w_i z_i^p. moment(0) == total_mass().
    double moment(int p) const;

    /// Branching coefficient tau(i, j), i, j >= 1. May be negative.
    double tau(int i, int j) const;

    OdeCoeffs ode_coeffs(int k, int j) const;

    /// d_j = lambda + j(j-1) + j sigma.
    double d(int j) const;

    /// Human readable "sigma=... atoms=z:w,z:w".
    std::string describe() const;

private:
    double sigma_ = 0.0;
    std::vector<Atom> atoms_;
    double lambda_ = 0.0;
};

/// Parses an atom given as "z:w". Throws std::invalid_argument on malformed
/// input or values outside the valid range.
Atom parse_atom(std::string_view text);

/// Binomial coefficient as a double (exact for the small arguments used here).
double binomial(int n, int k);

}  // namespace wflevy
