// bath.hpp — spectral densities, bath response functions and discretized
// influence-functional (eta) coefficients.

#pragma once

#include <filesystem>
#include <functional>
#include <variant>
#include <vector>

#include "pild/core.hpp"

namespace pild::bath {

/// J(w) = 2 pi xi w exp(-w / w_c), energies in cm^-1. Reorganization energy 2 xi w_c.
struct Ohmic {
    double xi = 0.0;
    double cutoff = 1.0;
};

/// Piecewise-linear J(w) through (w_i, J_i); zero beyond the last point.
struct Tabulated {
    std::vector<double> omega;
    std::vector<double> values;
};

class SpectralDensity {
public:
    SpectralDensity() = default;
    explicit SpectralDensity(Ohmic o);
    explicit SpectralDensity(Tabulated t);

    /// Two whitespace-separated columns: w (cm^-1), J (cm^-1). '#' starts a comment.
    static SpectralDensity from_file(const std::filesystem::path& path);

    double operator()(double omega) const;
    /// J(w) / w, finite as w -> 0.
    double over_omega(double omega) const;
    /// Upper integration limit; the integrand is negligible (< 1e-16 relative) beyond.
    double max_frequency() const;
    /// Scale of structure in J, used to size quadrature panels.
    double feature_scale() const;
    bool is_zero() const;

    /// (1/pi) int_0^inf J(w)/w dw
    double reorganization_energy() const;

    const std::variant<Ohmic, Tabulated>& kind() const { return kind_; }

private:
    std::variant<Ohmic, Tabulated> kind_{Ohmic{}};
};

/// alpha(t) = (1/pi) int J(w) [coth(beta w / 2) cos(w t / hbar) - i sin(w t / hbar)] dw, in cm^-2.
class BathCorrelation {
public:
    BathCorrelation(SpectralDensity j, double temperature_K, double rel_tol = 1e-10);
    Complex operator()(double t_fs) const;

private:
    SpectralDensity j_;
    double beta_;
    double tol_;
};

/// eta[d] couples path points d steps apart; eta[0] is the same-interval term.
/// Each path point is held over one full interval of length dt.
struct EtaCoefficients {
    double dt_fs = 0.0;
    int memory = 0;
    std::vector<Complex> eta;

    Complex operator[](std::size_t d) const { return d < eta.size() ? eta[d] : Complex{}; }
};

EtaCoefficients eta_coefficients(const SpectralDensity& j, double temperature_K, double dt_fs, int memory,
                                 double rel_tol = 1e-10);

/// Adaptive Gauss-Kronrod over [a, b], split into `panels` equal pieces.
/// Throws NumericalError when the error estimate exceeds rel_tol * int |f|.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, int panels = 1);

}  // namespace pild::bath
