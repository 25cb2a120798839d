#include "pild/bath.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pild::bath {

namespace {

constexpr double kPi = units::kPi;

// x / tanh(x), the regular part of coth near zero.
double x_coth(double x) {
    if (std::abs(x) < 1e-6) return 1.0 + x * x / 3.0;
    return x / std::tanh(x);
}

double sinc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// (sin x - x) / x
double sin_minus_id_over_x(double x) {
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return -x2 / 6.0 + x2 * x2 / 120.0;
    }
    return (std::sin(x) - x) / x;
}

// J(w) coth(beta w / 2)
double thermal_weight(const SpectralDensity& j, double beta, double w) {
    return j.over_omega(w) * (2.0 / beta) * x_coth(0.5 * beta * w);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, int panels) {
    if (!(b > a)) return 0.0;
    panels = std::max(panels, 1);
    const double width = (b - a) / panels;
    double total = 0.0;
    double total_err = 0.0;
    double total_l1 = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double hi = (p + 1 == panels) ? b : lo + width;
        double err = 0.0;
        double l1 = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 20, rel_tol * 0.1, &err, &l1);
        total_err += err;
        total_l1 += l1;
    }
    if (!std::isfinite(total)) throw NumericalError("quadrature produced a non-finite value");
    if (total_err > rel_tol * std::max(total_l1, 1e-300) && total_err > 1e-15 * total_l1)
        throw NumericalError("quadrature did not converge: error estimate " + std::to_string(total_err) +
                             " for integral magnitude " + std::to_string(total_l1));
    return total;
}

SpectralDensity::SpectralDensity(Ohmic o) : kind_(o) {
    if (o.xi < 0.0 || !(o.cutoff > 0.0)) throw std::invalid_argument("Ohmic: need xi >= 0 and cutoff > 0");
}

SpectralDensity::SpectralDensity(Tabulated t) : kind_(std::move(t)) {
    const auto& tab = std::get<Tabulated>(kind_);
    if (tab.omega.size() < 2 || tab.omega.size() != tab.values.size())
        throw std::invalid_argument("tabulated spectral density needs >= 2 matching (w, J) points");
    if (tab.omega.front() < 0.0) throw std::invalid_argument("tabulated spectral density: negative frequency");
    for (std::size_t i = 1; i < tab.omega.size(); ++i)
        if (!(tab.omega[i] > tab.omega[i - 1]))
            throw std::invalid_argument("tabulated spectral density: frequencies must increase");
    for (double v : tab.values)
        if (v < 0.0) throw std::invalid_argument("tabulated spectral density: negative J");
}

SpectralDensity SpectralDensity::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spectral density table " + path.string());
    Tabulated t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double w = 0.0, j = 0.0;
        if (!(ls >> w)) continue;
        if (!(ls >> j))
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
        t.omega.push_back(w);
        t.values.push_back(j);
    }
    if (t.omega.empty() || t.omega.front() > 0.0) {
        t.omega.insert(t.omega.begin(), 0.0);
        t.values.insert(t.values.begin(), 0.0);
    }
    return SpectralDensity(std::move(t));
}

double SpectralDensity::operator()(double omega) const {
    if (omega < 0.0) throw std::domain_error("spectral density evaluated at negative frequency");
    return omega * over_omega(omega);
}

double SpectralDensity::over_omega(double omega) const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return 2.0 * kPi * o->xi * std::exp(-omega / o->cutoff);
    const auto& t = std::get<Tabulated>(kind_);
    if (omega >= t.omega.back()) return 0.0;
    const auto hi = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
    const auto i = static_cast<std::size_t>(hi - t.omega.begin());
    if (i == 0) return 0.0;
    const double w0 = t.omega[i - 1], w1 = t.omega[i];
    const double j0 = t.values[i - 1], j1 = t.values[i];
    if (omega <= 0.0 || (w0 == 0.0 && omega < 1e-12 * w1)) return (j1 - j0) / (w1 - w0);  // slope at origin
    const double j = j0 + (j1 - j0) * (omega - w0) / (w1 - w0);
    return j / omega;
}

double SpectralDensity::max_frequency() const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return o->cutoff * std::log(1e16);
    return std::get<Tabulated>(kind_).omega.back();
}

double SpectralDensity::feature_scale() const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return o->cutoff;
    const auto& t = std::get<Tabulated>(kind_);
    return (t.omega.back() - t.omega.front()) / static_cast<double>(t.omega.size() - 1);
}

bool SpectralDensity::is_zero() const {
    if (const auto* o = std::get_if<Ohmic>(&kind_)) return o->xi == 0.0;
    const auto& v = std::get<Tabulated>(kind_).values;
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double SpectralDensity::reorganization_energy() const {
    if (is_zero()) return 0.0;
    const double wmax = max_frequency();
    const int panels = std::max(1, static_cast<int>(std::ceil(wmax / feature_scale())));
    return integrate([this](double w) { return over_omega(w); }, 0.0, wmax, 1e-12, panels) / kPi;
}

BathCorrelation::BathCorrelation(SpectralDensity j, double temperature_K, double rel_tol)
    : j_(std::move(j)), beta_(units::beta(temperature_K)), tol_(rel_tol) {
    if (!(temperature_K > 0.0)) throw std::invalid_argument("bath temperature must be positive");
}

Complex BathCorrelation::operator()(double t_fs) const {
    if (j_.is_zero()) return {};
    const double tau = t_fs / units::kHbar;
    const double wmax = j_.max_frequency();
    // Panels resolve both the spectral structure and the oscillation period.
    const double period = std::abs(tau) > 0.0 ? 2.0 * kPi / std::abs(tau) : wmax;
    const int panels =
        std::clamp(static_cast<int>(std::ceil(wmax / std::min(j_.feature_scale(), period))), 1, 20000);
    const double re = integrate([&](double w) { return thermal_weight(j_, beta_, w) * std::cos(w * tau); }, 0.0,
                                wmax, tol_, panels);
    double im = 0.0;
    if (tau != 0.0)
        im = -integrate([&](double w) { return j_(w) * std::sin(w * tau); }, 0.0, wmax, tol_, panels);
    return Complex(re, im) / kPi;
}

EtaCoefficients eta_coefficients(const SpectralDensity& j, double temperature_K, double dt_fs, int memory,
                                 double rel_tol) {
    if (!(dt_fs > 0.0)) throw std::invalid_argument("eta_coefficients: dt must be positive");
    if (memory < 1) throw std::invalid_argument("eta_coefficients: memory must be >= 1");
    if (!(temperature_K > 0.0)) throw std::invalid_argument("eta_coefficients: temperature must be positive");

    EtaCoefficients out;
    out.dt_fs = dt_fs;
    out.memory = memory;
    out.eta.assign(static_cast<std::size_t>(memory) + 1, Complex{});
    if (j.is_zero()) return out;

    const double beta = units::beta(temperature_K);
    const double len = dt_fs / units::kHbar;  // interval length in cm
    const double wmax = j.max_frequency();
    const double scale = j.feature_scale();

    // Same interval: int_0^L du (L - u) alpha(u).
    {
        const int panels = std::max(1, static_cast<int>(std::ceil(wmax / std::min(scale, 2.0 * kPi / len))));
        const double re = integrate(
            [&](double w) {
                const double s = sinc(0.5 * w * len);
                return thermal_weight(j, beta, w) * 0.5 * len * len * s * s;
            },
            0.0, wmax, rel_tol, panels);
        const double im = integrate(
            [&](double w) { return j.over_omega(w) * len * sin_minus_id_over_x(w * len); }, 0.0, wmax, rel_tol,
            panels);
        out.eta[0] = Complex(re, im) / kPi;
    }
    // Disjoint intervals d steps apart: L^2 sinc^2(wL/2) e^{-i w d L}.
    for (int d = 1; d <= memory; ++d) {
        const double shift = d * len;
        const int panels = std::clamp(
            static_cast<int>(std::ceil(wmax / std::min(scale, 2.0 * kPi / (shift + len)))), 1, 20000);
        const double re = integrate(
            [&](double w) {
                const double s = sinc(0.5 * w * len);
                return thermal_weight(j, beta, w) * len * len * s * s * std::cos(w * shift);
            },
            0.0, wmax, rel_tol, panels);
        const double im = integrate(
            [&](double w) {
                const double s = sinc(0.5 * w * len);
                return -j(w) * len * len * s * s * std::sin(w * shift);
            },
            0.0, wmax, rel_tol, panels);
        out.eta[static_cast<std::size_t>(d)] = Complex(re, im) / kPi;
    }
    return out;
}

}  // namespace pild::bath
