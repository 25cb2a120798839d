#include <cmath>
#include <fstream>

#include "doctest.h"
#include "pild/bath.hpp"

using namespace pild;
using bath::Ohmic;
using bath::SpectralDensity;

namespace {

const SpectralDensity kOhmic(Ohmic{0.121, 900.0});

// Composite Simpson rule, used as an independent quadrature.
template <class F>
double simpson(F f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(units::kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace

TEST_CASE("Ohmic spectral density") {
    CHECK(kOhmic(0.0) == 0.0);
    CHECK(kOhmic(450.0) > 0.0);
    CHECK_THROWS_AS(kOhmic(-1.0), std::domain_error);
    // 2 xi w_c
    CHECK(kOhmic.reorganization_energy() == doctest::Approx(217.8).epsilon(1e-6));
    CHECK(kOhmic.reorganization_energy() == doctest::Approx(2.0 * 0.121 * 900.0).epsilon(1e-6));

    double best = 0.0, arg = 0.0;
    for (double w = 0.0; w < 5000.0; w += 0.5) {
        if (kOhmic(w) > best) {
            best = kOhmic(w);
            arg = w;
        }
    }
    CHECK(arg == doctest::Approx(900.0).epsilon(1e-3));
    CHECK(kOhmic.over_omega(0.0) == doctest::Approx(2.0 * units::kPi * 0.121));
}

TEST_CASE("tabulated spectral density from file") {
    const auto path = std::filesystem::temp_directory_path() / "pild_test_sd.txt";
    {
        std::ofstream out(path);
        out << "# w J\n0 0\n100 50\n200 0\n";
    }
    const auto j = SpectralDensity::from_file(path);
    CHECK(j(50.0) == doctest::Approx(25.0));
    CHECK(j(150.0) == doctest::Approx(25.0));
    CHECK(j(500.0) == 0.0);
    // (1/pi) int J/w; piecewise-linear, integrated here with a fine Simpson grid.
    const double oracle = simpson([&](double w) { return w < 100 ? 0.5 : (200.0 - w) / 2.0 / w; }, 0.0, 200.0, 200000) /
                          units::kPi;
    CHECK(j.reorganization_energy() == doctest::Approx(oracle).epsilon(1e-6));
    std::filesystem::remove(path);

    CHECK_THROWS(SpectralDensity::from_file("/nonexistent/sd.txt"));
}

TEST_CASE("bath correlation function") {
    const bath::BathCorrelation alpha(kOhmic, 300.0);
    CHECK(alpha(0.0).imag() == 0.0);
    for (double t : {1.0, 7.5, 40.0}) {
        const Complex a = alpha(t), b = alpha(-t);
        CHECK(std::abs(a - std::conj(b)) < 1e-12 * std::abs(a));
    }
    // Re alpha(0) = (1/pi) int J coth(beta w / 2) dw against a dense Simpson grid.
    const double beta = units::beta(300.0);
    const double oracle =
        simpson([&](double w) { return w == 0.0 ? 2.0 * 0.121 * 2.0 / beta * units::kPi
                                                : kOhmic(w) / std::tanh(0.5 * beta * w); },
                0.0, 900.0 * 45.0, 400000) /
        units::kPi;
    CHECK(alpha(0.0).real() == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("eta coefficients against direct double integrals of alpha") {
    const double dt = 4.0;
    const auto eta = bath::eta_coefficients(kOhmic, 300.0, dt, 50);
    REQUIRE(eta.eta.size() == 51);
    const bath::BathCorrelation alpha(kOhmic, 300.0);
    std::vector<double> x, w;
    gauss_legendre(24, x, w);
    const double hbar2 = units::kHbar * units::kHbar;

    // eta_d = hbar^-2 int_0^dt int_0^dt alpha(d dt + u - v) du dv
    for (int d : {1, 3, 8}) {
        Complex sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j)
                sum += w[i] * w[j] * alpha(d * dt + 0.5 * dt * (x[i] - x[j]));
        sum *= 0.25 * dt * dt / hbar2;
        CHECK(std::abs(eta[d] - sum) < 1e-8 * std::abs(sum));
    }
    // eta_0 = hbar^-2 int_0^dt (dt - u) alpha(u) du
    Complex same = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = 0.5 * dt * (x[i] + 1.0);
        same += w[i] * (dt - u) * alpha(u);
    }
    same *= 0.5 * dt / hbar2;
    CHECK(std::abs(eta[0] - same) < 1e-8 * std::abs(same));

    CHECK(std::abs(eta[50]) < 1e-3 * std::abs(eta[0]));
    CHECK(eta[51] == Complex(0.0));
}

TEST_CASE("eta coefficients: linearity and zero bath") {
    const auto a = bath::eta_coefficients(SpectralDensity(Ohmic{0.121, 900.0}), 300.0, 2.0, 10);
    const auto b = bath::eta_coefficients(SpectralDensity(Ohmic{0.363, 900.0}), 300.0, 2.0, 10);
    for (int d = 0; d <= 10; ++d) CHECK(std::abs(b[d] - 3.0 * a[d]) < 1e-9 * std::abs(b[d]));

    const auto zero = bath::eta_coefficients(SpectralDensity(Ohmic{0.0, 900.0}), 300.0, 2.0, 10);
    for (auto e : zero.eta) CHECK(e == Complex(0.0));

    CHECK_THROWS_AS(bath::eta_coefficients(kOhmic, 300.0, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(bath::eta_coefficients(kOhmic, 300.0, 2.0, 0), std::invalid_argument);
}

TEST_CASE("influence of a constant real path does not amplify") {
    // A path held on one branch (s+ = 1, s- = 0) for N points: log F = -sum_{k>=k'} eta_{k-k'}.
    const auto eta = bath::eta_coefficients(kOhmic, 300.0, 4.0, 50);
    for (int n : {1, 5, 20, 80}) {
        Complex log_f = 0.0;
        for (int d = 0; d < n && d <= 50; ++d) log_f -= static_cast<double>(n - d) * eta[d];
        CHECK(std::exp(log_f.real()) <= 1.0);
    }
}
