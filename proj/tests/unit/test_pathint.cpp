#include <random>
#include <sstream>

#include "doctest.h"
#include "pild/pathint.hpp"
#include "test_util.hpp"

using namespace pild;

namespace {

const BathSpec kBath{bath::SpectralDensity(bath::Ohmic{0.121, 900.0}), 300.0};

SystemModel spin_boson() {
    SystemModel m;
    m.hamiltonian = Matrix::Zero(2, 2);
    m.hamiltonian(0, 1) = m.hamiltonian(1, 0) = -181.5;
    m.labels = {"1", "2"};
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = -1.0;
    m.couplings.push_back({0, s});
    return m;
}

double max_diff(const DynamicalMapSeries& a, const DynamicalMapSeries& b) {
    double worst = 0.0;
    for (int k = 0; k <= std::min(a.steps(), b.steps()); ++k)
        worst = std::max(worst, testutil::max_abs(a.maps[k].matrix() - b.maps[k].matrix()));
    return worst;
}

}  // namespace

TEST_CASE("bare propagator") {
    CHECK(testutil::max_abs(bare_propagator(Matrix::Zero(3, 3), 2.0).matrix() - Matrix::Identity(9, 9)) < 1e-15);

    const double h = 181.5, dt = 1.3;
    Matrix ham = Matrix::Zero(2, 2);
    ham(0, 1) = ham(1, 0) = -h;
    const auto e = bare_propagator(ham, dt);
    Matrix rho = Matrix::Zero(2, 2);
    rho(0, 0) = 1.0;
    for (int n = 1; n <= 40; ++n) {
        rho = e.apply(rho);
        const double expected = std::pow(std::cos(h * n * dt / units::kHbar), 2);
        CHECK(rho(0, 0).real() == doctest::Approx(expected).epsilon(1e-10));
    }

    std::mt19937 rng(5);
    const Matrix herm = testutil::random_hermitian(4, rng);
    const auto u = bare_propagator(herm, 3.0);
    const Matrix r = testutil::random_density(4, rng);
    CHECK(std::abs(u.apply(r).trace() - r.trace()) < 1e-12);
    CHECK_THROWS_AS(bare_propagator(herm, 0.0), std::invalid_argument);
}

TEST_CASE("tensor network equals brute force for spin-boson") {
    const auto m = spin_boson();
    const auto etas = eta_for_model(m, kBath, 4.0, 6);
    const auto brute = brute_force_maps(m, etas, 4.0, 6);
    const auto tempo = tempo_maps(m, etas, 4.0, 6, {1e-14, 256});
    CHECK(max_diff(brute, tempo) < 1e-8);
    for (int k = 1; k <= 6; ++k) {
        CHECK(brute.maps[k].trace_defect() < 1e-8);
        CHECK(tempo.maps[k].trace_defect() < 1e-8);
    }
    CHECK(brute.provenance == "brute");
    CHECK(tempo.provenance.rfind("tempo", 0) == 0);
}

TEST_CASE("tensor network equals brute force for a three-state chain with two baths") {
    SystemModel m;
    m.hamiltonian = Matrix::Zero(3, 3);
    m.hamiltonian(0, 1) = m.hamiltonian(1, 0) = -120.0;
    m.hamiltonian(1, 2) = m.hamiltonian(2, 1) = -80.0;
    m.hamiltonian(2, 2) = 150.0;
    m.labels = {"a", "b", "c"};
    Matrix s0 = Matrix::Zero(3, 3), s1 = Matrix::Zero(3, 3);
    s0(0, 0) = 1.0;
    s1(2, 2) = 1.0;
    m.couplings = {{0, s0}, {1, s1}};
    const auto etas = eta_for_model(m, kBath, 3.0, 3);
    const auto brute = brute_force_maps(m, etas, 3.0, 4);
    const auto tempo = tempo_maps(m, etas, 3.0, 4, {1e-14, 256});
    CHECK(max_diff(brute, tempo) < 1e-8);
}

TEST_CASE("zero coupling reproduces bare propagation") {
    const auto m = spin_boson();
    const auto zero = eta_for_model(m, BathSpec{bath::SpectralDensity(bath::Ohmic{0.0, 900.0}), 300.0}, 4.0, 5);
    const auto brute = brute_force_maps(m, zero, 4.0, 5);
    const auto tempo = tempo_maps(m, zero, 4.0, 8);
    const Matrix e1 = bare_propagator(m.hamiltonian, 4.0).matrix();
    Matrix power = Matrix::Identity(4, 4);
    for (int k = 1; k <= 8; ++k) {
        power = e1 * power;
        if (k <= 5) CHECK(testutil::max_abs(brute.maps[k].matrix() - power) < 1e-13);
        CHECK(testutil::max_abs(tempo.maps[k].matrix() - power) < 1e-12);
    }
}

TEST_CASE("maps preserve Hermiticity and trace") {
    const auto m = build_excitonic_nmer(2, 1000.0, 181.5);
    const auto etas = eta_for_model(m, kBath, 4.0, 4);
    const auto maps = tempo_maps(m, etas, 4.0, 6);
    std::mt19937 rng(17);
    for (int k = 1; k <= 6; ++k) {
        CHECK(maps.maps[k].trace_defect() < 1e-8);
        const Matrix x = testutil::random_hermitian(4, rng);
        CHECK(hermiticity_defect(maps.maps[k].apply(x)) < 1e-8);
    }
}

TEST_CASE("one step with diagonal H leaves populations unchanged") {
    SystemModel m = spin_boson();
    m.hamiltonian = Matrix::Zero(2, 2);
    m.hamiltonian(1, 1) = 50.0;
    const auto etas = eta_for_model(m, kBath, 4.0, 2);
    const auto maps = brute_force_maps(m, etas, 4.0, 1);
    Matrix rho = Matrix::Zero(2, 2);
    rho(0, 0) = 0.3;
    rho(1, 1) = 0.7;
    rho(0, 1) = rho(1, 0) = 0.2;
    const Matrix out = maps.maps[1].apply(rho);
    CHECK(std::abs(out(0, 0) - 0.3) < 1e-14);
    CHECK(std::abs(out(1, 1) - 0.7) < 1e-14);
    CHECK(std::abs(out(0, 1)) < 0.2);
}

TEST_CASE("two half-strength baths on one site equal one full bath") {
    SystemModel one = spin_boson();
    const auto full = eta_for_model(one, kBath, 4.0, 4);
    SystemModel two = one;
    two.couplings.push_back({1, one.couplings[0].op});
    const BathSpec half{bath::SpectralDensity(bath::Ohmic{0.0605, 900.0}), 300.0};
    const auto halves = eta_for_model(two, half, 4.0, 4);
    REQUIRE(halves.size() == 2);
    const auto a = tempo_maps(one, full, 4.0, 6, {1e-14, 256});
    const auto b = tempo_maps(two, halves, 4.0, 6, {1e-14, 256});
    CHECK(max_diff(a, b) < 1e-8);
}

TEST_CASE("memory truncation converges") {
    const auto m = spin_boson();
    const double dt = 4.0;
    // sigma_z coupling to the full bath needs wide process-tensor bonds.
    const TempoSettings wide{1e-10, 1024};
    std::vector<DynamicalMapSeries> runs;
    for (int mem : {2, 4, 8, 16}) runs.push_back(tempo_maps(m, eta_for_model(m, kBath, dt, mem), dt, 16, wide));
    const auto ref = tempo_maps(m, eta_for_model(m, kBath, dt, 32), dt, 16, wide);
    double previous = 1.0;
    for (const auto& r : runs) {
        const double err = max_diff(r, ref);
        CHECK(err < previous);
        previous = err;
    }
    CHECK(previous < 1e-3);
}

TEST_CASE("non-Hermitian maps") {
    // Isolated level with Im(e) = -gamma decays as exp(-2 gamma t / hbar).
    SystemModel m;
    const double gamma = units::kPi * units::kHbar / 300.0;
    m.hamiltonian = Matrix::Zero(2, 2);
    m.hamiltonian(1, 1) = Complex(100.0, -gamma);
    m.labels = {"a", "b"};
    Matrix s = Matrix::Zero(2, 2);
    s(1, 1) = 1.0;
    m.couplings.push_back({0, s});
    const auto etas = eta_for_model(m, kBath, 4.0, 5);
    const auto maps = nonhermitian_maps(m, etas, 4.0, 25);
    CHECK(maps.nonhermitian);
    Matrix rho = Matrix::Zero(2, 2);
    rho(1, 1) = 1.0;
    double previous = 1.0;
    for (int k = 1; k <= 25; ++k) {
        const double p = maps.maps[k].apply(rho)(1, 1).real();
        CHECK(p == doctest::Approx(std::exp(-2.0 * units::kPi * 4.0 * k / 300.0)).epsilon(1e-10));
        CHECK(p <= previous);
        previous = p;
    }

    // Zero imaginary part: identical to the Hermitian engine.
    SystemModel herm = spin_boson();
    const auto e2 = eta_for_model(herm, kBath, 4.0, 3);
    CHECK(max_diff(nonhermitian_maps(herm, e2, 4.0, 5), tempo_maps(herm, e2, 4.0, 5)) == 0.0);

    SystemModel gain = m;
    gain.hamiltonian(1, 1) = Complex(100.0, 1.0);
    CHECK_THROWS_WITH_AS(nonhermitian_maps(gain, etas, 4.0, 3), doctest::Contains("gain"), std::invalid_argument);
}

TEST_CASE("map dump round trip") {
    const auto m = spin_boson();
    const auto maps = tempo_maps(m, eta_for_model(m, kBath, 4.0, 3), 4.0, 4);
    std::stringstream buf;
    maps.write(buf);
    const auto back = DynamicalMapSeries::read(buf);
    CHECK(back.steps() == 4);
    CHECK(back.dt_fs == 4.0);
    CHECK(back.provenance == maps.provenance);
    CHECK(max_diff(maps, back) == 0.0);

    std::stringstream junk("1 2 3\n");
    CHECK_THROWS_AS(DynamicalMapSeries::read(junk), std::invalid_argument);
}

TEST_CASE("engine guards") {
    const auto m = spin_boson();
    const auto etas = eta_for_model(m, kBath, 4.0, 6);
    CHECK_THROWS_AS(brute_force_maps(m, etas, 4.0, 20), std::invalid_argument);
    CHECK_THROWS_AS(tempo_maps(m, etas, 4.0, 10, {0.0, 256}), std::invalid_argument);
    CHECK_THROWS_AS(tempo_maps(m, etas, 4.0, 10, {1e-14, 2}), NumericalError);

    SystemModel offdiag = m;
    offdiag.couplings[0].op(0, 1) = offdiag.couplings[0].op(1, 0) = 1.0;
    CHECK_THROWS_AS(tempo_maps(offdiag, etas, 4.0, 2), std::invalid_argument);
}
