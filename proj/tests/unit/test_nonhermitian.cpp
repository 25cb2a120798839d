#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pild/nonhermitian.hpp"

using namespace pild;

namespace {

SystemModel polariton() {
    PolaritonParams p;
    p.rabi = 100.0;
    return build_polaritonic_trimer(p);
}

std::vector<JumpOperator> losses(const SystemModel& m) {
    return {transition_operator(m, "3", "0", 300.0), transition_operator(m, "c", "0", 600.0)};
}

}  // namespace

TEST_CASE("effective Hamiltonian shifts") {
    const auto m = polariton();
    const auto i3 = static_cast<Eigen::Index>(m.index_of("3"));
    const auto ic = static_cast<Eigen::Index>(m.index_of("c"));

    CHECK((effective_hamiltonian(m, {}) - m.hamiltonian).norm() == 0.0);

    const Matrix one = effective_hamiltonian(m, {transition_operator(m, "3", "0", 300.0)});
    CHECK(one(i3, i3).imag() == doctest::Approx(-units::kHbar / 600.0));
    CHECK(one(i3, i3).real() == doctest::Approx(m.hamiltonian(i3, i3).real()));
    Matrix rest = one - m.hamiltonian;
    rest(i3, i3) = 0.0;
    CHECK(rest.norm() == 0.0);

    // Shifts of drains on distinct states add independently: compare with H - (i/2) sum L^dag L.
    const auto jumps = losses(m);
    Matrix expected = m.hamiltonian;
    for (const auto& op : jumps) {
        const Matrix l = jump_matrix(op, m.dim());
        expected -= Complex(0.0, 0.5 * units::kHbar) * (l.adjoint() * l);
    }
    const Matrix both = effective_hamiltonian(m, jumps);
    CHECK((both - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(both(ic, ic).imag() == doctest::Approx(-units::kHbar / 1200.0));

    // Anti-Hermitian part is negative semidefinite.
    const Matrix anti = (both - both.adjoint()) / Complex(0.0, 2.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(anti);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-14);

    const Matrix prescribed = effective_hamiltonian(m, jumps, LossConvention::prescribed);
    CHECK(prescribed(i3, i3).imag() == doctest::Approx(-units::kPi * units::kHbar / 300.0));
    CHECK(parse_loss_convention("prescribed") == LossConvention::prescribed);
    CHECK_THROWS_AS(parse_loss_convention("other"), std::invalid_argument);
}

TEST_CASE("pumps are rejected") {
    const auto dimer = build_excitonic_nmer(2, 1000.0, 181.5);
    CHECK_NOTHROW(effective_hamiltonian(dimer, {drain_operator(dimer, 1, 300.0)}));
    try {
        effective_hamiltonian(dimer, {pump_operator(dimer, 1, 300.0)});
        FAIL("pump accepted");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("phenomenologically incorrect") != std::string::npos);
    }
    const auto m = polariton();
    CHECK_THROWS_AS(effective_hamiltonian(m, {transition_operator(m, "0", "c", 600.0)}), std::invalid_argument);
    const BathSpec bath{bath::SpectralDensity(bath::Ohmic{0.121, 900.0}), 300.0};
    ComparisonSettings s;
    s.memory = 2;
    s.steps = 4;
    CHECK_THROWS_AS(compare_methods(dimer, {pump_operator(dimer, 1, 300.0)}, bath, DensityMatrix::pure(1, dimer.labels), s),
                    std::invalid_argument);
}

TEST_CASE("ground-free model") {
    const auto m = polariton();
    const auto nh = nonhermitian_model(m, losses(m));
    CHECK(nh.dim() == m.dim() - 1);
    CHECK(std::find(nh.labels.begin(), nh.labels.end(), "0") == nh.labels.end());
    CHECK_FALSE(nh.ground.has_value());
    CHECK(nh.bath_count() == m.bath_count());
    const auto a = static_cast<Eigen::Index>(nh.index_of("3"));
    const auto b = static_cast<Eigen::Index>(m.index_of("3"));
    CHECK(nh.hamiltonian(a, a).imag() == doctest::Approx(-units::kHbar / 600.0));
    CHECK(nh.hamiltonian(a, static_cast<Eigen::Index>(nh.index_of("c"))) ==
          m.hamiltonian(b, static_cast<Eigen::Index>(m.index_of("c"))));
}

TEST_CASE("bath-free drain: Lindblad and non-Hermitian agree") {
    // Two-level drain: P_e = exp(-t/T) from both, in closed form and numerically.
    SystemModel m;
    m.hamiltonian = Matrix::Zero(2, 2);
    m.hamiltonian(1, 1) = 500.0;
    m.labels = {"0", "e"};
    m.ground = 0;
    const double T = 300.0;
    const std::vector<JumpOperator> jumps = {transition_operator(m, "e", "0", T)};
    const auto lind = propagate_lindblad_reference(m.hamiltonian, jumps, DensityMatrix::pure(1, m.labels), 5.0, 200);
    const Matrix heff = effective_hamiltonian(m, jumps);
    const Matrix heff_p = effective_hamiltonian(m, jumps, LossConvention::prescribed);
    for (std::size_t k = 0; k < lind.size(); k += 20) {
        const double t = lind.time(k);
        const Matrix u = propagator(heff, t);
        const double nh = std::norm(u(1, 1));
        CHECK(lind[k](1, 1).real() == doctest::Approx(std::exp(-t / T)).epsilon(1e-10));
        CHECK(nh == doctest::Approx(std::exp(-t / T)).epsilon(1e-12));
        CHECK(std::norm(propagator(heff_p, t)(1, 1)) == doctest::Approx(std::exp(-2.0 * units::kPi * t / T)).epsilon(1e-12));
    }

    // Polariton with both losses: the excited block of the Lindblad solution is the
    // non-Hermitian one.
    const auto p = polariton();
    const auto pj = losses(p);
    const auto nh = nonhermitian_model(p, pj);
    const auto ref = propagate_lindblad_reference(p.hamiltonian, pj, DensityMatrix::pure(p.index_of("1"), p.labels), 4.0, 100);
    Matrix psi = Matrix::Zero(nh.dim(), nh.dim());
    psi(static_cast<Eigen::Index>(nh.index_of("1")), static_cast<Eigen::Index>(nh.index_of("1"))) = 1.0;
    const Matrix u = propagator(nh.hamiltonian, 4.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        for (std::size_t a = 0; a < nh.labels.size(); ++a)
            for (std::size_t b = 0; b < nh.labels.size(); ++b) {
                const auto la = static_cast<Eigen::Index>(p.index_of(nh.labels[a]));
                const auto lb = static_cast<Eigen::Index>(p.index_of(nh.labels[b]));
                worst = std::max(worst, std::abs(ref[k](la, lb) - psi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
            }
        psi = u * psi * u.adjoint();
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("method comparison with a bath") {
    const auto m = polariton();
    const BathSpec bath{bath::SpectralDensity(bath::Ohmic{0.121, 900.0}), 300.0};
    ComparisonSettings s;
    s.dt_fs = 4.0;
    s.memory = 5;
    s.steps = 100;
    s.tempo.svd_cutoff = 1e-9;
    const auto rep = compare_methods(m, losses(m), bath, DensityMatrix::pure(m.index_of("1"), m.labels), s);

    CHECK(rep.time_fs.size() == 101);
    // Non-Hermitian trace strictly non-increasing; the Lindblad one constant.
    for (std::size_t k = 1; k < rep.nonhermitian_trace.size(); ++k)
        CHECK(rep.nonhermitian_trace[k] <= rep.nonhermitian_trace[k - 1] + 1e-12);
    CHECK(rep.nonhermitian_trace.back() < 0.9);
    for (double tr : rep.lindblad_trajectory.trace()) CHECK(std::abs(tr - 1.0) < 1e-6);

    bool saw_ground = false, saw_loss = false, saw_flow = false;
    for (const auto& d : rep.deviations) {
        saw_ground = saw_ground || d.name == "P_0";
        saw_loss = saw_loss || d.name == "L_3" || d.name == "L_c";
        saw_flow = saw_flow || d.name.find("<-") != std::string::npos;
    }
    CHECK(saw_ground);
    CHECK(saw_loss);
    CHECK(saw_flow);
    // Same physics up to the splitting of the dissipator from the path sum.
    CHECK(rep.max_deviation() < 1e-2);

    std::ostringstream csv, txt;
    rep.write_csv(csv, 10);
    rep.write_summary(txt);
    CHECK(csv.str().rfind("time_fs,lindblad:P_0,nonhermitian:P_0", 0) == 0);
    CHECK(txt.str().find("overall max deviation") != std::string::npos);

    // The prescribed shift drains 2 pi times faster and cannot match.
    s.convention = LossConvention::prescribed;
    s.steps = 50;
    const auto off = compare_methods(m, losses(m), bath, DensityMatrix::pure(m.index_of("1"), m.labels), s);
    CHECK(off.max_deviation() > 0.05);
}
