#include "doctest.h"
#include "pild/model.hpp"

using namespace pild;

TEST_CASE("excitonic dimer Hamiltonian") {
    const auto m = build_excitonic_nmer(2, 1000.0, 181.5);
    REQUIRE(m.dim() == 4);
    CHECK(m.labels == std::vector<std::string>{"gg", "ge", "eg", "ee"});
    const auto eg = m.index_of("eg"), ge = m.index_of("ge"), ee = m.index_of("ee");
    CHECK(m.hamiltonian(eg, ge) == Complex(-181.5));
    CHECK(m.hamiltonian(ge, eg) == Complex(-181.5));
    CHECK(m.hamiltonian(ee, ee) == Complex(2000.0));
    CHECK(m.hamiltonian(0, 0) == Complex(0.0));
    CHECK(m.is_hermitian(0.0));
    CHECK(m.ground == std::optional<std::size_t>(0));
    CHECK(m.monomers[eg] == std::set<int>{1});
    CHECK(m.bath_count() == 2);
    CHECK(m.has_diagonal_coupling());
}

TEST_CASE("excitonic monomer and trimer") {
    const auto mono = build_excitonic_nmer(1, 1000.0, 181.5);
    REQUIRE(mono.dim() == 2);
    CHECK(mono.hamiltonian(0, 1) == Complex(0.0));
    CHECK(mono.hamiltonian(1, 1) == Complex(1000.0));

    const auto tri = build_excitonic_nmer(3, 1000.0, 181.5);
    REQUIRE(tri.dim() == 8);
    CHECK(tri.hamiltonian(tri.index_of("egg"), tri.index_of("gge")) == Complex(0.0));
    CHECK(tri.hamiltonian(tri.index_of("egg"), tri.index_of("geg")) == Complex(-181.5));
    CHECK(tri.hamiltonian(tri.index_of("eeg"), tri.index_of("ege")) == Complex(-181.5));
    CHECK(tri.hamiltonian(tri.index_of("eee"), tri.index_of("eee")) == Complex(3000.0));
    CHECK(tri.is_hermitian(0.0));

    // Couplings are the "monomer j excited" projectors and commute pairwise.
    for (const auto& a : tri.couplings)
        for (const auto& b : tri.couplings) CHECK((a.op * b.op - b.op * a.op).norm() == 0.0);
    CHECK(tri.couplings[0].op(tri.index_of("egg"), tri.index_of("egg")) == Complex(1.0));
    CHECK(tri.couplings[0].op(tri.index_of("geg"), tri.index_of("geg")) == Complex(0.0));

    CHECK_THROWS_AS(build_excitonic_nmer(0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("polaritonic trimer") {
    PolaritonParams p;
    p.rabi = 100.0;
    const auto m = build_polaritonic_trimer(p);
    REQUIRE(m.dim() == 5);
    CHECK(m.labels == std::vector<std::string>{"0", "1", "2", "3", "c"});
    CHECK(m.hamiltonian(m.index_of("1"), m.index_of("c")) == Complex(100.0));
    CHECK(m.hamiltonian(m.index_of("1"), m.index_of("3")) == Complex(0.0));
    CHECK(m.hamiltonian(m.index_of("2"), m.index_of("3")) == Complex(-181.5));
    CHECK(m.hamiltonian.row(0).norm() == 0.0);
    CHECK(m.hamiltonian.col(0).norm() == 0.0);
    REQUIRE(m.couplings.size() == 3);
    for (const auto& c : m.couplings) {
        CHECK(c.op(0, 0) == Complex(0.0));
        CHECK(c.op(4, 4) == Complex(0.0));
    }

    p.include_ground = false;
    const auto no_ground = build_polaritonic_trimer(p);
    CHECK(no_ground.dim() == 4);
    CHECK_FALSE(no_ground.ground.has_value());
}

TEST_CASE("decoupled cavity reduces to the excitonic chain") {
    PolaritonParams p;
    p.epsilon = 1000.0;
    const auto pol = build_polaritonic_trimer(p);
    const auto tri = build_excitonic_nmer(3, 1000.0, 181.5);
    const std::vector<std::string> chain = {"egg", "geg", "gge"};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            CHECK(pol.hamiltonian(a + 1, b + 1) == tri.hamiltonian(tri.index_of(chain[a]), tri.index_of(chain[b])));
}

TEST_CASE("pump and drain operators") {
    const auto m = build_excitonic_nmer(2, 1000.0, 181.5);
    const auto pump = pump_operator(m, 1, 300.0);
    REQUIRE(pump.terms.size() == 2);
    CHECK(pump.terms[0].initial == m.index_of("gg"));
    CHECK(pump.terms[0].final == m.index_of("eg"));
    CHECK(pump.terms[1].initial == m.index_of("ge"));
    CHECK(pump.terms[1].final == m.index_of("ee"));
    CHECK(pump.timescale_fs == 300.0);
    CHECK_NOTHROW(validate_jump(pump, 4));

    const auto drain = drain_operator(m, 2, 300.0);
    REQUIRE(drain.terms.size() == 2);
    CHECK(drain.terms[0].initial == m.index_of("ge"));
    CHECK(drain.terms[0].final == m.index_of("gg"));
    CHECK(drain.terms[1].initial == m.index_of("ee"));
    CHECK(drain.terms[1].final == m.index_of("eg"));

    const Matrix lp = jump_matrix(pump, 4);
    CHECK((lp.array() != Complex(0.0)).count() == 2);
    CHECK(lp(m.index_of("eg"), m.index_of("gg")).real() == doctest::Approx(1.0 / std::sqrt(300.0)));
    const Matrix ld = jump_matrix(drain_operator(m, 1, 300.0), 4);
    CHECK((ld - lp.adjoint()).norm() == 0.0);

    CHECK_THROWS_AS(pump_operator(m, 3, 300.0), std::out_of_range);
    CHECK_THROWS_AS(drain_operator(m, 0, 300.0), std::out_of_range);
}

TEST_CASE("polaritonic loss operators") {
    PolaritonParams p;
    const auto m = build_polaritonic_trimer(p);
    const auto loss3 = transition_operator(m, "3", "0", 300.0);
    REQUIRE(loss3.terms.size() == 1);
    CHECK(loss3.terms[0].initial == 3);
    CHECK(loss3.terms[0].final == 0);
    const auto lossc = transition_operator(m, "c", "0", 600.0);
    CHECK(lossc.terms[0].initial == 4);
    CHECK(jump_matrix(lossc, 5)(0, 4).real() == doctest::Approx(1.0 / std::sqrt(600.0)));
    CHECK_THROWS_AS(transition_operator(m, "4", "0", 300.0), std::invalid_argument);
}

TEST_CASE("jump operator restrictions") {
    JumpOperator empty{"none", 100.0, {}};
    CHECK(jump_matrix(empty, 3).norm() == 0.0);

    JumpOperator single{"one", 300.0, {{1.0, 0, 1}}};
    const Matrix l = jump_matrix(single, 2);
    CHECK(l(1, 0).real() == doctest::Approx(std::pow(300.0, -0.5)));
    CHECK(std::abs(l(0, 1)) == 0.0);

    JumpOperator shared{"shared", 100.0, {{1.0, 0, 2}, {1.0, 1, 2}}};
    const auto why = jump_violation(shared, 3);
    REQUIRE(why.has_value());
    CHECK(why->find("share final state") != std::string::npos);
    CHECK(why->find("terms 0") != std::string::npos);
    CHECK_THROWS_AS(validate_jump(shared, 3), std::invalid_argument);

    JumpOperator swap{"swap", 100.0, {{1.0, 0, 1}, {1.0, 1, 0}}};
    CHECK_FALSE(jump_violation(swap, 2).has_value());

    JumpOperator bad_time{"t", 0.0, {{1.0, 0, 1}}};
    CHECK(jump_violation(bad_time, 2).has_value());
    JumpOperator outside{"o", 1.0, {{1.0, 0, 5}}};
    CHECK(jump_violation(outside, 2).has_value());
}
