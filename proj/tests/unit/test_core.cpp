#include <random>

#include "doctest.h"
#include "pild/core.hpp"
#include "test_util.hpp"

using namespace pild;

TEST_CASE("unit system constants") {
    // hbar = 1.054571817e-34 J s; 1 cm^-1 = h c * 100 J with c = 299792458 m/s.
    const double hbar_si = 1.054571817e-34;
    const double cm1_in_joule = 6.62607015e-34 * 299792458.0 * 100.0;
    const double hbar_cm1_fs = hbar_si / cm1_in_joule * 1e15;
    CHECK(units::kHbar == doctest::Approx(hbar_cm1_fs).epsilon(1e-9));
    CHECK(units::kHbar == doctest::Approx(5308.8).epsilon(1e-4));
    CHECK(units::kBoltzmann * 300.0 == doctest::Approx(208.5).epsilon(1e-3));
    const double kb_si = 1.380649e-23;
    CHECK(units::kBoltzmann == doctest::Approx(kb_si / cm1_in_joule).epsilon(1e-8));
}

TEST_CASE("vectorization convention") {
    Matrix id = Matrix::Identity(2, 2) / 2.0;
    Vector v = vectorize(id);
    REQUIRE(v.size() == 4);
    CHECK(v(0) == Complex(0.5));
    CHECK(v(1) == Complex(0.0));
    CHECK(v(2) == Complex(0.0));
    CHECK(v(3) == Complex(0.5));

    Matrix asym(2, 2);
    asym << 1, 2, 3, 4;
    // Row-major: the (0, 1) element comes second.
    CHECK(vectorize(asym)(1) == Complex(2.0));
}

TEST_CASE("vectorize and devectorize are inverse") {
    std::mt19937 rng(7);
    const Matrix m = testutil::random_matrix(4, rng);
    CHECK(devectorize(vectorize(m), 4) == m);
    CHECK_THROWS_AS(devectorize(Vector::Zero(5), 2), std::invalid_argument);
    CHECK_THROWS_AS(vectorize(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("sandwich superoperator matches direct product") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = testutil::random_matrix(3, rng);
        const Matrix b = testutil::random_matrix(3, rng);
        const Matrix rho = testutil::random_matrix(3, rng);
        const Matrix direct = a * rho * b.adjoint();
        const Vector via = kron(a, b.conjugate()) * vectorize(rho);
        CHECK((devectorize(via, 3) - direct).cwiseAbs().maxCoeff() < 1e-13);
        CHECK((sandwich(a, b) - kron(a, b.conjugate())).norm() == 0.0);
    }
}

TEST_CASE("density matrix validation") {
    std::mt19937 rng(3);
    const Matrix rho = testutil::random_density(3, rng);
    CHECK_NOTHROW(DensityMatrix(rho, {"a", "b", "c"}));

    Matrix not_herm = rho;
    not_herm(0, 1) += Complex(0.0, 0.1);
    CHECK_THROWS_AS(DensityMatrix(not_herm, {}), std::invalid_argument);

    CHECK_THROWS_AS(DensityMatrix(2.0 * rho, {}), std::invalid_argument);

    Matrix negative = Matrix::Zero(2, 2);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix(negative, {}), std::invalid_argument);

    CHECK_THROWS_AS(DensityMatrix(rho, {"a"}), std::invalid_argument);

    const auto pure = DensityMatrix::pure(1, {"g", "e"});
    CHECK(pure.matrix()(1, 1) == Complex(1.0));
    CHECK_THROWS_AS(DensityMatrix::pure(2, {"g", "e"}), std::out_of_range);
}

TEST_CASE("superoperator trace preservation") {
    const auto id = SuperOperator::identity(3, 1.0);
    CHECK(id.is_trace_preserving());
    Matrix scaled = 0.9 * Matrix::Identity(9, 9);
    CHECK_FALSE(SuperOperator(scaled, 1.0).is_trace_preserving(1e-3));
    CHECK_THROWS_AS(SuperOperator(Matrix::Identity(5, 5), 1.0), std::invalid_argument);
}
