// core.hpp — units, dense complex matrices, superoperators and validated RDMs

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pild {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

// Energies in cm^-1, times in fs, temperatures in K.
namespace units {
// hbar = 1 / (2 pi c) with c in cm/fs.
inline constexpr double kSpeedOfLight = 2.99792458e-5;  // cm / fs
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHbar = 1.0 / (2.0 * kPi * kSpeedOfLight);  // cm^-1 fs
inline constexpr double kBoltzmann = 0.695034800;                   // cm^-1 / K

inline double beta(double temperature_K) { return 1.0 / (kBoltzmann * temperature_K); }
}  // namespace units

/// Numerical failures (divergence, trace drift, bond explosion).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double hermiticity = 1e-10;  // relative to the matrix norm
    double trace = 1e-10;
    double positivity = 1e-8;
};

// Row-major vectorization: vec(rho)[i * dim + j] = rho(i, j). With this
// convention vec(A rho B^dagger) = (A kron conj(B)) vec(rho).
Vector vectorize(const Matrix& rho);
Matrix devectorize(const Vector& v, Eigen::Index dim);
inline Eigen::Index liouville_index(Eigen::Index row, Eigen::Index col, Eigen::Index dim) {
    return row * dim + col;
}

Matrix kron(const Matrix& a, const Matrix& b);
/// Superoperator of rho -> A rho B^dagger.
Matrix sandwich(const Matrix& a, const Matrix& b);

double hermiticity_defect(const Matrix& m);

class DensityMatrix {
public:
    /// Validates Hermiticity, unit trace and positivity.
    DensityMatrix(Matrix entries, std::vector<std::string> labels, const Tolerances& tol = {});

    static DensityMatrix pure(Eigen::Index index, std::vector<std::string> labels);

    Eigen::Index dim() const { return entries_.rows(); }
    const Matrix& matrix() const { return entries_; }
    const std::vector<std::string>& labels() const { return labels_; }
    Vector vectorized() const { return vectorize(entries_); }

private:
    Matrix entries_;
    std::vector<std::string> labels_;
};

class SuperOperator {
public:
    SuperOperator() = default;
    SuperOperator(Matrix m, double dt_fs);

    static SuperOperator identity(Eigen::Index dim, double dt_fs = 0.0);

    Eigen::Index dim() const { return dim_; }
    double dt() const { return dt_; }
    const Matrix& matrix() const { return m_; }

    Matrix apply(const Matrix& rho) const { return devectorize(m_ * vectorize(rho), dim_); }

    /// Largest trace error over the matrix-unit basis.
    double trace_defect() const;
    bool is_trace_preserving(double tol = 1e-10) const { return trace_defect() <= tol; }

private:
    Matrix m_;
    Eigen::Index dim_ = 0;
    double dt_ = 0.0;
};

}  // namespace pild
