#include "pild/core.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace pild {

Vector vectorize(const Matrix& rho) {
    const auto n = rho.rows();
    if (rho.cols() != n) throw std::invalid_argument("vectorize: matrix is not square");
    Vector v(n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) v(liouville_index(i, j, n)) = rho(i, j);
    return v;
}

Matrix devectorize(const Vector& v, Eigen::Index dim) {
    if (dim * dim != v.size())
        throw std::invalid_argument("devectorize: length " + std::to_string(v.size()) +
                                    " is not " + std::to_string(dim) + "^2");
    Matrix rho(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) rho(i, j) = v(liouville_index(i, j, dim));
    return rho;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix sandwich(const Matrix& a, const Matrix& b) { return kron(a, b.conjugate()); }

double hermiticity_defect(const Matrix& m) {
    const double scale = std::max(m.norm(), 1e-300);
    return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

DensityMatrix::DensityMatrix(Matrix entries, std::vector<std::string> labels, const Tolerances& tol)
    : entries_(std::move(entries)), labels_(std::move(labels)) {
    const auto n = entries_.rows();
    if (n == 0 || entries_.cols() != n)
        throw std::invalid_argument("DensityMatrix: entries must be a non-empty square matrix");
    if (labels_.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
    }
    if (static_cast<Eigen::Index>(labels_.size()) != n)
        throw std::invalid_argument("DensityMatrix: label count does not match dimension");
    if (hermiticity_defect(entries_) > tol.hermiticity)
        throw std::invalid_argument("DensityMatrix: input is not Hermitian");
    const Complex tr = entries_.trace();
    if (std::abs(tr - 1.0) > tol.trace) {
        std::ostringstream os;
        os << "DensityMatrix: trace is " << tr.real() << " (expected 1)";
        throw std::invalid_argument(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.positivity)
        throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                    std::to_string(es.eigenvalues().minCoeff()));
}

DensityMatrix DensityMatrix::pure(Eigen::Index index, std::vector<std::string> labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (index < 0 || index >= n) throw std::out_of_range("DensityMatrix::pure: index out of range");
    Matrix m = Matrix::Zero(n, n);
    m(index, index) = 1.0;
    return DensityMatrix(std::move(m), std::move(labels));
}

SuperOperator::SuperOperator(Matrix m, double dt_fs) : m_(std::move(m)), dt_(dt_fs) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("SuperOperator: matrix not square");
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(m_.rows()))));
    if (d * d != m_.rows()) throw std::invalid_argument("SuperOperator: size is not a square number");
    dim_ = d;
}

SuperOperator SuperOperator::identity(Eigen::Index dim, double dt_fs) {
    return SuperOperator(Matrix::Identity(dim * dim, dim * dim), dt_fs);
}

double SuperOperator::trace_defect() const {
    // Tr(E(|i><j|)) must equal delta_ij for every matrix unit.
    double worst = 0.0;
    for (Eigen::Index i = 0; i < dim_; ++i) {
        for (Eigen::Index j = 0; j < dim_; ++j) {
            Complex tr = 0.0;
            const auto col = liouville_index(i, j, dim_);
            for (Eigen::Index k = 0; k < dim_; ++k) tr += m_(liouville_index(k, k, dim_), col);
            worst = std::max(worst, std::abs(tr - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

}  // namespace pild
