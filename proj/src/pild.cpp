#include "pild/pild.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace pild {

Eigen::Index TransferTensors::dim() const {
    if (tensors.empty()) return 0;
    return static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(tensors.front().rows()))));
}

TransferTensors transfer_tensors(const DynamicalMapSeries& maps, int m) {
    if (m < 1) throw std::invalid_argument("transfer_tensors: memory must be >= 1");
    if (maps.steps() < m) {
        throw std::invalid_argument("transfer_tensors: " + std::to_string(m) + " tensors need " + std::to_string(m) +
                                    " maps, only " + std::to_string(maps.steps()) + " available");
    }
    TransferTensors tt;
    tt.dt_fs = maps.dt_fs;
    for (int n = 1; n <= m; ++n) {
        Matrix t = maps.maps[static_cast<std::size_t>(n)].matrix();
        for (int k = 1; k < n; ++k)
            t.noalias() -= tt.tensors[static_cast<std::size_t>(k - 1)] * maps.maps[static_cast<std::size_t>(n - k)].matrix();
        tt.tensors.push_back(std::move(t));
    }
    return tt;
}

Matrix dissipator(const std::vector<JumpOperator>& jumps, Eigen::Index dim) {
    const Matrix id = Matrix::Identity(dim, dim);
    Matrix d = Matrix::Zero(dim * dim, dim * dim);
    for (const auto& op : jumps) {
        validate_jump(op, static_cast<std::size_t>(dim));
        const Matrix l = jump_matrix(op, dim);
        const Matrix ll = l.adjoint() * l;
        d += sandwich(l, l) - 0.5 * (sandwich(ll, id) + sandwich(id, ll.adjoint()));
    }
    return d;
}

Matrix lindblad_generator(const Matrix& hamiltonian, const std::vector<JumpOperator>& jumps) {
    const auto n = hamiltonian.rows();
    const Matrix id = Matrix::Identity(n, n);
    // vec(H rho - rho H) = (H (x) 1 - 1 (x) H^T) vec(rho) in the row-major convention.
    const Matrix comm = kron(hamiltonian, id) - kron(id, hamiltonian.transpose());
    return Complex(0.0, -1.0 / units::kHbar) * comm + dissipator(jumps, n);
}

RDMTrajectory::RDMTrajectory(double dt_fs, std::vector<std::string> labels)
    : dt_fs_(dt_fs), labels_(std::move(labels)) {}

std::vector<double> RDMTrajectory::population(std::size_t state) const {
    std::vector<double> out;
    out.reserve(states_.size());
    for (const auto& r : states_) out.push_back(r(static_cast<Eigen::Index>(state), static_cast<Eigen::Index>(state)).real());
    return out;
}

std::vector<double> RDMTrajectory::trace() const {
    std::vector<double> out;
    out.reserve(states_.size());
    for (const auto& r : states_) out.push_back(r.trace().real());
    return out;
}

void RDMTrajectory::write_csv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& elements,
                              std::size_t stride) const {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    auto find = [&](const std::string& l) {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == l) return i;
        throw std::invalid_argument("trajectory: unknown label '" + l + "'");
    };
    if (elements.empty()) {
        for (std::size_t a = 0; a < labels_.size(); ++a)
            for (std::size_t b = a; b < labels_.size(); ++b) idx.emplace_back(a, b);
    } else {
        for (const auto& [a, b] : elements) idx.emplace_back(find(a), find(b));
    }
    out << "time_fs";
    for (auto [a, b] : idx) {
        out << ",re(" << labels_[a] << '|' << labels_[b] << ')';
        if (a != b) out << ",im(" << labels_[a] << '|' << labels_[b] << ')';
    }
    out << '\n' << std::setprecision(12);
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t k = 0; k < states_.size(); k += stride) {
        out << time(k);
        for (auto [a, b] : idx) {
            const Complex v = states_[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            out << ',' << v.real();
            if (a != b) out << ',' << v.imag();
        }
        out << '\n';
    }
}

namespace {

void check_trace(const Matrix& rho, int step, double dt, const PropagationSettings& s) {
    const double tr = rho.trace().real();
    const double tol = s.trace_tolerance;
    const bool bad = s.trace_preserving ? std::abs(tr - 1.0) > tol : tr > 1.0 + tol;
    if (!std::isfinite(tr) || bad) {
        std::ostringstream os;
        os << "trace drift at step " << step << " (t = " << step * dt << " fs): tr rho = " << std::setprecision(10)
           << tr << ", tolerance " << tol << "; check map convergence (memory, svd_cutoff) and time step";
        throw NumericalError(os.str());
    }
}

}  // namespace

RDMTrajectory propagate_pild(const TransferTensors& tt, const std::vector<JumpOperator>& jumps,
                             const DensityMatrix& rho0, int steps, const PropagationSettings& settings) {
    if (tt.tensors.empty()) throw std::invalid_argument("propagate_pild: no transfer tensors");
    const Eigen::Index d = tt.dim();
    if (rho0.dim() != d) throw std::invalid_argument("propagate_pild: initial state dimension does not match maps");
    if (steps < 0) throw std::invalid_argument("propagate_pild: negative step count");

    const bool has_jumps = !jumps.empty();
    const int m = tt.memory();
    // Effective tensors: rho_n = sum_k tensors[k-1] rho_{n-k}.
    std::vector<Matrix> tensors = tt.tensors;
    if (has_jumps && settings.splitting == LindbladSplitting::dissipator) {
        const Matrix half = (0.5 * tt.dt_fs * dissipator(jumps, d)).exp();
        for (auto& t : tensors) t = half * t * half;
    } else if (has_jumps) {
        if (!settings.hamiltonian || settings.hamiltonian->rows() != d)
            throw std::invalid_argument("propagate_pild: generator splitting needs the system Hamiltonian");
        const Matrix lind = lindblad_generator(*settings.hamiltonian, jumps);
        const Matrix bare = lindblad_generator(*settings.hamiltonian, {});
        const bool spanning = settings.splitting == LindbladSplitting::spanning;
        Matrix left, right;
        for (int k = 1; k <= m; ++k) {
            if (k == 1 || spanning) {
                const double span = 0.5 * tt.dt_fs * (spanning ? k : 1);
                const Matrix full = (span * lind).exp();
                const Matrix unbare = (-span * bare).exp();
                left = full * unbare;
                right = unbare * full;
            }
            auto& t = tensors[static_cast<std::size_t>(k - 1)];
            t = left * t * right;
        }
    }

    RDMTrajectory traj(tt.dt_fs, rho0.labels());
    std::vector<Vector> history;
    history.reserve(static_cast<std::size_t>(steps) + 1);
    history.push_back(rho0.vectorized());
    traj.push_back(rho0.matrix());
    for (int n = 1; n <= steps; ++n) {
        Vector acc = Vector::Zero(d * d);
        for (int k = 1; k <= std::min(n, m); ++k)
            acc.noalias() += tensors[static_cast<std::size_t>(k - 1)] * history[static_cast<std::size_t>(n - k)];
        Matrix rho = devectorize(acc, d);
        check_trace(rho, n, tt.dt_fs, settings);
        history.push_back(std::move(acc));
        traj.push_back(std::move(rho));
    }
    return traj;
}

RDMTrajectory propagate_lindblad_reference(const Matrix& hamiltonian, const std::vector<JumpOperator>& jumps,
                                           const DensityMatrix& rho0, double dt_fs, int steps,
                                           const ReferenceSettings& settings) {
    const Eigen::Index d = hamiltonian.rows();
    if (rho0.dim() != d) throw std::invalid_argument("lindblad reference: initial state dimension does not match H");
    if (!(dt_fs > 0.0)) throw std::invalid_argument("lindblad reference: dt must be positive");
    std::vector<Matrix> ls, lls;
    for (const auto& op : jumps) {
        validate_jump(op, static_cast<std::size_t>(d));
        ls.push_back(jump_matrix(op, d));
        lls.push_back(ls.back().adjoint() * ls.back());
    }
    const Complex mi(0.0, -1.0 / units::kHbar);
    auto rhs = [&](const Matrix& r) {
        Matrix out = mi * (hamiltonian * r - r * hamiltonian);
        for (std::size_t n = 0; n < ls.size(); ++n)
            out += ls[n] * r * ls[n].adjoint() - 0.5 * (lls[n] * r + r * lls[n]);
        return out;
    };
    auto integrate = [&](Matrix r, int sub) {
        const double h = dt_fs / sub;
        for (int s = 0; s < sub; ++s) {
            const Matrix k1 = rhs(r);
            const Matrix k2 = rhs(r + 0.5 * h * k1);
            const Matrix k3 = rhs(r + 0.5 * h * k2);
            const Matrix k4 = rhs(r + h * k3);
            r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return r;
    };

    RDMTrajectory traj(dt_fs, rho0.labels());
    traj.push_back(rho0.matrix());
    Matrix rho = rho0.matrix();
    int sub = 1;
    for (int n = 1; n <= steps; ++n) {
        Matrix coarse = integrate(rho, sub);
        while (true) {
            Matrix fine = integrate(rho, 2 * sub);
            const double change = (fine - coarse).cwiseAbs().maxCoeff();
            if (!std::isfinite(change)) throw NumericalError("lindblad reference: non-finite state at step " + std::to_string(n));
            if (change <= settings.tolerance) {
                rho = std::move(fine);
                break;
            }
            sub *= 2;
            if (sub > settings.max_substeps) {
                std::ostringstream os;
                os << "lindblad reference: step halving did not converge at step " << n << " (change " << change
                   << " with " << sub / 2 << " substeps); reduce dt";
                throw NumericalError(os.str());
            }
            coarse = std::move(fine);
        }
        traj.push_back(rho);
    }
    return traj;
}

}  // namespace pild
