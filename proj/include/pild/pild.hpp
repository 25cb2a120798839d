// pild.hpp — transfer tensors and path-integral Lindblad propagation, plus a bath-free
// Lindblad integrator used as a reference.

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pild/core.hpp"
#include "pild/model.hpp"
#include "pild/pathint.hpp"

namespace pild {

struct TransferTensors {
    double dt_fs = 0.0;
    std::vector<Matrix> tensors;  // tensors[k - 1] = T_k

    int memory() const { return static_cast<int>(tensors.size()); }
    Eigen::Index dim() const;
};

/// T_1 = E(1), T_n = E(n) - sum_{k<n} T_k E(n-k), n <= m.
TransferTensors transfer_tensors(const DynamicalMapSeries& maps, int m);

/// Dissipator superoperator sum_n (L rho L^dag - {L^dag L, rho} / 2), row-major, in fs^-1.
Matrix dissipator(const std::vector<JumpOperator>& jumps, Eigen::Index dim);

/// Full Lindblad generator -i/hbar [H, .] + dissipator.
Matrix lindblad_generator(const Matrix& hamiltonian, const std::vector<JumpOperator>& jumps);

class RDMTrajectory {
public:
    RDMTrajectory(double dt_fs, std::vector<std::string> labels);

    double dt_fs() const { return dt_fs_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return states_.size(); }
    double time(std::size_t k) const { return dt_fs_ * static_cast<double>(k); }
    const Matrix& operator[](std::size_t k) const { return states_[k]; }
    const std::vector<Matrix>& states() const { return states_; }
    void push_back(Matrix rho) { states_.push_back(std::move(rho)); }

    std::vector<double> population(std::size_t state) const;
    std::vector<double> trace() const;

    std::map<std::string, std::string> metadata;

    /// Columns time_fs then re(a|b) and im(a|b) for each requested element; diagonal
    /// elements only contribute re(). Empty selection means every element with a <= b.
    void write_csv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& elements = {},
                   std::size_t stride = 1) const;

private:
    double dt_fs_;
    std::vector<std::string> labels_;
    std::vector<Matrix> states_;
};

enum class LindbladSplitting {
    generator,   // P = exp((L_H + D) dt/2) exp(-L_H dt/2): bare half steps of the maps swapped for full ones
    dissipator,  // P = exp(D dt/2)
    spanning,    // as generator, but T_k is dressed over its whole span k dt; dissipation then acts
                 // on the memory terms, so the population change is no longer the local flux sum
};

struct PropagationSettings {
    double trace_tolerance = 1e-4;  // abort when |tr rho - 1| exceeds this
    bool trace_preserving = true;   // false for non-Hermitian maps: only tr rho <= 1 is checked
    LindbladSplitting splitting = LindbladSplitting::generator;
    std::optional<Matrix> hamiltonian;  // required by the generator splitting when there are jumps
};

/// rho_n = P sum_k T_k P' rho_{n-k}: half a step of the Lindblad semigroup on either side of
/// each transfer-tensor step. With the generator splitting the bare half steps at the ends of
/// every map are divided out first, so without a bath the step is exactly exp(L dt).
RDMTrajectory propagate_pild(const TransferTensors& tt, const std::vector<JumpOperator>& jumps,
                             const DensityMatrix& rho0, int steps, const PropagationSettings& settings = {});

struct ReferenceSettings {
    double tolerance = 1e-12;  // max elementwise change between h and h/2 per output step
    int max_substeps = 1 << 16;
};

/// Classical RK4 on the Lindblad equation of the bare system, with step halving until
/// successive refinements agree.
RDMTrajectory propagate_lindblad_reference(const Matrix& hamiltonian, const std::vector<JumpOperator>& jumps,
                                           const DensityMatrix& rho0, double dt_fs, int steps,
                                           const ReferenceSettings& settings = {});

}  // namespace pild
