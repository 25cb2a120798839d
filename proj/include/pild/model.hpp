// model.hpp — system Hamiltonians, bath coupling operators and Lindblad jump operators

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pild/core.hpp"

namespace pild {

/// S_j coupling the system to bath `bath` (index into the bath list of a run).
struct CouplingOperator {
    std::size_t bath = 0;
    Matrix op;

    bool is_diagonal(double tol = 1e-14) const;
    Eigen::VectorXd diagonal() const { return op.diagonal().real(); }
};

struct SystemModel {
    Matrix hamiltonian;  // cm^-1
    std::vector<std::string> labels;
    std::vector<CouplingOperator> couplings;
    std::optional<std::size_t> ground;
    // Excited monomers (1-based) for every basis state; empty when not an aggregate state.
    std::vector<std::set<int>> monomers;
    int monomer_count = 0;

    Eigen::Index dim() const { return hamiltonian.rows(); }
    std::size_t index_of(const std::string& label) const;
    std::size_t bath_count() const;
    bool has_diagonal_coupling() const;
    bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect(hamiltonian) <= tol; }
    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;
};

/// Full 2^N-dimensional Frenkel aggregate. Basis labels are strings over {g, e}
/// (monomer 1 first), ordered lexicographically with g < e.
SystemModel build_excitonic_nmer(int n_monomers, double epsilon, double coupling_h);

struct PolaritonParams {
    double epsilon_ground = 0.0;
    double epsilon = 0.0;
    double coupling_h = 181.5;
    double cavity = 0.0;  // hbar * omega_c in cm^-1
    double rabi = 0.0;    // Omega
    bool include_ground = true;
};

/// Three monomers coupled to one cavity mode, basis {0, 1, 2, 3, c}.
SystemModel build_polaritonic_trimer(const PolaritonParams& p);

struct JumpTerm {
    Complex coefficient = 1.0;
    std::size_t initial = 0;
    std::size_t final = 0;
};

/// L = T^{-1/2} sum_j c_j |f_j><i_j|
struct JumpOperator {
    std::string name;
    double timescale_fs = 0.0;
    std::vector<JumpTerm> terms;
};

/// Empty when the operator is admissible, otherwise a description of the violation.
std::optional<std::string> jump_violation(const JumpOperator& op, std::size_t dim);
void validate_jump(const JumpOperator& op, std::size_t dim);

JumpOperator pump_operator(const SystemModel& model, int site, double timescale_fs);
JumpOperator drain_operator(const SystemModel& model, int site, double timescale_fs);
JumpOperator transition_operator(const SystemModel& model, const std::string& from,
                                 const std::string& to, double timescale_fs);

Matrix jump_matrix(const JumpOperator& op, Eigen::Index dim);

}  // namespace pild
