// nonhermitian.hpp — drain-only effective non-Hermitian Hamiltonians and the comparison of
// the Lindblad and non-Hermitian state-to-state pipelines.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pild/model.hpp"
#include "pild/pathint.hpp"
#include "pild/s2s.hpp"

namespace pild {

/// How a drain of timescale T shifts the energy of the state it empties.
enum class LossConvention {
    effective,  // -i hbar / (2T) per drain term: H - (i hbar / 2) sum L^dag L; population decays as e^{-t/T}
    prescribed  // -i pi hbar / T: population decays as e^{-2 pi t / T}
};

LossConvention parse_loss_convention(const std::string& name);
const char* loss_convention_name(LossConvention c);

/// H - (i hbar / 2) sum_n L_n^dag L_n (or the prescribed shift) on the model basis.
/// Throws std::invalid_argument for any term that adds an excitation (a pump).
Matrix effective_hamiltonian(const SystemModel& model, const std::vector<JumpOperator>& jumps,
                             LossConvention convention = LossConvention::effective);

/// Model with the effective Hamiltonian and without the ground state.
SystemModel nonhermitian_model(const SystemModel& model, const std::vector<JumpOperator>& jumps,
                               LossConvention convention = LossConvention::effective);

struct ComparisonSettings {
    double dt_fs = 4.0;
    int memory = 50;
    int steps = 250;
    TempoSettings tempo;
    LossConvention convention = LossConvention::effective;
    LindbladSplitting splitting = LindbladSplitting::generator;
};

struct ObservableDeviation {
    std::string name;
    double max_abs = 0.0;
};

struct ComparisonReport {
    std::vector<double> time_fs;
    std::vector<std::string> names;                 // observable names, one column each
    std::vector<std::vector<double>> lindblad;      // [observable][time]
    std::vector<std::vector<double>> nonhermitian;  // [observable][time]
    std::vector<ObservableDeviation> deviations;
    std::vector<double> nonhermitian_trace;
    RDMTrajectory lindblad_trajectory{0.0, {}};
    RDMTrajectory nonhermitian_trajectory{0.0, {}};
    double max_deviation() const;

    void write_csv(std::ostream& out, std::size_t stride = 1) const;
    void write_summary(std::ostream& out) const;
};

/// Runs PILD with the drains as Lindblad operators and the non-Hermitian engine on the
/// ground-free basis, then compares populations, Hamiltonian flows between excited states and
/// losses (Lindblad P_{0<-j} against |P_{j<-j}|). The Lindblad ground population is set
/// against the norm lost by the non-Hermitian run, 1 - tr rho.
ComparisonReport compare_methods(const SystemModel& model, const std::vector<JumpOperator>& jumps,
                                 const BathSpec& bath, const DensityMatrix& rho0,
                                 const ComparisonSettings& settings);

}  // namespace pild
