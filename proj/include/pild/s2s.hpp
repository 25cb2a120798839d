// s2s.hpp — source-resolved state-to-state population transport: Hamiltonian and Lindblad
// fluxes, their time integrals, and monomer-level aggregates.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pild/core.hpp"
#include "pild/model.hpp"
#include "pild/pild.hpp"

namespace pild {

/// d P_l / dt contributed by <l|H|r>: (2/hbar) Im(H_lr rho_rl), fs^-1. For l = r this is the
/// sink term (2/hbar) Im(H_ll) rho_ll of a non-Hermitian diagonal and zero otherwise.
double hamiltonian_flux(const Matrix& hamiltonian, const Matrix& rho, Eigen::Index l, Eigen::Index r);

/// Lindblad flux into l from r: sum over terms |c|^2 / T rho_ii (d_lf d_ri - d_li d_rf), fs^-1.
double lindblad_flux(const std::vector<JumpOperator>& jumps, const Matrix& rho, Eigen::Index l, Eigen::Index r);

enum class Channel { hamiltonian, lindblad, total };
const char* channel_name(Channel c);

class FlowMatrix {
public:
    FlowMatrix(double dt_fs, std::vector<std::string> labels);

    double dt_fs() const { return dt_fs_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return h_.size(); }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(labels_.size()); }
    double time(std::size_t k) const { return dt_fs_ * static_cast<double>(k); }

    /// Integrated P_{l<-r}(t_k) for one channel.
    const RealMatrix& at(std::size_t k, Channel c) const;
    RealMatrix total(std::size_t k) const { return h_[k] + l_[k]; }
    std::vector<double> series(Eigen::Index l, Eigen::Index r, Channel c) const;
    std::vector<double> series(const std::string& l, const std::string& r, Channel c) const;

    /// Integrated Lindblad transport along elementary terms only, f <- i, without the
    /// reverse direction subtracted: the Lindblad channel is directed - directed^T.
    const RealMatrix& directed(std::size_t k) const { return d_[k]; }

    /// Integrated sink of a non-Hermitian diagonal (<= 0); zero for Hermitian H.
    std::vector<double> sink(Eigen::Index j) const;

    Eigen::Index index_of(const std::string& label) const;

    void push_back(RealMatrix h, RealMatrix directed, Eigen::VectorXd sink);

    /// Long format: time_fs,from_label,to_label,channel,value for every ordered pair l != r
    /// whose flow is nonzero at some time.
    void write_csv(std::ostream& out, std::size_t stride = 1) const;

private:
    double dt_fs_;
    std::vector<std::string> labels_;
    std::vector<RealMatrix> h_, d_, l_;
    std::vector<Eigen::VectorXd> sink_;
};

/// Trapezoidal time integration of both flux channels along the trajectory.
FlowMatrix accumulate_flows(const RDMTrajectory& traj, const SystemModel& model,
                            const std::vector<JumpOperator>& jumps);

struct SiteFlows {
    double dt_fs = 0.0;
    int monomers = 0;
    // Indexed [monomer - 1][time].
    std::vector<std::vector<double>> inflow;      // F+ : excitation added by Lindblad terms
    std::vector<std::vector<double>> outflow;     // F- : excitation removed by Lindblad terms
    std::vector<std::vector<double>> excitation;  // E
    // between[a][b][time] = F_{a+1 <- b+1}
    std::vector<std::vector<std::vector<double>>> between;

    std::size_t size() const { return excitation.empty() ? 0 : excitation.front().size(); }
    void write_csv(std::ostream& out, std::size_t stride = 1) const;
};

/// Aggregates flows by the monomer that gains or loses the excitation. Requires the model's
/// monomer metadata; state pairs that neither add, remove nor move one excitation are rejected.
SiteFlows monomer_flows(const FlowMatrix& flows, const RDMTrajectory& traj, const SystemModel& model);

/// Lindblad-channel P_{0<-j}(t), 0 being the model's ground state.
std::vector<double> site_loss(const FlowMatrix& flows, const SystemModel& model, const std::string& site);

struct CurrentFit {
    double current_per_ps = 0.0;
    double r_squared = 1.0;
    double window_start_fs = 0.0;
    double window_end_fs = 0.0;
};

/// Least-squares slope of the cumulative drain flow over the final `fraction` of the run,
/// converted to ps^-1. Throws NumericalError when R^2 falls below `min_r2`.
CurrentFit excitonic_current(const std::vector<double>& drained, double dt_fs, double fraction = 0.25,
                             double min_r2 = 0.9999);

}  // namespace pild
