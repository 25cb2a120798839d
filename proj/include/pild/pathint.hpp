// pathint.hpp — dynamical maps of a system coupled to harmonic baths, from the
// influence-functional path sum: a brute-force enumerator and a tensor-network engine.
//
// Discretization (symmetric splitting): every path point a_k, k = 1..n, is held over one
// full interval of length dt; the bare propagator advances dt/2 before the first point,
// dt between consecutive points and dt/2 after the last one:
//
//   E(n) = U(dt/2) I(a_n) U(dt) ... U(dt) I(a_1) U(dt/2)
//
// where I collects exp(-Phi_{k-k'}(a_k, a_k')) for all k >= k' with k - k' <= memory.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pild/bath.hpp"
#include "pild/core.hpp"
#include "pild/model.hpp"

namespace pild {

struct BathSpec {
    bath::SpectralDensity density;
    double temperature_K = 300.0;
};

/// One table of eta coefficients per bath id of `model`; every bath uses `spec`.
std::vector<bath::EtaCoefficients> eta_for_model(const SystemModel& model, const BathSpec& spec, double dt_fs,
                                                 int memory);

struct DynamicalMapSeries {
    double dt_fs = 0.0;
    std::vector<SuperOperator> maps;  // maps[k] = E(k dt), maps[0] = identity
    std::string provenance;           // "brute", "tempo(svd_cutoff=...)", "bare"
    std::string splitting = "symmetric";
    bool nonhermitian = false;
    int max_bond = 0;

    int steps() const { return static_cast<int>(maps.size()) - 1; }
    Eigen::Index dim() const { return maps.empty() ? 0 : maps.front().dim(); }

    /// Text dump, one line per entry: k row col re im.
    void write(std::ostream& out) const;
    static DynamicalMapSeries read(std::istream& in);
};

/// exp(-iH dt/hbar) (x) conj(exp(-iH dt/hbar)).
SuperOperator bare_propagator(const Matrix& hamiltonian, double dt_fs);

/// exp(-iH dt / hbar) for possibly non-Hermitian H.
Matrix propagator(const Matrix& hamiltonian, double dt_fs);

struct TempoSettings {
    double svd_cutoff = 1e-10;  // relative to the largest singular value of each bond
    int max_bond = 256;
};

/// Influence phases for Liouville indices a, a' of one bath at separation d.
class InfluenceTable {
public:
    InfluenceTable(const SystemModel& model, std::vector<bath::EtaCoefficients> etas);

    std::size_t bath_count() const { return s_.size(); }
    Eigen::Index dim() const { return dim_; }
    int memory() const { return memory_; }
    /// Eigenvalue of the (merged) coupling operator of bath b on state d.
    double s(std::size_t b, Eigen::Index d) const { return s_[b](d); }
    Complex eta(std::size_t b, int d) const { return etas_[b][static_cast<std::size_t>(d)]; }
    /// Phi for bath b between later Liouville index a and earlier index a_prev.
    Complex phase(std::size_t b, int d, Eigen::Index a, Eigen::Index a_prev) const;
    /// Sum over baths of Phi_0(a, a).
    Complex self_phase(Eigen::Index a) const;

private:
    Eigen::Index dim_ = 0;
    int memory_ = 0;
    std::vector<Eigen::VectorXd> s_;
    std::vector<bath::EtaCoefficients> etas_;
};

/// Exact path sum; D^(2 n) terms per map. Throws when D^(2 steps) > max_paths.
DynamicalMapSeries brute_force_maps(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas,
                                    double dt_fs, int steps, double max_paths = 1e8);

/// Augmented-density-tensor contraction with SVD compression, one bath at a time.
/// Influence beyond `memory` steps is dropped (memory = etas[b].memory).
DynamicalMapSeries tempo_maps(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas,
                              double dt_fs, int steps, const TempoSettings& settings = {});

/// Same engines with a complex diagonal in H; imaginary parts must be <= 0.
DynamicalMapSeries nonhermitian_maps(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas,
                                     double dt_fs, int steps, const TempoSettings& settings = {});

/// Connected components of the graph of nonzero off-diagonal H elements.
std::vector<std::vector<Eigen::Index>> coupled_components(const Matrix& hamiltonian);

}  // namespace pild
