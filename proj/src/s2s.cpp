#include "pild/s2s.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/QR>

namespace pild {

double hamiltonian_flux(const Matrix& hamiltonian, const Matrix& rho, Eigen::Index l, Eigen::Index r) {
    return 2.0 / units::kHbar * (hamiltonian(l, r) * rho(r, l)).imag();
}

double lindblad_flux(const std::vector<JumpOperator>& jumps, const Matrix& rho, Eigen::Index l, Eigen::Index r) {
    double flux = 0.0;
    for (const auto& op : jumps) {
        for (const auto& t : op.terms) {
            const auto i = static_cast<Eigen::Index>(t.initial), f = static_cast<Eigen::Index>(t.final);
            const double rate = std::norm(t.coefficient) / op.timescale_fs * rho(i, i).real();
            if (l == f && r == i) flux += rate;
            if (l == i && r == f) flux -= rate;
        }
    }
    return flux;
}

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::hamiltonian: return "H";
        case Channel::lindblad: return "L";
        case Channel::total: return "total";
    }
    return "?";
}

FlowMatrix::FlowMatrix(double dt_fs, std::vector<std::string> labels) : dt_fs_(dt_fs), labels_(std::move(labels)) {}

void FlowMatrix::push_back(RealMatrix h, RealMatrix directed, Eigen::VectorXd sink) {
    l_.push_back(directed - directed.transpose());
    h_.push_back(std::move(h));
    d_.push_back(std::move(directed));
    sink_.push_back(std::move(sink));
}

const RealMatrix& FlowMatrix::at(std::size_t k, Channel c) const {
    if (c == Channel::hamiltonian) return h_[k];
    if (c == Channel::lindblad) return l_[k];
    throw std::invalid_argument("FlowMatrix::at: use total() for the summed channel");
}

std::vector<double> FlowMatrix::series(Eigen::Index l, Eigen::Index r, Channel c) const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) {
        double v = 0.0;
        if (c != Channel::lindblad) v += h_[k](l, r);
        if (c != Channel::hamiltonian) v += l_[k](l, r);
        out.push_back(v);
    }
    return out;
}

std::vector<double> FlowMatrix::series(const std::string& l, const std::string& r, Channel c) const {
    return series(index_of(l), index_of(r), c);
}

std::vector<double> FlowMatrix::sink(Eigen::Index j) const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& s : sink_) out.push_back(s(j));
    return out;
}

Eigen::Index FlowMatrix::index_of(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::invalid_argument("flows: unknown state label '" + label + "'");
    return static_cast<Eigen::Index>(it - labels_.begin());
}

void FlowMatrix::write_csv(std::ostream& out, std::size_t stride) const {
    const auto n = dim();
    RealMatrix seen_h = RealMatrix::Zero(n, n), seen_l = RealMatrix::Zero(n, n);
    for (std::size_t k = 0; k < size(); ++k) {
        seen_h = seen_h.cwiseMax(h_[k].cwiseAbs());
        seen_l = seen_l.cwiseMax(l_[k].cwiseAbs());
    }
    out << "time_fs,from_label,to_label,channel,value\n" << std::setprecision(12);
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t k = 0; k < size(); k += stride) {
        for (Eigen::Index l = 0; l < n; ++l) {
            for (Eigen::Index r = 0; r < n; ++r) {
                if (l == r || (seen_h(l, r) == 0.0 && seen_l(l, r) == 0.0)) continue;
                const auto& from = labels_[static_cast<std::size_t>(r)];
                const auto& to = labels_[static_cast<std::size_t>(l)];
                out << time(k) << ',' << from << ',' << to << ",H," << h_[k](l, r) << '\n';
                out << time(k) << ',' << from << ',' << to << ",L," << l_[k](l, r) << '\n';
                out << time(k) << ',' << from << ',' << to << ",total," << h_[k](l, r) + l_[k](l, r) << '\n';
            }
        }
    }
}

FlowMatrix accumulate_flows(const RDMTrajectory& traj, const SystemModel& model,
                            const std::vector<JumpOperator>& jumps) {
    const Eigen::Index n = model.dim();
    if (traj.labels() != model.labels)
        throw std::invalid_argument("accumulate_flows: trajectory basis does not match the model basis");
    if (!model.has_diagonal_coupling())
        throw std::invalid_argument(
            "accumulate_flows: the state-to-state decomposition requires diagonal system-bath coupling");
    for (const auto& op : jumps) validate_jump(op, static_cast<std::size_t>(n));
    const Matrix& h = model.hamiltonian;

    auto rates = [&](const Matrix& rho, RealMatrix& fh, RealMatrix& fd, Eigen::VectorXd& fs) {
        fh.setZero(n, n);
        fd.setZero(n, n);
        fs.resize(n);
        for (Eigen::Index l = 0; l < n; ++l) {
            fs(l) = hamiltonian_flux(h, rho, l, l);
            for (Eigen::Index r = l + 1; r < n; ++r) {
                if (h(l, r) == Complex{} && h(r, l) == Complex{}) continue;
                fh(l, r) = hamiltonian_flux(h, rho, l, r);
                fh(r, l) = -fh(l, r);
            }
        }
        for (const auto& op : jumps)
            for (const auto& t : op.terms) {
                const auto i = static_cast<Eigen::Index>(t.initial), f = static_cast<Eigen::Index>(t.final);
                fd(f, i) += std::norm(t.coefficient) / op.timescale_fs * rho(i, i).real();
            }
    };

    FlowMatrix out(traj.dt_fs(), model.labels);
    if (traj.size() == 0) return out;
    RealMatrix ph = RealMatrix::Zero(n, n), pd = RealMatrix::Zero(n, n);
    Eigen::VectorXd ps = Eigen::VectorXd::Zero(n);
    RealMatrix fh0, fd0, fh1, fd1;
    Eigen::VectorXd fs0, fs1;
    rates(traj[0], fh0, fd0, fs0);
    out.push_back(ph, pd, ps);
    const double half = 0.5 * traj.dt_fs();
    for (std::size_t k = 1; k < traj.size(); ++k) {
        rates(traj[k], fh1, fd1, fs1);
        ph += half * (fh0 + fh1);
        pd += half * (fd0 + fd1);
        ps += half * (fs0 + fs1);
        out.push_back(ph, pd, ps);
        std::swap(fh0, fh1);
        std::swap(fd0, fd1);
        std::swap(fs0, fs1);
    }
    return out;
}

namespace {

enum class Move { none, create, annihilate, hop, other };

// How the excitation pattern changes going from state `from` to state `to`.
Move classify(const std::set<int>& from, const std::set<int>& to, int& gained, int& lost) {
    std::vector<int> add, rem;
    std::set_difference(to.begin(), to.end(), from.begin(), from.end(), std::back_inserter(add));
    std::set_difference(from.begin(), from.end(), to.begin(), to.end(), std::back_inserter(rem));
    gained = add.empty() ? 0 : add.front();
    lost = rem.empty() ? 0 : rem.front();
    if (add.empty() && rem.empty()) return Move::none;
    if (add.size() == 1 && rem.empty()) return Move::create;
    if (add.empty() && rem.size() == 1) return Move::annihilate;
    if (add.size() == 1 && rem.size() == 1) return Move::hop;
    return Move::other;
}

void require_aggregate(const SystemModel& model) {
    if (model.monomer_count <= 0 || static_cast<Eigen::Index>(model.monomers.size()) != model.dim())
        throw std::invalid_argument("monomer flows need monomer metadata for every basis state");
    for (Eigen::Index s = 0; s < model.dim(); ++s) {
        const bool is_ground = model.ground && static_cast<Eigen::Index>(*model.ground) == s;
        if (model.monomers[static_cast<std::size_t>(s)].empty() && !is_ground)
            throw std::invalid_argument("monomer flows: state '" + model.labels[static_cast<std::size_t>(s)] +
                                        "' carries no excitation but is not the ground state; labels are ambiguous");
    }
}

}  // namespace

SiteFlows monomer_flows(const FlowMatrix& flows, const RDMTrajectory& traj, const SystemModel& model) {
    require_aggregate(model);
    if (flows.labels() != model.labels || traj.labels() != model.labels || flows.size() != traj.size())
        throw std::invalid_argument("monomer_flows: flows, trajectory and model disagree");
    const int nm = model.monomer_count;
    const Eigen::Index n = model.dim();
    const std::size_t nt = flows.size();

    SiteFlows sf;
    sf.dt_fs = flows.dt_fs();
    sf.monomers = nm;
    sf.inflow.assign(static_cast<std::size_t>(nm), std::vector<double>(nt, 0.0));
    sf.outflow = sf.inflow;
    sf.excitation = sf.inflow;
    sf.between.assign(static_cast<std::size_t>(nm), sf.inflow);

    auto set_of = [&](Eigen::Index s) -> const std::set<int>& { return model.monomers[static_cast<std::size_t>(s)]; };
    auto idx = [](int monomer) { return static_cast<std::size_t>(monomer - 1); };

    for (Eigen::Index to = 0; to < n; ++to) {
        for (Eigen::Index from = 0; from < n; ++from) {
            if (to == from) continue;
            int gained = 0, lost = 0;
            const Move mv = classify(set_of(from), set_of(to), gained, lost);
            bool h_active = model.hamiltonian(to, from) != Complex{};
            bool l_active = false;
            for (std::size_t k = 0; k < nt && !l_active; ++k) l_active = flows.directed(k)(to, from) != 0.0;
            if (!h_active && !l_active) continue;
            if (mv == Move::none || mv == Move::other || (h_active && mv != Move::hop)) {
                throw std::invalid_argument("monomer flows: transport " + model.labels[static_cast<std::size_t>(from)] +
                                            " -> " + model.labels[static_cast<std::size_t>(to)] +
                                            " does not add, remove or move a single excitation");
            }
            for (std::size_t k = 0; k < nt; ++k) {
                const double d = flows.directed(k)(to, from);
                switch (mv) {
                    case Move::create: sf.inflow[idx(gained)][k] += d; break;
                    case Move::annihilate: sf.outflow[idx(lost)][k] += d; break;
                    case Move::hop:
                        sf.between[idx(gained)][idx(lost)][k] += flows.at(k, Channel::hamiltonian)(to, from) + d;
                        sf.between[idx(lost)][idx(gained)][k] -= d;
                        break;
                    default: break;
                }
            }
        }
    }
    for (std::size_t k = 0; k < nt; ++k)
        for (Eigen::Index s = 0; s < n; ++s) {
            const double p = traj[k](s, s).real();
            for (int a : set_of(s)) sf.excitation[idx(a)][k] += p;
        }
    return sf;
}

void SiteFlows::write_csv(std::ostream& out, std::size_t stride) const {
    out << "time_fs";
    for (int a = 1; a <= monomers; ++a) out << ",F+_" << a << ",F-_" << a;
    for (int a = 1; a <= monomers; ++a)
        for (int b = 1; b <= monomers; ++b)
            if (a != b) out << ",F_" << a << "<-" << b;
    for (int a = 1; a <= monomers; ++a) out << ",E_" << a;
    out << '\n' << std::setprecision(12);
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t k = 0; k < size(); k += stride) {
        out << dt_fs * static_cast<double>(k);
        for (int a = 0; a < monomers; ++a) out << ',' << inflow[a][k] << ',' << outflow[a][k];
        for (int a = 0; a < monomers; ++a)
            for (int b = 0; b < monomers; ++b)
                if (a != b) out << ',' << between[a][b][k];
        for (int a = 0; a < monomers; ++a) out << ',' << excitation[a][k];
        out << '\n';
    }
}

std::vector<double> site_loss(const FlowMatrix& flows, const SystemModel& model, const std::string& site) {
    if (!model.ground) throw std::invalid_argument("site_loss: the basis has no ground state");
    const auto g = static_cast<Eigen::Index>(*model.ground);
    return flows.series(g, flows.index_of(site), Channel::lindblad);
}

CurrentFit excitonic_current(const std::vector<double>& drained, double dt_fs, double fraction, double min_r2) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("excitonic_current: fraction must lie in (0, 1]");
    const std::size_t n = drained.size();
    const auto first = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - fraction)));
    const std::size_t count = n - first;
    if (count < 3) throw std::invalid_argument("excitonic_current: fit window holds fewer than 3 points");

    CurrentFit fit;
    fit.window_start_fs = dt_fs * static_cast<double>(first);
    fit.window_end_fs = dt_fs * static_cast<double>(n - 1);
    Eigen::MatrixXd a(count, 3);
    Eigen::VectorXd y(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = dt_fs * static_cast<double>(first + k) - fit.window_start_fs;
        a(k, 0) = 1.0;
        a(k, 1) = t;
        a(k, 2) = t * t;
        y(k) = drained[first + k];
    }
    const Eigen::VectorXd line = a.leftCols(2).colPivHouseholderQr().solve(y);
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    const double ss_res = (y - a.leftCols(2) * line).squaredNorm();
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.current_per_ps = ss_tot > 0.0 ? line(1) * 1000.0 : 0.0;
    if (fit.r_squared < min_r2) {
        const Eigen::VectorXd quad = a.colPivHouseholderQr().solve(y);
        std::ostringstream os;
        os << "excitonic_current: window " << fit.window_start_fs << "-" << fit.window_end_fs
           << " fs is not in steady state (R^2 = " << std::setprecision(8) << fit.r_squared
           << ", curvature " << 2.0 * quad(2) * 1e6 << " ps^-2); propagate longer";
        throw NumericalError(os.str());
    }
    return fit;
}

}  // namespace pild
