#include "pild/nonhermitian.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace pild {

LossConvention parse_loss_convention(const std::string& name) {
    if (name == "effective") return LossConvention::effective;
    if (name == "prescribed") return LossConvention::prescribed;
    throw std::invalid_argument("unknown loss convention '" + name + "' (expected effective or prescribed)");
}

const char* loss_convention_name(LossConvention c) {
    return c == LossConvention::effective ? "effective" : "prescribed";
}

namespace {

// Excitations carried by a state: monomers excited, or one for any other non-ground state
// (a cavity photon).
int excitations(const SystemModel& model, std::size_t state) {
    if (model.ground && *model.ground == state) return 0;
    if (!model.monomers.empty() && !model.monomers[state].empty()) return static_cast<int>(model.monomers[state].size());
    if (model.ground) return 1;
    throw std::invalid_argument("effective_hamiltonian: cannot tell drains from pumps without a ground state or "
                                "monomer labels");
}

bool is_pump_term(const SystemModel& model, const JumpTerm& t) {
    return excitations(model, t.final) > excitations(model, t.initial);
}

}  // namespace

Matrix effective_hamiltonian(const SystemModel& model, const std::vector<JumpOperator>& jumps,
                             LossConvention convention) {
    Matrix h = model.hamiltonian;
    const auto d = model.dim();
    for (const auto& op : jumps) {
        validate_jump(op, static_cast<std::size_t>(d));
        for (const auto& t : op.terms) {
            if (is_pump_term(model, t)) {
                throw std::invalid_argument(
                    "effective_hamiltonian: jump operator '" + op.name + "' pumps " + model.labels[t.initial] +
                    " -> " + model.labels[t.final] +
                    "; a non-Hermitian Hamiltonian can only remove population: a gain term makes the "
                    "population rise exponentially, which is phenomenologically incorrect (use the Lindblad "
                    "pipeline for pumps)");
            }
        }
        // Distinct final states make L^dag L diagonal: sum_j |c_j|^2 / T |i_j><i_j|.
        for (const auto& t : op.terms) {
            const double rate = std::norm(t.coefficient) / op.timescale_fs;
            const double shift = convention == LossConvention::effective ? 0.5 * units::kHbar * rate
                                                                         : units::kPi * units::kHbar * rate;
            const auto i = static_cast<Eigen::Index>(t.initial);
            h(i, i) -= Complex(0.0, shift);
        }
    }
    return h;
}

SystemModel nonhermitian_model(const SystemModel& model, const std::vector<JumpOperator>& jumps,
                               LossConvention convention) {
    const Matrix heff = effective_hamiltonian(model, jumps, convention);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index s = 0; s < model.dim(); ++s)
        if (!model.ground || static_cast<Eigen::Index>(*model.ground) != s) keep.push_back(s);
    const auto n = static_cast<Eigen::Index>(keep.size());

    SystemModel out;
    out.hamiltonian.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) out.hamiltonian(a, b) = heff(keep[a], keep[b]);
    if (model.ground) {
        const auto g = static_cast<Eigen::Index>(*model.ground);
        for (Eigen::Index s = 0; s < model.dim(); ++s) {
            if (s != g && (heff(g, s) != Complex{} || heff(s, g) != Complex{}))
                throw std::invalid_argument("nonhermitian_model: the ground state is coupled to " +
                                            model.labels[static_cast<std::size_t>(s)] + " and cannot be dropped");
        }
    }
    for (auto s : keep) {
        out.labels.push_back(model.labels[static_cast<std::size_t>(s)]);
        if (!model.monomers.empty()) out.monomers.push_back(model.monomers[static_cast<std::size_t>(s)]);
    }
    out.monomer_count = model.monomer_count;
    for (const auto& c : model.couplings) {
        CouplingOperator r{c.bath, Matrix(n, n)};
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) r.op(a, b) = c.op(keep[a], keep[b]);
        out.couplings.push_back(std::move(r));
    }
    return out;
}

double ComparisonReport::max_deviation() const {
    double worst = 0.0;
    for (const auto& d : deviations) worst = std::max(worst, d.max_abs);
    return worst;
}

void ComparisonReport::write_csv(std::ostream& out, std::size_t stride) const {
    out << "time_fs";
    for (const auto& n : names) out << ",lindblad:" << n << ",nonhermitian:" << n;  // P_0 pairs with 1 - trace
    out << ",nonhermitian:trace\n" << std::setprecision(12);
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t k = 0; k < time_fs.size(); k += stride) {
        out << time_fs[k];
        for (std::size_t o = 0; o < names.size(); ++o) out << ',' << lindblad[o][k] << ',' << nonhermitian[o][k];
        out << ',' << nonhermitian_trace[k] << '\n';
    }
}

void ComparisonReport::write_summary(std::ostream& out) const {
    out << "Lindblad (PILD) vs non-Hermitian state-to-state comparison\n";
    if (!time_fs.empty()) out << "time window: 0-" << time_fs.back() << " fs, " << time_fs.size() << " points\n";
    out << "max |deviation| per observable:\n";
    for (const auto& d : deviations) out << "  " << std::left << std::setw(16) << d.name << ' ' << d.max_abs << '\n';
    out << "overall max deviation: " << max_deviation() << '\n';
    if (!nonhermitian_trace.empty())
        out << "non-Hermitian trace at end: " << nonhermitian_trace.back() << " (Lindblad trace is conserved)\n";
}

ComparisonReport compare_methods(const SystemModel& model, const std::vector<JumpOperator>& jumps,
                                 const BathSpec& bath, const DensityMatrix& rho0,
                                 const ComparisonSettings& settings) {
    if (!model.ground) throw std::invalid_argument("compare_methods: the Lindblad pipeline needs a ground state");
    const auto g = static_cast<Eigen::Index>(*model.ground);
    const SystemModel nh = nonhermitian_model(model, jumps, settings.convention);  // rejects pumps

    // Lindblad pipeline on the full basis.
    const auto etas = eta_for_model(model, bath, settings.dt_fs, settings.memory);
    const auto maps = tempo_maps(model, etas, settings.dt_fs, settings.memory, settings.tempo);
    PropagationSettings ps;
    ps.splitting = settings.splitting;
    ps.hamiltonian = model.hamiltonian;
    auto lind = propagate_pild(transfer_tensors(maps, settings.memory), jumps, rho0, settings.steps, ps);
    const FlowMatrix lflows = accumulate_flows(lind, model, jumps);

    // Non-Hermitian pipeline on the ground-free basis.
    if (std::abs(rho0.matrix()(g, g)) > 0.0)
        throw std::invalid_argument("compare_methods: the initial state populates the ground state");
    Matrix r0(nh.dim(), nh.dim());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index s = 0; s < model.dim(); ++s)
        if (s != g) keep.push_back(s);
    for (Eigen::Index a = 0; a < nh.dim(); ++a)
        for (Eigen::Index b = 0; b < nh.dim(); ++b) r0(a, b) = rho0.matrix()(keep[a], keep[b]);
    const auto nh_etas = eta_for_model(nh, bath, settings.dt_fs, settings.memory);
    const auto nh_maps = nonhermitian_maps(nh, nh_etas, settings.dt_fs, settings.memory, settings.tempo);
    PropagationSettings lossy;
    lossy.trace_preserving = false;
    auto nonh = propagate_pild(transfer_tensors(nh_maps, settings.memory), {}, DensityMatrix(r0, nh.labels), settings.steps,
                               lossy);
    const FlowMatrix nflows = accumulate_flows(nonh, nh, {});

    ComparisonReport rep;
    for (std::size_t k = 0; k < lind.size(); ++k) rep.time_fs.push_back(lind.time(k));
    rep.nonhermitian_trace = nonh.trace();
    auto add = [&](std::string name, std::vector<double> a, std::vector<double> b) {
        double worst = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
        rep.deviations.push_back({name, worst});
        rep.names.push_back(std::move(name));
        rep.lindblad.push_back(std::move(a));
        rep.nonhermitian.push_back(std::move(b));
    };
    // Populations; the ground state is absent from the non-Hermitian basis, where its
    // Lindblad population corresponds to the norm lost from the excited states.
    for (Eigen::Index s = 0; s < model.dim(); ++s) {
        const auto& label = model.labels[static_cast<std::size_t>(s)];
        std::vector<double> other;
        if (s != g) {
            other = nonh.population(static_cast<std::size_t>(nflows.index_of(label)));
        } else {
            for (double tr : rep.nonhermitian_trace) other.push_back(1.0 - tr);
        }
        add("P_" + label, lind.population(static_cast<std::size_t>(s)), std::move(other));
    }
    // Hamiltonian flows between excited states.
    for (Eigen::Index a = 0; a < nh.dim(); ++a)
        for (Eigen::Index b = 0; b < nh.dim(); ++b) {
            if (a == b || nh.hamiltonian(a, b) == Complex{}) continue;
            const auto& la = nh.labels[static_cast<std::size_t>(a)];
            const auto& lb = nh.labels[static_cast<std::size_t>(b)];
            add("P_" + la + "<-" + lb, lflows.series(la, lb, Channel::total), nflows.series(la, lb, Channel::hamiltonian));
        }
    // Losses: Lindblad P_{0<-j} against |P_{j<-j}|.
    for (Eigen::Index a = 0; a < nh.dim(); ++a) {
        if (nh.hamiltonian(a, a).imag() == 0.0) continue;
        const auto& la = nh.labels[static_cast<std::size_t>(a)];
        auto sink = nflows.sink(a);
        for (auto& v : sink) v = std::abs(v);
        add("L_" + la, site_loss(lflows, model, la), std::move(sink));
    }
    rep.lindblad_trajectory = std::move(lind);
    rep.nonhermitian_trajectory = std::move(nonh);
    return rep;
}

}  // namespace pild
