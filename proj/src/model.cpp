#include "pild/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace pild {

bool CouplingOperator::is_diagonal(double tol) const {
    Matrix off = op;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() <= tol && op.diagonal().imag().cwiseAbs().maxCoeff() <= tol;
}

std::size_t SystemModel::index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw std::invalid_argument("unknown state label '" + label + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

std::size_t SystemModel::bath_count() const {
    std::size_t n = 0;
    for (const auto& c : couplings) n = std::max(n, c.bath + 1);
    return n;
}

bool SystemModel::has_diagonal_coupling() const {
    return std::all_of(couplings.begin(), couplings.end(),
                       [](const CouplingOperator& c) { return c.is_diagonal(); });
}

void SystemModel::validate() const {
    const auto n = dim();
    if (n == 0 || hamiltonian.cols() != n) throw std::invalid_argument("model: empty or non-square H");
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("model: label count does not match H");
    if (!monomers.empty() && static_cast<Eigen::Index>(monomers.size()) != n)
        throw std::invalid_argument("model: monomer metadata does not match H");
    for (const auto& c : couplings) {
        if (c.op.rows() != n || c.op.cols() != n)
            throw std::invalid_argument("model: coupling operator has wrong dimension");
    }
    if (ground && static_cast<Eigen::Index>(*ground) >= n)
        throw std::invalid_argument("model: ground index out of range");
}

SystemModel build_excitonic_nmer(int n_monomers, double epsilon, double coupling_h) {
    if (n_monomers <= 0) throw std::invalid_argument("build_excitonic_nmer: N must be positive");
    if (n_monomers > 12) throw std::invalid_argument("build_excitonic_nmer: N too large for a dense basis");
    const int n = n_monomers;
    const Eigen::Index dim = Eigen::Index{1} << n;

    // Index bit (n - j) set <=> monomer j excited; this gives lexicographic g < e order.
    auto excited = [n](Eigen::Index state, int j) { return ((state >> (n - j)) & 1) != 0; };

    SystemModel m;
    m.hamiltonian = Matrix::Zero(dim, dim);
    m.monomer_count = n;
    for (Eigen::Index s = 0; s < dim; ++s) {
        std::string label;
        std::set<int> exc;
        for (int j = 1; j <= n; ++j) {
            label.push_back(excited(s, j) ? 'e' : 'g');
            if (excited(s, j)) exc.insert(j);
        }
        m.labels.push_back(label);
        m.monomers.push_back(exc);
        m.hamiltonian(s, s) = epsilon * static_cast<double>(exc.size());
    }
    for (Eigen::Index s = 0; s < dim; ++s) {
        for (int j = 1; j < n; ++j) {
            if (excited(s, j) && !excited(s, j + 1)) {
                const Eigen::Index swapped = s ^ (Eigen::Index{1} << (n - j)) ^ (Eigen::Index{1} << (n - j - 1));
                m.hamiltonian(s, swapped) = -coupling_h;
                m.hamiltonian(swapped, s) = -coupling_h;
            }
        }
    }
    for (int j = 1; j <= n; ++j) {
        CouplingOperator c{static_cast<std::size_t>(j - 1), Matrix::Zero(dim, dim)};
        for (Eigen::Index s = 0; s < dim; ++s)
            if (excited(s, j)) c.op(s, s) = 1.0;
        m.couplings.push_back(std::move(c));
    }
    m.ground = 0;
    return m;
}

SystemModel build_polaritonic_trimer(const PolaritonParams& p) {
    SystemModel m;
    std::vector<std::string> labels = {"1", "2", "3", "c"};
    if (p.include_ground) labels.insert(labels.begin(), "0");
    const Eigen::Index dim = static_cast<Eigen::Index>(labels.size());
    const Eigen::Index off = p.include_ground ? 1 : 0;
    const Eigen::Index cav = off + 3;

    m.labels = labels;
    m.monomer_count = 3;
    m.hamiltonian = Matrix::Zero(dim, dim);
    if (p.include_ground) {
        m.hamiltonian(0, 0) = p.epsilon_ground;
        m.ground = 0;
        m.monomers.push_back({});
    }
    for (int j = 0; j < 3; ++j) {
        m.hamiltonian(off + j, off + j) = p.epsilon;
        m.hamiltonian(off + j, cav) = p.rabi;
        m.hamiltonian(cav, off + j) = p.rabi;
        m.monomers.push_back({j + 1});
    }
    m.monomers.push_back({});
    for (int j = 0; j < 2; ++j) {
        m.hamiltonian(off + j, off + j + 1) = -p.coupling_h;
        m.hamiltonian(off + j + 1, off + j) = -p.coupling_h;
    }
    m.hamiltonian(cav, cav) = p.cavity;
    for (int j = 0; j < 3; ++j) {
        CouplingOperator c{static_cast<std::size_t>(j), Matrix::Zero(dim, dim)};
        c.op(off + j, off + j) = 1.0;
        m.couplings.push_back(std::move(c));
    }
    return m;
}

std::optional<std::string> jump_violation(const JumpOperator& op, std::size_t dim) {
    if (!(op.timescale_fs > 0.0) || !std::isfinite(op.timescale_fs)) {
        std::ostringstream os;
        os << "jump operator '" << op.name << "': timescale must be positive (got " << op.timescale_fs << ")";
        return os.str();
    }
    std::map<std::size_t, std::size_t> seen_final;
    for (std::size_t k = 0; k < op.terms.size(); ++k) {
        const auto& t = op.terms[k];
        if (t.initial >= dim || t.final >= dim) {
            return "jump operator '" + op.name + "': term " + std::to_string(k) + " references a state outside the basis";
        }
        if (t.initial == t.final) {
            return "jump operator '" + op.name + "': term " + std::to_string(k) + " has identical initial and final state " +
                   std::to_string(t.initial);
        }
        const auto [it, inserted] = seen_final.emplace(t.final, k);
        if (!inserted) {
            std::ostringstream os;
            os << "jump operator '" << op.name << "': terms " << it->second << " (" << op.terms[it->second].initial
               << "->" << t.final << ") and " << k << " (" << t.initial << "->" << t.final
               << ") share final state " << t.final;
            return os.str();
        }
    }
    return std::nullopt;
}

void validate_jump(const JumpOperator& op, std::size_t dim) {
    if (auto v = jump_violation(op, dim)) throw std::invalid_argument(*v);
}

namespace {

JumpOperator flip_operator(const SystemModel& model, int site, double timescale_fs, bool pump) {
    if (site < 1 || site > model.monomer_count)
        throw std::out_of_range("site " + std::to_string(site) + " outside 1.." + std::to_string(model.monomer_count));
    if (model.monomers.size() != model.labels.size())
        throw std::invalid_argument("model carries no monomer metadata");
    JumpOperator op;
    op.name = std::string(pump ? "pump" : "drain") + std::to_string(site);
    op.timescale_fs = timescale_fs;
    for (std::size_t s = 0; s < model.monomers.size(); ++s) {
        if (model.monomers[s].count(site) != 0) continue;
        if (model.ground && s != *model.ground && model.monomers[s].empty()) continue;  // photonic states
        auto target = model.monomers[s];
        target.insert(site);
        for (std::size_t t = 0; t < model.monomers.size(); ++t) {
            if (model.monomers[t] == target) {
                if (pump) op.terms.push_back({1.0, s, t});
                else op.terms.push_back({1.0, t, s});
                break;
            }
        }
    }
    if (op.terms.empty()) throw std::invalid_argument("no basis states connected by " + op.name);
    std::sort(op.terms.begin(), op.terms.end(),
              [](const JumpTerm& a, const JumpTerm& b) { return a.initial < b.initial; });
    validate_jump(op, model.labels.size());
    return op;
}

}  // namespace

JumpOperator pump_operator(const SystemModel& model, int site, double timescale_fs) {
    return flip_operator(model, site, timescale_fs, true);
}

JumpOperator drain_operator(const SystemModel& model, int site, double timescale_fs) {
    return flip_operator(model, site, timescale_fs, false);
}

JumpOperator transition_operator(const SystemModel& model, const std::string& from, const std::string& to,
                                 double timescale_fs) {
    JumpOperator op{"L(" + to + "<-" + from + ")", timescale_fs,
                    {JumpTerm{1.0, model.index_of(from), model.index_of(to)}}};
    validate_jump(op, model.labels.size());
    return op;
}

Matrix jump_matrix(const JumpOperator& op, Eigen::Index dim) {
    Matrix l = Matrix::Zero(dim, dim);
    if (op.terms.empty()) return l;
    const double scale = 1.0 / std::sqrt(op.timescale_fs);
    for (const auto& t : op.terms) {
        if (static_cast<Eigen::Index>(t.initial) >= dim || static_cast<Eigen::Index>(t.final) >= dim)
            throw std::out_of_range("jump_matrix: term index outside dimension");
        l(static_cast<Eigen::Index>(t.final), static_cast<Eigen::Index>(t.initial)) += scale * t.coefficient;
    }
    return l;
}

}  // namespace pild
