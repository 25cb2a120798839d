#include "pild/pathint.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace pild {

std::vector<bath::EtaCoefficients> eta_for_model(const SystemModel& model, const BathSpec& spec, double dt_fs,
                                                 int memory) {
    const auto table = bath::eta_coefficients(spec.density, spec.temperature_K, dt_fs, memory);
    return std::vector<bath::EtaCoefficients>(model.bath_count(), table);
}

Matrix propagator(const Matrix& hamiltonian, double dt_fs) {
    const Matrix generator = Complex(0.0, -dt_fs / units::kHbar) * hamiltonian;
    return generator.exp();
}

SuperOperator bare_propagator(const Matrix& hamiltonian, double dt_fs) {
    if (hamiltonian.rows() != hamiltonian.cols()) throw std::invalid_argument("bare_propagator: H not square");
    if (!(dt_fs > 0.0)) throw std::invalid_argument("bare_propagator: dt must be positive");
    const Matrix u = propagator(hamiltonian, dt_fs);
    if (!u.allFinite()) throw NumericalError("bare_propagator: matrix exponential is not finite");
    return SuperOperator(sandwich(u, u), dt_fs);
}

std::vector<std::vector<Eigen::Index>> coupled_components(const Matrix& h) {
    const auto n = h.rows();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index i) {
        auto& p = parent[static_cast<std::size_t>(i)];
        if (p != i) p = find(p);
        return p;
    };
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && (h(i, j) != Complex{} || h(j, i) != Complex{})) parent[static_cast<std::size_t>(find(i))] = find(j);
    std::map<Eigen::Index, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<Eigen::Index>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    std::sort(out.begin(), out.end());
    return out;
}

InfluenceTable::InfluenceTable(const SystemModel& model, std::vector<bath::EtaCoefficients> etas)
    : dim_(model.dim()), etas_(std::move(etas)) {
    const auto nb = model.bath_count();
    if (etas_.size() < nb)
        throw std::invalid_argument("influence: " + std::to_string(etas_.size()) + " eta tables for " +
                                    std::to_string(nb) + " baths");
    etas_.resize(nb);
    s_.assign(nb, Eigen::VectorXd::Zero(dim_));
    for (const auto& c : model.couplings) {
        if (!c.is_diagonal())
            throw std::invalid_argument("path-integral engines require diagonal system-bath coupling");
        s_[c.bath] += c.diagonal();
    }
    memory_ = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        if (b == 0) memory_ = etas_[b].memory;
        else if (etas_[b].memory != memory_) throw std::invalid_argument("influence: baths disagree on memory");
    }
}

Complex InfluenceTable::phase(std::size_t b, int d, Eigen::Index a, Eigen::Index a_prev) const {
    if (d > memory_) return {};
    const Complex e = eta(b, d);
    const auto& s = s_[b];
    const double ds = s(a / dim_) - s(a % dim_);
    return ds * (e * s(a_prev / dim_) - std::conj(e) * s(a_prev % dim_));
}

Complex InfluenceTable::self_phase(Eigen::Index a) const {
    Complex total = 0.0;
    for (std::size_t b = 0; b < s_.size(); ++b) total += phase(b, 0, a, a);
    return total;
}

DynamicalMapSeries brute_force_maps(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas,
                                    double dt_fs, int steps, double max_paths) {
    if (steps < 1) throw std::invalid_argument("brute_force_maps: need at least one step");
    const Eigen::Index d = model.dim();
    const Eigen::Index d2 = d * d;
    const double paths = std::pow(static_cast<double>(d2), steps);
    if (paths > max_paths) {
        std::ostringstream os;
        os << "brute_force_maps: " << paths << " paths exceed the guard of " << max_paths
           << "; use fewer steps or the tensor-network engine";
        throw std::invalid_argument(os.str());
    }
    const InfluenceTable influence(model, etas);
    const Matrix half = bare_propagator(model.hamiltonian, 0.5 * dt_fs).matrix();
    const Matrix full = bare_propagator(model.hamiltonian, dt_fs).matrix();

    // factors[k](a, a') = prod_b exp(-Phi_k(a, a')); the diagonal of factors[0] is the self term.
    std::vector<Matrix> factors(static_cast<std::size_t>(steps), Matrix::Ones(d2, d2));
    for (int k = 0; k < steps; ++k) {
        for (Eigen::Index a = 0; a < d2; ++a) {
            for (Eigen::Index ap = 0; ap < d2; ++ap) {
                if (k == 0 && a != ap) continue;
                Complex phi = 0.0;
                for (std::size_t b = 0; b < influence.bath_count(); ++b) phi += influence.phase(b, k, a, ap);
                factors[static_cast<std::size_t>(k)](a, ap) = std::exp(-phi);
            }
        }
    }

    // accum[k](a_k, a_1): path sum with the end points left open.
    std::vector<Matrix> accum(static_cast<std::size_t>(steps), Matrix::Zero(d2, d2));
    std::vector<Eigen::Index> path(static_cast<std::size_t>(steps));
    std::function<void(int, Complex)> descend = [&](int level, Complex weight) {
        const auto lv = static_cast<std::size_t>(level);
        accum[lv](path[lv], path[0]) += weight;
        if (level + 1 == steps) return;
        for (Eigen::Index next = 0; next < d2; ++next) {
            const Complex u = full(next, path[lv]);
            if (u == Complex{}) continue;
            Complex w = weight * u * factors[0](next, next);
            for (int prev = 0; prev <= level; ++prev)
                w *= factors[static_cast<std::size_t>(level + 1 - prev)](next, path[static_cast<std::size_t>(prev)]);
            path[lv + 1] = next;
            descend(level + 1, w);
        }
    };
    for (Eigen::Index a1 = 0; a1 < d2; ++a1) {
        path[0] = a1;
        descend(0, factors[0](a1, a1));
    }

    DynamicalMapSeries out;
    out.dt_fs = dt_fs;
    out.provenance = "brute";
    out.maps.push_back(SuperOperator::identity(d, dt_fs));
    for (int k = 0; k < steps; ++k)
        out.maps.emplace_back(half * accum[static_cast<std::size_t>(k)] * half, dt_fs);
    return out;
}

void DynamicalMapSeries::write(std::ostream& out) const {
    out << "# dynamical maps: dt_fs=" << dt_fs << " steps=" << steps() << " dim=" << dim()
        << " provenance=" << provenance << " splitting=" << splitting << " nonhermitian=" << nonhermitian << '\n';
    out << "# k row col re im (row-major Liouville indices)\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < maps.size(); ++k) {
        const auto& m = maps[k].matrix();
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                out << k << ' ' << r << ' ' << c << ' ' << m(r, c).real() << ' ' << m(r, c).imag() << '\n';
    }
}

DynamicalMapSeries DynamicalMapSeries::read(std::istream& in) {
    DynamicalMapSeries s;
    std::string line;
    Eigen::Index dim = -1;
    int steps = -1;
    std::vector<Matrix> mats;
    while (std::getline(in, line)) {
        if (line.rfind("# dynamical maps:", 0) == 0) {
            std::istringstream hs(line.substr(17));
            std::string tok;
            while (hs >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const auto key = tok.substr(0, eq);
                const auto val = tok.substr(eq + 1);
                if (key == "dt_fs") s.dt_fs = std::stod(val);
                else if (key == "steps") steps = std::stoi(val);
                else if (key == "dim") dim = std::stol(val);
                else if (key == "provenance") s.provenance = val;
                else if (key == "splitting") s.splitting = val;
                else if (key == "nonhermitian") s.nonhermitian = (val == "1");
            }
            if (dim <= 0 || steps < 0) throw std::invalid_argument("map dump: malformed header");
            mats.assign(static_cast<std::size_t>(steps) + 1, Matrix::Zero(dim * dim, dim * dim));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (mats.empty()) throw std::invalid_argument("map dump: data before header");
        std::istringstream ls(line);
        std::size_t k = 0;
        Eigen::Index r = 0, c = 0;
        double re = 0.0, im = 0.0;
        if (!(ls >> k >> r >> c >> re >> im) || k >= mats.size() || r >= dim * dim || c >= dim * dim)
            throw std::invalid_argument("map dump: malformed line '" + line + "'");
        mats[k](r, c) = Complex(re, im);
    }
    if (mats.empty()) throw std::invalid_argument("map dump: no header");
    for (auto& m : mats) s.maps.emplace_back(std::move(m), s.dt_fs);
    return s;
}

}  // namespace pild
