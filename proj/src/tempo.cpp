// Tensor-network evaluation of the influence-functional path sum.
//
// Each bath's influence functional depends on the path only through the pair (s+, s-) of
// coupling eigenvalues at every point, so it is built once per distinct bath as a process
// tensor: an MPS in time over that small alphabet, grown point by point with an MPO whose
// bond carries the new point's Delta s back through the memory window, then recompressed
// (QR sweep to the right-orthonormal gauge, truncating SVD sweep back). Independent baths
// never meet inside an SVD, which would otherwise have to resolve the product of their
// bond spaces.
//
// The system side is contracted exactly. The Liouville space splits into blocks (C1 x C2)
// of H-connected components that neither the bare propagators nor the diagonal influence
// functional mix; per block the state is a tensor over (current index, initial index, one
// process-tensor bond per bath active in the block). Future points are capped with a
// Delta s = 0 letter, whose influence on the past is exactly one.

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "pild/pathint.hpp"

namespace pild {

namespace {

using Site = std::vector<Matrix>;  // one (left x right) matrix per letter

constexpr Eigen::Index kStateBudget = Eigen::Index{1} << 23;  // complex entries per block state

struct Alphabet {
    std::vector<double> plus, minus;  // s+ and s- per letter
    std::vector<int> letter;          // letter of each global Liouville index
    double delta(int x) const { return plus[static_cast<std::size_t>(x)] - minus[static_cast<std::size_t>(x)]; }
    int size() const { return static_cast<int>(plus.size()); }
    bool operator==(const Alphabet& o) const { return plus == o.plus && minus == o.minus; }
};

Alphabet alphabet_of(const InfluenceTable& inf, std::size_t b) {
    Alphabet al;
    const Eigen::Index d = inf.dim();
    for (Eigen::Index a = 0; a < d * d; ++a) {
        const double sp = inf.s(b, a / d), sm = inf.s(b, a % d);
        int x = 0;
        while (x < al.size() && !(al.plus[static_cast<std::size_t>(x)] == sp && al.minus[static_cast<std::size_t>(x)] == sm)) ++x;
        if (x == al.size()) {
            al.plus.push_back(sp);
            al.minus.push_back(sm);
        }
        al.letter.push_back(x);
    }
    return al;
}

class ProcessTensor {
public:
    ProcessTensor(const Alphabet& al, std::vector<Complex> eta, int memory, int steps, const TempoSettings& settings)
        : al_(al), eta_(std::move(eta)), memory_(memory), settings_(settings) {
        for (int x = 0; x < al_.size(); ++x) {
            const double ds = al_.delta(x);
            auto it = std::find(wires_.begin(), wires_.end(), ds);
            if (it == wires_.end()) {
                wires_.push_back(ds);
                it = wires_.end() - 1;
            }
            wire_of_.push_back(static_cast<int>(it - wires_.begin()));
            if (ds == 0.0 && rest_ < 0) rest_ = x;
        }
        if (rest_ < 0) throw std::invalid_argument("tempo: a bath alphabet without a Delta s = 0 letter");
        for (int k = 1; k <= steps; ++k) add_point(k);
        caps_.assign(sites_.size(), Vector());
        Vector cap = Vector::Ones(1);
        for (std::size_t i = sites_.size(); i-- > 0;) {
            caps_[i] = cap;
            cap = sites_[i][static_cast<std::size_t>(rest_)] * cap;
        }
    }

    /// Site of point k (1-based), one matrix per letter.
    const Site& site(int k) const { return sites_[static_cast<std::size_t>(k - 1)]; }
    /// Contraction of every point after k with the Delta s = 0 letter.
    const Vector& cap(int k) const { return caps_[static_cast<std::size_t>(k - 1)]; }
    int max_bond() const { return max_bond_; }
    /// Bond between points k and k + 1.
    Eigen::Index bond(int k) const { return site(k)[0].cols(); }

private:
    Complex eta(int d) const { return d <= memory_ ? eta_[static_cast<std::size_t>(d)] : Complex{}; }

    Complex phase(double ds, int d, int x_prev) const {
        const Complex e = eta(d);
        const auto xp = static_cast<std::size_t>(x_prev);
        return ds * (e * al_.plus[xp] - std::conj(e) * al_.minus[xp]);
    }

    void add_point(int k) {
        const auto q = static_cast<Eigen::Index>(wires_.size());
        const auto letters = static_cast<std::size_t>(al_.size());
        const int first = std::max(1, k - memory_);
        const bool coupled = first < k && q > 1;
        Site fresh(letters);
        for (std::size_t x = 0; x < letters; ++x) {
            fresh[x] = Matrix::Zero(coupled ? q : 1, 1);
            fresh[x](coupled ? wire_of_[x] : 0, 0) = std::exp(-phase(al_.delta(static_cast<int>(x)), 0, static_cast<int>(x)));
        }
        if (first < k && q == 1) {
            // Only Delta s = 0 letters: every factor is one.
            sites_.push_back(std::move(fresh));
            return;
        }
        if (coupled) {
            for (int p = first; p < k; ++p) {
                Site& site = sites_[static_cast<std::size_t>(p - 1)];
                const Eigen::Index rows = site[0].rows(), cols = site[0].cols();
                for (std::size_t x = 0; x < letters; ++x) {
                    const Matrix& a = site[x];
                    Matrix grown = (p == first) ? Matrix(rows, cols * q) : Matrix::Zero(rows * q, cols * q);
                    for (Eigen::Index w = 0; w < q; ++w) {
                        const Complex f = std::exp(-phase(wires_[static_cast<std::size_t>(w)], k - p, static_cast<int>(x)));
                        if (p == first) grown.middleCols(w * cols, cols) = f * a;
                        else grown.block(w * rows, w * cols, rows, cols) = f * a;
                    }
                    site[x] = std::move(grown);
                }
            }
        }
        sites_.push_back(std::move(fresh));
        if (coupled) compress(static_cast<std::size_t>(first - 1));
    }

    Eigen::Index kept(const Eigen::VectorXd& sv) {
        Eigen::Index keep = 0;
        const double floor = sv.size() > 0 ? sv(0) * settings_.svd_cutoff : 0.0;
        while (keep < sv.size() && sv(keep) > floor) ++keep;
        keep = std::max<Eigen::Index>(keep, 1);
        if (keep > settings_.max_bond) {
            std::ostringstream os;
            os << "tempo: bond dimension " << keep << " exceeds the cap of " << settings_.max_bond
               << "; raise svd_cutoff, shorten the memory or raise the cap";
            throw NumericalError(os.str());
        }
        max_bond_ = std::max(max_bond_, static_cast<int>(keep));
        return keep;
    }

    // Right-orthogonalize sites (first, last], then truncate bonds left to right.
    void compress(std::size_t first) {
        const std::size_t last = sites_.size() - 1;
        const auto letters = static_cast<Eigen::Index>(al_.size());
        for (std::size_t i = last; i > first; --i) {
            Site& site = sites_[i];
            const Eigen::Index rows = site[0].rows(), cols = site[0].cols();
            Matrix wide(rows, cols * letters);
            for (Eigen::Index s = 0; s < letters; ++s) wide.middleCols(s * cols, cols) = site[static_cast<std::size_t>(s)];
            Eigen::HouseholderQR<Matrix> qr(wide.adjoint());
            const Eigen::Index r = std::min(rows, cols * letters);
            const Matrix qa = (qr.householderQ() * Matrix::Identity(wide.cols(), r)).adjoint();
            const Matrix rt = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
            for (Eigen::Index s = 0; s < letters; ++s) site[static_cast<std::size_t>(s)] = qa.middleCols(s * cols, cols);
            const Matrix r_adj = rt.adjoint();
            for (auto& m : sites_[i - 1]) m = m * r_adj;
        }
        for (std::size_t i = first; i < last; ++i) {
            Site& site = sites_[i];
            const Eigen::Index rows = site[0].rows(), cols = site[0].cols();
            Matrix tall(rows * letters, cols);
            for (Eigen::Index s = 0; s < letters; ++s) tall.middleRows(s * rows, rows) = site[static_cast<std::size_t>(s)];
            Eigen::BDCSVD<Matrix> svd(tall, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Eigen::Index keep = kept(svd.singularValues());
            const Matrix u = svd.matrixU().leftCols(keep);
            const Matrix carry = svd.singularValues().head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
            for (Eigen::Index s = 0; s < letters; ++s) site[static_cast<std::size_t>(s)] = u.middleRows(s * rows, rows);
            for (auto& m : sites_[i + 1]) m = carry * m;
        }
    }

    Alphabet al_;
    std::vector<Complex> eta_;
    int memory_;
    TempoSettings settings_;
    std::vector<double> wires_;  // distinct Delta s values
    std::vector<int> wire_of_;   // wire of each letter
    int rest_ = -1;              // a letter with Delta s = 0
    std::vector<Site> sites_;
    std::vector<Vector> caps_;
    int max_bond_ = 0;
};

// State over (current index) x (initial index, bond_1, ..., bond_B), one column per current
// index, the remaining axes flattened row-major with the last bond fastest.
class BlockState {
public:
    explicit BlockState(const Matrix& initial)  // initial(a, a0)
        : n_(initial.rows()), rows_(initial.cols()) {
        dims_.push_back(rows_);
        psi_.resize(static_cast<std::size_t>(rows_ * n_));
        view(psi_, rows_) = initial.transpose();
    }

    void add_axis() { dims_.push_back(1); }

    void propagate(const Matrix& u) {
        spare_.resize(psi_.size());
        view(spare_, rows_).noalias() = view(psi_, rows_) * u.transpose();
        psi_.swap(spare_);
    }

    /// Contracts axis j of column a with pick(a) (old x new).
    template <class Pick>
    void apply(std::size_t j, Pick pick) {
        const Eigen::Index old_dim = dims_[j];
        const Eigen::Index new_dim = pick(0).cols();
        Eigen::Index left = 1, right = 1;
        for (std::size_t i = 0; i < j; ++i) left *= dims_[i];
        for (std::size_t i = j + 1; i < dims_.size(); ++i) right *= dims_[i];
        const Eigen::Index out_rows = left * new_dim * right;
        spare_.resize(static_cast<std::size_t>(out_rows * n_));
        for (Eigen::Index a = 0; a < n_; ++a) {
            const Matrix& m = pick(a);
            const Complex* src = psi_.data() + a * rows_;
            Complex* dst = spare_.data() + a * out_rows;
            if (right == 1) {
                Eigen::Map<const Matrix> x(src, old_dim, left);
                Eigen::Map<Matrix>(dst, new_dim, left).noalias() = m.transpose() * x;
            } else {
                for (Eigen::Index l = 0; l < left; ++l) {
                    Eigen::Map<const Matrix> x(src + l * old_dim * right, right, old_dim);
                    Eigen::Map<Matrix>(dst + l * new_dim * right, right, new_dim).noalias() = x * m;
                }
            }
        }
        psi_.swap(spare_);
        rows_ = out_rows;
        dims_[j] = new_dim;
    }

    /// v(a0, a) after contracting every bond axis with the given vectors.
    Matrix contract(const std::vector<const Vector*>& caps) const {
        BlockState t = *this;
        for (std::size_t j = caps.size(); j-- > 0;) {
            const Matrix c = *caps[j];
            t.apply(j + 1, [&](Eigen::Index) -> const Matrix& { return c; });
        }
        return view(t.psi_, t.rows_);
    }

private:
    Eigen::Map<Matrix> view(std::vector<Complex>& buf, Eigen::Index rows) const { return {buf.data(), rows, n_}; }
    Eigen::Map<const Matrix> view(const std::vector<Complex>& buf, Eigen::Index rows) const {
        return {buf.data(), rows, n_};
    }

    Eigen::Index n_, rows_;
    std::vector<Complex> psi_, spare_;
    std::vector<Eigen::Index> dims_;
};

DynamicalMapSeries run_tempo(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas, double dt_fs,
                             int steps, const TempoSettings& settings) {
    if (steps < 1) throw std::invalid_argument("tempo_maps: need at least one step");
    if (!(settings.svd_cutoff > 0.0 && settings.svd_cutoff < 1.0))
        throw std::invalid_argument("tempo_maps: svd_cutoff must lie in (0, 1)");
    const InfluenceTable inf(model, etas);
    const Eigen::Index d = model.dim();
    const Matrix half = bare_propagator(model.hamiltonian, 0.5 * dt_fs).matrix();
    const Matrix full = bare_propagator(model.hamiltonian, dt_fs).matrix();
    const auto comps = coupled_components(model.hamiltonian);

    // One process tensor per distinct (alphabet, eta) pair.
    std::vector<Alphabet> alphabets;
    std::vector<std::size_t> pt_of;
    std::vector<ProcessTensor> pts;
    std::vector<std::pair<Alphabet, std::vector<Complex>>> keys;
    for (std::size_t b = 0; b < inf.bath_count(); ++b) {
        alphabets.push_back(alphabet_of(inf, b));
        std::vector<Complex> eta;
        for (int k = 0; k <= inf.memory(); ++k) eta.push_back(inf.eta(b, k));
        std::size_t i = 0;
        while (i < keys.size() && !(keys[i].first == alphabets.back() && keys[i].second == eta)) ++i;
        if (i == keys.size()) {
            keys.emplace_back(alphabets.back(), eta);
            pts.emplace_back(alphabets.back(), eta, inf.memory(), steps, settings);
        }
        pt_of.push_back(i);
    }

    std::vector<Matrix> maps(static_cast<std::size_t>(steps), Matrix::Zero(d * d, d * d));
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (std::size_t j = i; j < comps.size(); ++j) {
            std::vector<Eigen::Index> liou;
            for (auto p : comps[i])
                for (auto m : comps[j]) liou.push_back(p * d + m);
            const auto n = static_cast<Eigen::Index>(liou.size());
            Matrix bh(n, n), bf(n, n);
            for (Eigen::Index r = 0; r < n; ++r)
                for (Eigen::Index c = 0; c < n; ++c) {
                    bh(r, c) = half(liou[static_cast<std::size_t>(r)], liou[static_cast<std::size_t>(c)]);
                    bf(r, c) = full(liou[static_cast<std::size_t>(r)], liou[static_cast<std::size_t>(c)]);
                }
            // Baths whose Delta s vanishes on the whole block contribute a factor of one.
            std::vector<std::size_t> active;
            for (std::size_t b = 0; b < inf.bath_count(); ++b) {
                bool moves = false;
                for (auto a : liou) moves = moves || alphabets[b].delta(alphabets[b].letter[static_cast<std::size_t>(a)]) != 0.0;
                if (moves) active.push_back(b);
            }
            // Initial indices are propagated in chunks that keep the state within budget.
            Eigen::Index peak = 1;
            for (int step = 1; step <= steps; ++step) {
                Eigen::Index prod = 1;
                for (auto b : active) prod *= pts[pt_of[b]].bond(step);
                peak = std::max(peak, prod);
            }
            const Eigen::Index chunk = std::clamp<Eigen::Index>(kStateBudget / (n * peak), 1, n);
            for (Eigen::Index c0 = 0; c0 < n; c0 += chunk) {
                const Eigen::Index width = std::min(chunk, n - c0);
                BlockState state(bh.middleCols(c0, width));
                for (std::size_t k = 0; k < active.size(); ++k) state.add_axis();
                for (int step = 1; step <= steps; ++step) {
                    if (step > 1) state.propagate(bf);
                    std::vector<const Vector*> caps;
                    for (std::size_t k = 0; k < active.size(); ++k) {
                        const auto b = active[k];
                        const ProcessTensor& pt = pts[pt_of[b]];
                        const Site& site = pt.site(step);
                        const auto& letter = alphabets[b].letter;
                        state.apply(k + 1, [&](Eigen::Index a) -> const Matrix& {
                            return site[static_cast<std::size_t>(letter[static_cast<std::size_t>(liou[static_cast<std::size_t>(a)])])];
                        });
                        caps.push_back(&pt.cap(step));
                    }
                    const Matrix m = bh * state.contract(caps).transpose();
                    auto& target = maps[static_cast<std::size_t>(step - 1)];
                    for (Eigen::Index r = 0; r < n; ++r) {
                        for (Eigen::Index c = 0; c < width; ++c) {
                            const Eigen::Index gr = liou[static_cast<std::size_t>(r)];
                            const Eigen::Index gc = liou[static_cast<std::size_t>(c0 + c)];
                            target(gr, gc) = m(r, c);
                            // E(X^dagger) = E(X)^dagger fills the mirrored block.
                            if (i != j) target((gr % d) * d + gr / d, (gc % d) * d + gc / d) = std::conj(m(r, c));
                        }
                    }
                }
            }
        }
    }

    int bond = 0;
    for (const auto& pt : pts) bond = std::max(bond, pt.max_bond());
    DynamicalMapSeries out;
    out.dt_fs = dt_fs;
    std::ostringstream prov;
    prov << "tempo(svd_cutoff=" << settings.svd_cutoff << ")";
    out.provenance = prov.str();
    out.max_bond = bond;
    out.maps.push_back(SuperOperator::identity(d, dt_fs));
    for (auto& m : maps) out.maps.emplace_back(std::move(m), dt_fs);
    return out;
}

}  // namespace

DynamicalMapSeries tempo_maps(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas, double dt_fs,
                              int steps, const TempoSettings& settings) {
    return run_tempo(model, etas, dt_fs, steps, settings);
}

DynamicalMapSeries nonhermitian_maps(const SystemModel& model, const std::vector<bath::EtaCoefficients>& etas,
                                     double dt_fs, int steps, const TempoSettings& settings) {
    const Matrix& h = model.hamiltonian;
    Matrix off = h;
    off.diagonal().setZero();
    if (hermiticity_defect(off) > 1e-12 * std::max(1.0, h.norm()))
        throw std::invalid_argument("nonhermitian_maps: only the diagonal of H may be non-Hermitian");
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        if (h(i, i).imag() > 0.0) {
            throw std::invalid_argument(
                "nonhermitian_maps: positive imaginary energy on state '" + model.labels[static_cast<std::size_t>(i)] +
                "'; gain cannot be represented by a non-Hermitian Hamiltonian (use a Lindblad pump)");
        }
    }
    auto out = run_tempo(model, etas, dt_fs, steps, settings);
    out.nonhermitian = true;
    return out;
}

}  // namespace pild
