#include "pild/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#ifndef PILD_CONFIG_DIR
#define PILD_CONFIG_DIR "configs"
#endif

namespace pild {

namespace fs = std::filesystem;

fs::path default_config_dir() {
    if (const char* dir = std::getenv(kConfigDirVariable); dir && *dir) return dir;
    return PILD_CONFIG_DIR;
}

const std::vector<FigureSpec>& figure_catalog() {
    static const std::vector<FigureSpec> catalog = {
        {"fig1", "polaritonic trimer: populations, Lindblad vs non-Hermitian", {"fig1-3_polariton.cfg"}},
        {"fig2", "polaritonic trimer: flows between excited states", {"fig1-3_polariton.cfg"}},
        {"fig3", "polaritonic trimer: accumulated losses", {"fig1-3_polariton.cfg"}},
        {"fig4", "pumped dimer: populations", {"fig4-6_pumped_dimer.cfg"}},
        {"fig5", "pumped dimer: state-to-state flows", {"fig4-6_pumped_dimer.cfg"}},
        {"fig6", "pumped dimer: monomer flows", {"fig4-6_pumped_dimer.cfg"}},
        {"fig7", "dimer pump/drain: monomer excitations for three timescale pairs",
         {"fig7_dimer_pump_150_drain_300.cfg", "fig7_dimer_pump_drain.cfg", "fig7_dimer_pump_300_drain_150.cfg"}},
        {"fig8", "dimer pump/drain: steady-state excitation and current over a timescale grid",
         {"fig8_steady_state_grid.cfg"}},
        {"fig9", "dimer pump/drain: state-to-state flows", {"fig7_dimer_pump_drain.cfg"}},
        {"fig10", "excitonic current extraction: dimer and trimer",
         {"fig7_dimer_pump_drain.cfg", "fig10_trimer_pump_drain.cfg"}},
    };
    return catalog;
}

const FigureSpec& find_figure(const std::string& id) {
    for (const auto& f : figure_catalog())
        if (f.id == id) return f;
    std::string known;
    for (const auto& f : figure_catalog()) known += (known.empty() ? "" : ", ") + f.id;
    throw std::invalid_argument("unknown figure '" + id + "' (known: " + known + ")");
}

namespace {

// Wide table on a shared time axis.
struct Table {
    std::vector<double> time;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values) {
        if (time.empty()) throw std::logic_error("table: time axis not set");
        values.resize(time.size(), std::nan(""));
        names.push_back(std::move(name));
        columns.push_back(std::move(values));
    }
    void write(const fs::path& path, std::size_t stride) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << "time_fs";
        for (const auto& n : names) out << ',' << n;
        out << '\n' << std::setprecision(12);
        for (std::size_t k = 0; k < time.size(); k += std::max<std::size_t>(stride, 1)) {
            out << time[k];
            for (const auto& c : columns) out << ',' << c[k];
            out << '\n';
        }
    }
};

Table time_axis(double dt, std::size_t n) {
    Table t;
    for (std::size_t k = 0; k < n; ++k) t.time.push_back(dt * static_cast<double>(k));
    return t;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

void comparison_columns(Table& t, const ComparisonReport& rep, bool (*keep)(const std::string&)) {
    for (std::size_t i = 0; i < rep.names.size(); ++i) {
        if (!keep(rep.names[i])) continue;
        t.add("lindblad:" + rep.names[i], rep.lindblad[i]);
        t.add("nonhermitian:" + rep.names[i], rep.nonhermitian[i]);
    }
}

void flow_columns(Table& t, const FlowMatrix& flows, const std::string& tag = "") {
    const auto d = flows.dim();
    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index r = 0; r < d; ++r) {
            if (l == r) continue;
            for (Channel c : {Channel::hamiltonian, Channel::lindblad}) {
                auto s = flows.series(l, r, c);
                const bool nonzero = std::any_of(s.begin(), s.end(), [](double v) { return std::abs(v) > 1e-14; });
                // Antisymmetric pairs: keep the l > r half plus directed Lindblad terms both ways.
                if (!nonzero || (c == Channel::hamiltonian && l < r)) continue;
                if (c == Channel::lindblad && s.back() < 0.0) continue;
                t.add(tag + "P_" + flows.labels()[static_cast<std::size_t>(l)] + "<-" +
                          flows.labels()[static_cast<std::size_t>(r)] + ":" + channel_name(c),
                      std::move(s));
            }
        }
}

void site_columns(Table& t, const SiteFlows& s, const std::string& tag = "") {
    for (int a = 1; a <= s.monomers; ++a) {
        t.add(tag + "F+_" + std::to_string(a), s.inflow[static_cast<std::size_t>(a - 1)]);
        t.add(tag + "F-_" + std::to_string(a), s.outflow[static_cast<std::size_t>(a - 1)]);
    }
    for (int a = 1; a <= s.monomers; ++a)
        for (int b = 1; b <= s.monomers; ++b)
            if (a != b)
                t.add(tag + "F_" + std::to_string(a) + "<-" + std::to_string(b),
                      s.between[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)]);
    for (int a = 1; a <= s.monomers; ++a) t.add(tag + "E_" + std::to_string(a), s.excitation[static_cast<std::size_t>(a - 1)]);
}

const RunOutputs& need(const RunOutputs& r, bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error("figure run lacks " + what + "; check the [analysis] section of " + r.directory.string());
    return r;
}

std::string pump_drain_tag(const RunConfig& cfg) {
    std::string pump = "-", drain = "-";
    for (const auto& j : cfg.jumps) {
        if (j.kind == "pump" && pump == "-") pump = fmt(j.timescale_fs);
        if (j.kind == "drain" && drain == "-") drain = fmt(j.timescale_fs);
    }
    return "[Tp=" + pump + ",Td=" + drain + "]";
}

}  // namespace

FigureResult reproduce_figure(const std::string& id, const fs::path& config_dir, const RunOptions& opt) {
    const auto& spec = find_figure(id);
    FigureResult res;
    res.directory = opt.output_root / spec.id;
    fs::create_directories(res.directory);

    RunOptions sub = opt;
    sub.output_root = res.directory;
    sub.write = true;
    MapCache local;
    if (!sub.cache) sub.cache = &local;

    std::vector<RunConfig> cfgs;
    for (const auto& name : spec.configs) {
        cfgs.push_back(load_config(config_dir / name));
        validate_config(cfgs.back());
    }

    std::map<std::string, std::string> meta;
    meta["figure"] = spec.id;
    meta["title"] = spec.title;
    for (std::size_t i = 0; i < cfgs.size(); ++i)
        meta["config" + std::to_string(i + 1)] = spec.configs[i] + " sha1=" + content_hash(cfgs[i].canonical());

    Table table;
    std::size_t stride = static_cast<std::size_t>(std::max(1, cfgs.front().output.stride));

    if (spec.id == "fig8") {
        const auto& cfg = cfgs.front();
        if (!cfg.sweep) throw ConfigError(cfg.origin, 0, "fig8 needs a [sweep] section");
        const auto points = run_sweep(cfg, sub);
        res.table = res.directory / (spec.id + ".csv");
        std::ofstream out(res.table);
        out << "T_pump_fs,T_drain_fs,steady_excitation,current_per_ps\n" << std::setprecision(12);
        for (const auto& p : points) {
            out << p.pump_fs << ',' << p.drain_fs << ',' << p.steady_excitation << ',';
            if (p.current_per_ps) out << *p.current_per_ps;
            else out << "nan";
            out << '\n';
        }
        meta["points"] = std::to_string(points.size());
    } else {
        std::vector<RunOutputs> runs;
        for (const auto& cfg : cfgs) {
            runs.push_back(run_pipeline(cfg, sub));
            for (const auto& f : runs.back().files) res.files.push_back(f);
        }
        const auto& r0 = runs.front();
        table = time_axis(r0.trajectory.dt_fs(), r0.trajectory.size());

        if (spec.id == "fig1" || spec.id == "fig2" || spec.id == "fig3") {
            const auto& rep = *need(r0, r0.comparison.has_value(), "the non-Hermitian comparison").comparison;
            if (spec.id == "fig1") comparison_columns(table, rep, [](const std::string& n) { return n.rfind("P_", 0) == 0; });
            if (spec.id == "fig2")
                comparison_columns(table, rep, [](const std::string& n) { return n.find("<-") != std::string::npos; });
            if (spec.id == "fig3") comparison_columns(table, rep, [](const std::string& n) { return n.rfind("L_", 0) == 0; });
            if (spec.id == "fig1") table.add("nonhermitian:trace", rep.nonhermitian_trace);
            meta["comparison_max_deviation"] = fmt(rep.max_deviation());
        } else if (spec.id == "fig4") {
            for (std::size_t s = 0; s < r0.trajectory.labels().size(); ++s)
                table.add("P_" + r0.trajectory.labels()[s], r0.trajectory.population(s));
            table.add("E_total", r0.excitation);
        } else if (spec.id == "fig5" || spec.id == "fig9") {
            flow_columns(table, *need(r0, r0.flows.has_value(), "state-to-state flows").flows);
        } else if (spec.id == "fig6") {
            site_columns(table, *need(r0, r0.sites.has_value(), "monomer flows").sites);
        } else if (spec.id == "fig7") {
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const auto& r = runs[i];
                const auto& s = *need(r, r.sites.has_value(), "monomer flows").sites;
                const auto tag = pump_drain_tag(cfgs[i]);
                for (int a = 1; a <= s.monomers; ++a) table.add("E_" + std::to_string(a) + tag, s.excitation[static_cast<std::size_t>(a - 1)]);
                table.add("E_total" + tag, r.excitation);
                meta["steady_excitation" + tag] = fmt(r.steady_excitation);
            }
        } else if (spec.id == "fig10") {
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const auto& r = runs[i];
                const auto& s = *need(r, r.sites.has_value(), "monomer flows").sites;
                const std::string tag = "[N=" + std::to_string(s.monomers) + "]";
                table.add("F-_" + std::to_string(s.monomers) + tag, s.outflow[static_cast<std::size_t>(s.monomers - 1)]);
                table.add("E_total" + tag, r.excitation);
                if (r.current) {
                    meta["current_per_ps" + tag] = fmt(r.current->current_per_ps);
                    meta["current_r2" + tag] = fmt(r.current->r_squared);
                    meta["current_window_fs" + tag] = fmt(r.current->window_start_fs) + ".." + fmt(r.current->window_end_fs);
                } else if (auto it = r.results.find("current_error"); it != r.results.end()) {
                    meta["current_error" + tag] = it->second;
                }
                meta["steady_excitation" + tag] = fmt(r.steady_excitation);
            }
        }
        res.table = res.directory / (spec.id + ".csv");
        table.write(res.table, stride);
    }
    res.files.push_back(res.table);

    const fs::path meta_path = res.directory / (spec.id + ".meta");
    std::ofstream out(meta_path);
    if (!out) throw std::runtime_error("cannot write " + meta_path.string());
    out << "# pild " << kVersion << " figure metadata\n";
    for (const auto& [k, v] : meta) out << k << " = " << v << '\n';
    out << "table = " << res.table.filename().string() << '\n';
    res.files.push_back(meta_path);
    return res;
}

}  // namespace pild
