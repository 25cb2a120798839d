#include "pild/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace pild {

namespace fs = std::filesystem;

fs::path default_output_root() {
    if (const char* root = std::getenv(kOutputRootVariable); root && *root) return root;
    return "pild_output";
}

fs::path output_directory(const RunConfig& cfg, const RunOptions& opt) {
    const fs::path dir = cfg.output.directory.empty() ? fs::path(cfg.output.prefix) : fs::path(cfg.output.directory);
    return dir.is_absolute() ? dir : opt.output_root / dir;
}

std::vector<double> total_excitation(const RDMTrajectory& traj, const SystemModel& model) {
    std::vector<double> weight;
    for (std::size_t s = 0; s < traj.labels().size(); ++s) {
        const auto i = model.index_of(traj.labels()[s]);
        if (model.ground && *model.ground == i) weight.push_back(0.0);
        else if (!model.monomers.empty() && !model.monomers[i].empty()) weight.push_back(static_cast<double>(model.monomers[i].size()));
        else if (!model.monomers.empty() && !model.ground) weight.push_back(0.0);
        else weight.push_back(1.0);
    }
    std::vector<double> out;
    for (const auto& rho : traj.states()) {
        double e = 0.0;
        for (std::size_t s = 0; s < weight.size(); ++s) e += weight[s] * rho(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)).real();
        out.push_back(e);
    }
    return out;
}

double tail_mean(const std::vector<double>& series, double fraction) {
    if (series.empty()) return 0.0;
    const auto n = series.size();
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
    double sum = 0.0;
    for (std::size_t k = n - count; k < n; ++k) sum += series[k];
    return sum / static_cast<double>(count);
}

void write_sidecar(const fs::path& path, const RunConfig& cfg, const std::map<std::string, std::string>& results,
                   const std::vector<fs::path>& files) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const std::string text = cfg.canonical();
    out << "# pild " << kVersion << " run metadata; this file is itself a runnable config\n";
    out << "# config_sha1 = " << content_hash(text) << '\n';
    out << "# source = " << cfg.origin << '\n';
    for (const auto& [k, v] : results) out << "# " << k << " = " << v << '\n';
    for (const auto& f : files) out << "# file = " << f.filename().string() << '\n';
    out << '\n' << text;
}

namespace {

std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void say(const RunOptions& opt, const std::string& line) {
    if (opt.log) *opt.log << line << std::endl;
}

std::string map_key(const RunConfig& cfg, const SystemModel& model, const std::string& engine) {
    std::ostringstream os;
    os << std::setprecision(17) << engine << '|' << cfg.propagation.dt_fs << '|' << cfg.propagation.memory_steps() << '|'
       << cfg.propagation.svd_cutoff << '|' << cfg.propagation.max_bond << '|' << cfg.bath.kind << '|' << cfg.bath.xi << '|'
       << cfg.bath.omega_cutoff << '|' << cfg.bath.temperature_K << '|' << cfg.bath.table << '|';
    for (Eigen::Index i = 0; i < model.dim(); ++i)
        for (Eigen::Index j = 0; j < model.dim(); ++j) os << model.hamiltonian(i, j) << ',';
    for (const auto& c : model.couplings) os << '|' << c.bath << ':' << c.diagonal().transpose();
    return os.str();
}

std::shared_ptr<const MapCache::Entry> make_maps(const RunConfig& cfg, const SystemModel& model, const BathSpec& bath,
                                                 const std::string& engine, const RunOptions& opt) {
    const int m = cfg.propagation.memory_steps();
    const double dt = cfg.propagation.dt_fs;
    auto build = [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto etas = eta_for_model(model, bath, dt, m);
        const TempoSettings ts{cfg.propagation.svd_cutoff, cfg.propagation.max_bond};
        DynamicalMapSeries maps;
        if (engine == "brute") maps = brute_force_maps(model, etas, dt, m);
        else if (engine == "nonhermitian") maps = nonhermitian_maps(model, etas, dt, m, ts);
        else maps = tempo_maps(model, etas, dt, m, ts);
        say(opt, "maps: " + maps.provenance + ", " + std::to_string(m) + " steps, max bond " + std::to_string(maps.max_bond) +
                     ", " + num(seconds_since(t0)) + " s");
        return MapCache::Entry{transfer_tensors(maps, m), maps.provenance, maps.max_bond};
    };
    if (opt.cache) return opt.cache->get(map_key(cfg, model, engine), build);
    return std::make_shared<const MapCache::Entry>(build());
}

template <class Write>
fs::path write_file(RunOutputs& out, const fs::path& dir, const std::string& name, Write write) {
    const fs::path path = dir / name;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    write(f);
    out.files.push_back(path);
    return path;
}

}  // namespace

RunOutputs run_pipeline(const RunConfig& cfg, const RunOptions& opt) {
    validate_config(cfg);
    RunOutputs out;
    const SystemModel model = build_model(cfg);
    const auto jumps = build_jumps(cfg, model);
    const BathSpec bath = build_bath(cfg);
    const DensityMatrix rho0 = build_initial(cfg, model);
    const auto& p = cfg.propagation;
    const auto convention = parse_loss_convention(p.loss_convention);
    const auto splitting = p.lindblad_splitting == "dissipator" ? LindbladSplitting::dissipator
                           : p.lindblad_splitting == "spanning" ? LindbladSplitting::spanning
                                                                 : LindbladSplitting::generator;
    const auto t0 = std::chrono::steady_clock::now();

    SystemModel analysed = model;
    std::vector<JumpOperator> analysed_jumps = jumps;
    if (p.engine == "lindblad_only") {
        out.trajectory = propagate_lindblad_reference(model.hamiltonian, jumps, rho0, p.dt_fs, p.n_steps);
        out.results["engine"] = "lindblad_only (bath-free)";
    } else if (p.engine == "nonhermitian") {
        try {
            analysed = nonhermitian_model(model, jumps, convention);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(cfg.origin, 0, e.what());
        }
        analysed_jumps.clear();
        std::vector<Eigen::Index> keep;
        for (const auto& l : analysed.labels) keep.push_back(static_cast<Eigen::Index>(model.index_of(l)));
        Matrix r(analysed.dim(), analysed.dim());
        for (Eigen::Index a = 0; a < analysed.dim(); ++a)
            for (Eigen::Index b = 0; b < analysed.dim(); ++b) r(a, b) = rho0.matrix()(keep[a], keep[b]);
        if (std::abs(r.trace() - 1.0) > 1e-10)
            throw ConfigError(cfg.origin, 0, "[initial] the non-Hermitian engine has no ground state to start from");
        const auto maps = make_maps(cfg, analysed, bath, "nonhermitian", opt);
        PropagationSettings lossy;
        lossy.trace_preserving = false;
        out.trajectory = propagate_pild(maps->tensors, {}, DensityMatrix(r, analysed.labels), p.n_steps, lossy);
        out.results["engine"] = maps->provenance + " nonhermitian(" + p.loss_convention + ")";
        out.results["max_bond"] = std::to_string(maps->max_bond);
    } else if (cfg.analysis.compare_nonhermitian) {
        // The comparison's Lindblad leg is this run's trajectory.
        ComparisonSettings cs;
        cs.dt_fs = p.dt_fs;
        cs.memory = p.memory_steps();
        cs.steps = p.n_steps;
        cs.tempo = {p.svd_cutoff, p.max_bond};
        cs.convention = convention;
        cs.splitting = splitting;
        try {
            out.comparison = compare_methods(model, jumps, bath, rho0, cs);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(cfg.origin, 0, std::string("[analysis] compare_nonhermitian: ") + e.what());
        }
        out.trajectory = out.comparison->lindblad_trajectory;
        out.results["engine"] = "tempo(svd_cutoff=" + num(p.svd_cutoff) + ")";
        out.results["comparison_max_deviation"] = num(out.comparison->max_deviation());
        out.results["comparison_convention"] = p.loss_convention;
        say(opt, "comparison: max deviation " + out.results["comparison_max_deviation"]);
    } else {
        const auto maps = make_maps(cfg, model, bath, p.engine, opt);
        PropagationSettings ps;
        ps.splitting = splitting;
        ps.hamiltonian = model.hamiltonian;
        out.trajectory = propagate_pild(maps->tensors, jumps, rho0, p.n_steps, ps);
        out.results["engine"] = maps->provenance;
        out.results["max_bond"] = std::to_string(maps->max_bond);
    }
    out.results["memory_steps"] = std::to_string(p.memory_steps());
    out.results["final_trace"] = num(out.trajectory[out.trajectory.size() - 1].trace().real());

    out.excitation = total_excitation(out.trajectory, analysed);
    out.steady_excitation = tail_mean(out.excitation, cfg.analysis.steady_fraction);
    out.results["steady_excitation"] = num(out.steady_excitation);
    out.results["final_excitation"] = num(out.excitation.back());

    if (cfg.analysis.s2s) {
        out.flows = accumulate_flows(out.trajectory, analysed, analysed_jumps);
        if (wants_monomer_flows(cfg) && p.engine != "nonhermitian") {
            out.sites = monomer_flows(*out.flows, out.trajectory, analysed);
            // Current out of the first drained monomer.
            for (const auto& j : cfg.jumps) {
                if (j.kind != "drain") continue;
                try {
                    out.current = excitonic_current(out.sites->outflow[static_cast<std::size_t>(j.site - 1)], p.dt_fs,
                                                    cfg.analysis.current_fraction, cfg.analysis.current_min_r2);
                    out.results["current_per_ps"] = num(out.current->current_per_ps);
                    out.results["current_r_squared"] = num(out.current->r_squared);
                    out.results["current_window_fs"] = num(out.current->window_start_fs) + "-" + num(out.current->window_end_fs);
                } catch (const NumericalError& e) {
                    out.results["current_error"] = e.what();
                }
                out.results["current_site"] = std::to_string(j.site);
                break;
            }
        }
    }
    out.results["wall_time_s"] = num(seconds_since(t0));
    say(opt, "run: " + std::to_string(p.n_steps) + " steps, steady excitation " + out.results["steady_excitation"] +
                 (out.current ? ", current " + out.results["current_per_ps"] + " ps^-1" : std::string()));

    out.model = analysed;
    out.directory = output_directory(cfg, opt);
    if (!opt.write) return out;
    fs::create_directories(out.directory);
    const auto stride = static_cast<std::size_t>(cfg.output.stride);
    const std::string& pre = cfg.output.prefix;
    write_file(out, out.directory, pre + "_rdm.csv", [&](std::ostream& f) { out.trajectory.write_csv(f, {}, stride); });
    write_file(out, out.directory, pre + "_populations.csv", [&](std::ostream& f) {
        std::vector<std::pair<std::string, std::string>> diag;
        for (const auto& l : out.trajectory.labels()) diag.emplace_back(l, l);
        out.trajectory.write_csv(f, diag, stride);
    });
    write_file(out, out.directory, pre + "_excitation.csv", [&](std::ostream& f) {
        f << "time_fs,E_total\n" << std::setprecision(12);
        for (std::size_t k = 0; k < out.excitation.size(); k += stride) f << out.trajectory.time(k) << ',' << out.excitation[k] << '\n';
    });
    if (out.flows) {
        write_file(out, out.directory, pre + "_flows.csv", [&](std::ostream& f) { out.flows->write_csv(f, stride); });
        if (analysed.ground) {
            std::vector<std::pair<std::string, std::vector<double>>> losses;
            for (std::size_t s = 0; s < analysed.labels.size(); ++s) {
                if (s == *analysed.ground) continue;
                auto l = site_loss(*out.flows, analysed, analysed.labels[s]);
                if (std::any_of(l.begin(), l.end(), [](double v) { return v != 0.0; }))
                    losses.emplace_back("L_" + analysed.labels[s], std::move(l));
            }
            if (!losses.empty()) {
                write_file(out, out.directory, pre + "_losses.csv", [&](std::ostream& f) {
                    f << "time_fs";
                    for (const auto& l : losses) f << ',' << l.first;
                    f << '\n' << std::setprecision(12);
                    for (std::size_t k = 0; k < out.flows->size(); k += stride) {
                        f << out.flows->time(k);
                        for (const auto& l : losses) f << ',' << l.second[k];
                        f << '\n';
                    }
                });
            }
        }
        if (p.engine == "nonhermitian") {
            write_file(out, out.directory, pre + "_sinks.csv", [&](std::ostream& f) {
                f << "time_fs";
                for (const auto& l : analysed.labels) f << ",abs(P_" << l << "<-" << l << ')';
                f << '\n' << std::setprecision(12);
                std::vector<std::vector<double>> sinks;
                for (Eigen::Index j = 0; j < analysed.dim(); ++j) sinks.push_back(out.flows->sink(j));
                for (std::size_t k = 0; k < out.flows->size(); k += stride) {
                    f << out.flows->time(k);
                    for (const auto& s : sinks) f << ',' << std::abs(s[k]);
                    f << '\n';
                }
            });
        }
    }
    if (out.sites)
        write_file(out, out.directory, pre + "_site_flows.csv", [&](std::ostream& f) { out.sites->write_csv(f, stride); });
    if (out.comparison) {
        write_file(out, out.directory, pre + "_comparison.csv", [&](std::ostream& f) { out.comparison->write_csv(f, stride); });
        write_file(out, out.directory, pre + "_comparison.txt", [&](std::ostream& f) { out.comparison->write_summary(f); });
    }
    const fs::path meta = out.directory / (pre + ".meta");
    write_sidecar(meta, cfg, out.results, out.files);
    out.files.push_back(meta);
    return out;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const RunOptions& opt) {
    validate_config(cfg);
    if (!cfg.sweep) throw ConfigError(cfg.origin, 0, "no [sweep] section");
    MapCache local;
    RunOptions inner = opt;
    inner.write = false;
    inner.log = nullptr;
    if (!inner.cache) inner.cache = &local;

    std::vector<RunConfig> points;
    for (double tp : cfg.sweep->pump_grid()) {
        for (double td : cfg.sweep->drain_grid()) {
            RunConfig c = cfg;
            c.sweep.reset();
            bool pump_set = false, drain_set = false;
            for (auto& j : c.jumps) {
                if (j.kind == "pump" && !pump_set) j.timescale_fs = tp, pump_set = true;
                else if (j.kind == "drain" && !drain_set) j.timescale_fs = td, drain_set = true;
            }
            points.push_back(std::move(c));
        }
    }
    // Build the shared maps once before fanning out.
    {
        RunConfig warm = points.front();
        warm.propagation.n_steps = 1;
        warm.analysis.s2s = false;
        RunOptions w = inner;
        w.log = opt.log;
        run_pipeline(warm, w);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepPoint> result(points.size());
    for (std::size_t start = 0; start < points.size(); start += workers) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = start; i < std::min(points.size(), start + workers); ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                const auto r = run_pipeline(points[i], inner);
                SweepPoint& sp = result[i];
                for (const auto& j : points[i].jumps) {
                    if (j.kind == "pump" && sp.pump_fs == 0.0) sp.pump_fs = j.timescale_fs;
                    if (j.kind == "drain" && sp.drain_fs == 0.0) sp.drain_fs = j.timescale_fs;
                }
                sp.steady_excitation = r.steady_excitation;
                if (r.current) sp.current_per_ps = r.current->current_per_ps;
            }));
        }
        for (auto& f : batch) f.get();
    }
    say(opt, "sweep: " + std::to_string(points.size()) + " points, " + num(seconds_since(t0)) + " s");

    if (opt.write) {
        const fs::path dir = output_directory(cfg, opt);
        fs::create_directories(dir);
        RunOutputs files;
        write_file(files, dir, cfg.output.prefix + "_sweep.csv", [&](std::ostream& f) {
            f << "T_pump_fs,T_drain_fs,steady_excitation,current_per_ps\n" << std::setprecision(12);
            for (const auto& sp : result) {
                f << sp.pump_fs << ',' << sp.drain_fs << ',' << sp.steady_excitation << ',';
                if (sp.current_per_ps) f << *sp.current_per_ps;
                else f << "nan";
                f << '\n';
            }
        });
        std::map<std::string, std::string> meta{{"sweep_points", std::to_string(result.size())}};
        const fs::path path = dir / (cfg.output.prefix + ".meta");
        write_sidecar(path, cfg, meta, files.files);
    }
    return result;
}

}  // namespace pild
