// pild — command-line front end: run, reproduce, validate, oracle.
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "pild/config.hpp"
#include "pild/figures.hpp"
#include "pild/pathint.hpp"
#include "pild/runner.hpp"

namespace fs = std::filesystem;
using namespace pild;

namespace {

constexpr int kOk = 0, kConfigFailure = 1, kNumericalFailure = 2;

int cmd_run(const fs::path& file, const RunOptions& opt) {
    const auto cfg = load_config(file);
    validate_config(cfg);
    if (cfg.sweep) {
        const auto points = run_sweep(cfg, opt);
        std::cout << "sweep: " << points.size() << " points -> " << output_directory(cfg, opt).string() << '\n';
        return kOk;
    }
    const auto out = run_pipeline(cfg, opt);
    std::cout << "wrote " << out.files.size() << " files to " << out.directory.string() << '\n';
    for (const auto& [k, v] : out.results) std::cout << "  " << k << " = " << v << '\n';
    return kOk;
}

int cmd_reproduce(const std::string& id, const fs::path& config_dir, const RunOptions& opt) {
    std::vector<std::string> ids;
    if (id == "all")
        for (const auto& f : figure_catalog()) ids.push_back(f.id);
    else
        ids.push_back(id);
    MapCache cache;
    RunOptions shared = opt;
    shared.cache = &cache;
    for (const auto& f : ids) {
        const auto res = reproduce_figure(f, config_dir, shared);
        std::cout << f << ": " << res.table.string() << '\n';
    }
    return kOk;
}

int cmd_validate(const fs::path& file) {
    const auto cfg = load_config(file);
    validate_config(cfg);
    // Building the pieces catches label and operator errors the syntax check cannot.
    const auto model = build_model(cfg);
    const auto jumps = build_jumps(cfg, model);
    build_bath(cfg);
    build_initial(cfg, model);
    std::cout << file.string() << ": ok (" << model.dim() << " states, " << jumps.size() << " Lindblad terms, "
              << cfg.propagation.memory_steps() << " memory steps)\n";
    return kOk;
}

// Brute-force path sum against the tensor-network engine on the first few steps of a run file.
int cmd_oracle(const fs::path& file, int steps, double tolerance, double max_paths) {
    auto cfg = load_config(file);
    validate_config(cfg);
    const auto model = build_model(cfg);
    const auto bath = build_bath(cfg);
    const auto& p = cfg.propagation;
    const double dim = static_cast<double>(model.dim());
    const double paths = std::pow(dim, 2.0 * steps);
    if (paths > max_paths)
        throw ConfigError(cfg.origin, 0,
                          "oracle: " + std::to_string(model.dim()) + " states over " + std::to_string(steps) +
                              " steps means " + std::to_string(paths) + " paths; lower --steps");
    const int memory = std::max(steps, 1);
    const auto etas = eta_for_model(model, bath, p.dt_fs, memory);
    const auto exact = brute_force_maps(model, etas, p.dt_fs, steps, max_paths);
    const auto tn = tempo_maps(model, etas, p.dt_fs, steps, {p.svd_cutoff, p.max_bond});
    double worst = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double d = (exact.maps[static_cast<std::size_t>(k)].matrix() - tn.maps[static_cast<std::size_t>(k)].matrix())
                             .cwiseAbs()
                             .maxCoeff();
        worst = std::max(worst, d);
        std::cout << "step " << k << ": max |brute - tempo| = " << std::scientific << std::setprecision(3) << d << '\n';
    }
    std::cout << "oracle " << (worst <= tolerance ? "PASS" : "FAIL") << ": " << worst << " vs tolerance " << tolerance
              << " (svd_cutoff " << p.svd_cutoff << ", max bond " << tn.max_bond << ")\n";
    return worst <= tolerance ? kOk : kNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"path-integral Lindblad dynamics with state-to-state transport analysis"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string output_root;
    bool quiet = false;
    app.add_option("-o,--output-root", output_root,
                   std::string("output root (default: $") + kOutputRootVariable + " or ./pild_output)");
    app.add_flag("-q,--quiet", quiet, "no progress messages");

    fs::path run_file;
    auto* run = app.add_subcommand("run", "run a config file (a [sweep] section runs the grid)");
    run->add_option("config", run_file, "run file")->required();

    std::string figure;
    fs::path config_dir = default_config_dir();
    auto* reproduce = app.add_subcommand("reproduce", "reproduce a figure: fig1 .. fig10, or all");
    reproduce->add_option("figure", figure, "figure id")->required();
    reproduce->add_option("--config-dir", config_dir, std::string("directory of the figure run files (default: $") +
                                                          kConfigDirVariable + " or the source tree's configs/)");

    fs::path validate_file;
    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", validate_file, "run file")->required();

    fs::path oracle_file;
    int oracle_steps = 6;
    double tolerance = 1e-8, max_paths = 1e8;
    auto* oracle = app.add_subcommand("oracle", "compare the tensor-network maps with the exact path sum");
    oracle->add_option("config", oracle_file, "run file")->required();
    oracle->add_option("--steps", oracle_steps, "time steps (exact sum costs dim^(2 steps))")->check(CLI::Range(1, 64));
    oracle->add_option("--tolerance", tolerance, "largest accepted element-wise difference");
    oracle->add_option("--max-paths", max_paths, "refuse larger exact sums");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigFailure;
    }

    RunOptions opt;
    if (!output_root.empty()) opt.output_root = output_root;
    if (!quiet) opt.log = &std::cerr;

    try {
        if (*run) return cmd_run(run_file, opt);
        if (*reproduce) return cmd_reproduce(figure, config_dir, opt);
        if (*validate) return cmd_validate(validate_file);
        if (*oracle) return cmd_oracle(oracle_file, oracle_steps, tolerance, max_paths);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigFailure;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kOk;
}
