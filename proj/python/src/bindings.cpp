// Python bindings: config-driven runs and reproductions, model builders, and the bath-free
// reference integrator for quick checks.

#include <algorithm>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pild/config.hpp"
#include "pild/figures.hpp"
#include "pild/nonhermitian.hpp"
#include "pild/pild.hpp"
#include "pild/runner.hpp"
#include "pild/s2s.hpp"

namespace py = pybind11;
using namespace pild;

namespace {

py::dict trajectory_dict(const RDMTrajectory& traj) {
    py::dict pops;
    for (std::size_t s = 0; s < traj.labels().size(); ++s) pops[py::str(traj.labels()[s])] = traj.population(s);
    std::vector<double> time;
    for (std::size_t k = 0; k < traj.size(); ++k) time.push_back(traj.time(k));
    py::dict out;
    out["time_fs"] = time;
    out["labels"] = traj.labels();
    out["populations"] = pops;
    out["states"] = traj.states();
    return out;
}

py::dict outputs_dict(const RunOutputs& r) {
    py::dict out = trajectory_dict(r.trajectory);
    out["excitation"] = r.excitation;
    out["steady_excitation"] = r.steady_excitation;
    out["results"] = r.results;
    out["directory"] = r.directory;
    out["files"] = r.files;
    if (r.current) out["current_per_ps"] = r.current->current_per_ps;
    if (r.flows) {
        py::dict flows;
        const auto& f = *r.flows;
        for (Eigen::Index l = 0; l < f.dim(); ++l)
            for (Eigen::Index s = 0; s < f.dim(); ++s) {
                if (l == s) continue;
                auto v = f.series(l, s, Channel::total);
                if (std::none_of(v.begin(), v.end(), [](double x) { return x != 0.0; })) continue;
                flows[py::make_tuple(f.labels()[static_cast<std::size_t>(l)], f.labels()[static_cast<std::size_t>(s)])] = v;
            }
        out["flows"] = flows;
    }
    if (r.comparison) out["comparison_max_deviation"] = r.comparison->max_deviation();
    return out;
}

RunOptions options(const std::optional<std::filesystem::path>& root, bool write) {
    RunOptions opt;
    if (root) opt.output_root = *root;
    opt.write = write;
    return opt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "path-integral Lindblad dynamics and state-to-state transport";
    m.attr("__version__") = kVersion;
    m.attr("HBAR_CM_FS") = units::kHbar;
    m.attr("KB_CM_K") = units::kBoltzmann;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<RunConfig>(m, "RunConfig")
        .def("canonical", &RunConfig::canonical)
        .def("validate", [](const RunConfig& c) { validate_config(c); })
        .def_property_readonly("origin", [](const RunConfig& c) { return c.origin; })
        .def_property_readonly("sha1", [](const RunConfig& c) { return content_hash(c.canonical()); });

    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", [](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in, "<string>");
    }, py::arg("text"));

    m.def("run", [](const RunConfig& cfg, std::optional<std::filesystem::path> output_root, bool write) {
        validate_config(cfg);
        py::gil_scoped_release release;
        auto out = run_pipeline(cfg, options(output_root, write));
        py::gil_scoped_acquire acquire;
        return outputs_dict(out);
    }, py::arg("config"), py::arg("output_root") = py::none(), py::arg("write") = true);

    m.def("reproduce", [](const std::string& figure, std::optional<std::filesystem::path> output_root,
                          std::optional<std::filesystem::path> config_dir) {
        const auto res = [&] {
            py::gil_scoped_release release;
            return reproduce_figure(figure, config_dir.value_or(default_config_dir()), options(output_root, true));
        }();
        return py::make_tuple(res.table, res.files);
    }, py::arg("figure"), py::arg("output_root") = py::none(), py::arg("config_dir") = py::none());

    m.def("figures", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& f : figure_catalog()) out.emplace_back(f.id, f.title);
        return out;
    });

    py::class_<SystemModel>(m, "SystemModel")
        .def_readonly("hamiltonian", &SystemModel::hamiltonian)
        .def_readonly("labels", &SystemModel::labels)
        .def_property_readonly("dim", &SystemModel::dim)
        .def("index_of", &SystemModel::index_of);

    m.def("excitonic_nmer", &build_excitonic_nmer, py::arg("n"), py::arg("epsilon"), py::arg("h"));
    m.def("polaritonic_trimer", [](double epsilon, double h, double omega_c, double rabi, double epsilon_ground) {
        PolaritonParams p;
        p.epsilon = epsilon;
        p.coupling_h = h;
        p.cavity = omega_c;
        p.rabi = rabi;
        p.epsilon_ground = epsilon_ground;
        return build_polaritonic_trimer(p);
    }, py::arg("epsilon") = 0.0, py::arg("h") = 181.5, py::arg("omega_c") = 0.0, py::arg("rabi") = 100.0,
       py::arg("epsilon_ground") = 0.0);

    py::class_<JumpOperator>(m, "JumpOperator")
        .def_readonly("name", &JumpOperator::name)
        .def_readonly("timescale_fs", &JumpOperator::timescale_fs);
    m.def("pump", &pump_operator, py::arg("model"), py::arg("site"), py::arg("timescale_fs"));
    m.def("drain", &drain_operator, py::arg("model"), py::arg("site"), py::arg("timescale_fs"));
    m.def("transition", &transition_operator, py::arg("model"), py::arg("source"), py::arg("target"),
          py::arg("timescale_fs"));
    m.def("effective_hamiltonian", [](const SystemModel& model, const std::vector<JumpOperator>& jumps,
                                      const std::string& convention) {
        return effective_hamiltonian(model, jumps, parse_loss_convention(convention));
    }, py::arg("model"), py::arg("jumps"), py::arg("convention") = "effective");

    m.def("lindblad_reference", [](const SystemModel& model, const std::vector<JumpOperator>& jumps,
                                   const std::string& initial, double dt_fs, int steps) {
        const auto rho0 = DensityMatrix::pure(static_cast<Eigen::Index>(model.index_of(initial)), model.labels);
        return trajectory_dict(propagate_lindblad_reference(model.hamiltonian, jumps, rho0, dt_fs, steps));
    }, py::arg("model"), py::arg("jumps"), py::arg("initial"), py::arg("dt_fs"), py::arg("steps"));
}
