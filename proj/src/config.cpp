#include "pild/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <boost/uuid/detail/sha1.hpp>

namespace pild {

ConfigError::ConfigError(const std::string& origin, int line, const std::string& what)
    : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

int PropagationConfig::memory_steps() const { return static_cast<int>(std::lround(tau_mem_fs / dt_fs)); }

namespace {

std::vector<double> grid(double lo, double hi, int n, const std::string& spacing) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out.push_back(spacing == "log" ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

class Parser {
public:
    Parser(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(origin_, line_, what); }

    double number(const std::string& key, const std::string& v) const {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            fail("'" + key + "' expects a number, got '" + v + "'");
        }
        if (used != v.size() || !std::isfinite(x)) fail("'" + key + "' expects a number, got '" + v + "'");
        return x;
    }

    int integer(const std::string& key, const std::string& v) const {
        const double x = number(key, v);
        if (x != std::floor(x) || std::abs(x) > 1e9) fail("'" + key + "' expects an integer, got '" + v + "'");
        return static_cast<int>(x);
    }

    bool flag(const std::string& key, const std::string& v) const {
        if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
        if (v == "off" || v == "false" || v == "no" || v == "0") return false;
        fail("'" + key + "' expects on or off, got '" + v + "'");
    }

    std::string choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) const {
        std::string list;
        for (const char* a : allowed) {
            if (v == a) return v;
            list += (list.empty() ? "" : ", ") + std::string(a);
        }
        fail("'" + key + "' must be one of " + list + ", got '" + v + "'");
    }

    JumpConfig jump(const std::string& key, const std::string& v) const {
        JumpConfig j;
        j.kind = key;
        j.line = line_;
        const auto w = words(v);
        if (key == "pump" || key == "drain") {
            if (w.size() != 2) fail("'" + key + "' expects '<site> <timescale_fs>', got '" + v + "'");
            j.site = integer(key + " site", w[0]);
            j.timescale_fs = number(key + " timescale", w[1]);
        } else if (key == "transition") {
            if (w.size() != 3) fail("'transition' expects '<from> <to> <timescale_fs>', got '" + v + "'");
            j.from = w[0];
            j.to = w[1];
            j.timescale_fs = number("transition timescale", w[2]);
        } else if (key == "custom") {
            if (w.size() < 3) fail("'custom' expects '<name> <timescale_fs> <from>-><to>[*coef] ...', got '" + v + "'");
            j.name = w[0];
            j.timescale_fs = number("custom timescale", w[1]);
            for (std::size_t i = 2; i < w.size(); ++i) {
                std::string t = w[i];
                double c = 1.0;
                if (const auto star = t.find('*'); star != std::string::npos) {
                    c = number("custom coefficient", t.substr(star + 1));
                    t = t.substr(0, star);
                }
                const auto arrow = t.find("->");
                if (arrow == std::string::npos || arrow == 0 || arrow + 2 >= t.size())
                    fail("custom term '" + w[i] + "' is not of the form from->to[*coef]");
                j.transitions.emplace_back(t.substr(0, arrow), t.substr(arrow + 2));
                j.coefficients.push_back(c);
            }
        } else {
            fail("unknown key '" + key + "' in [lindblads] (expected pump, drain, transition or custom)");
        }
        return j;
    }

    RunConfig parse(std::istream& in, const std::filesystem::path& base) {
        RunConfig cfg;
        cfg.origin = origin_;
        cfg.base_dir = base;
        std::string section;
        std::set<std::string> seen_sections;
        std::set<std::string> seen_keys;
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_;
            std::string text = raw;
            if (const auto c = text.find_first_of("#;"); c != std::string::npos) text = text.substr(0, c);
            text = trim(text);
            if (text.empty()) continue;
            if (text.front() == '[') {
                if (text.back() != ']') fail("malformed section header '" + text + "'");
                section = trim(text.substr(1, text.size() - 2));
                static const std::set<std::string> known = {"system", "bath", "lindblads", "propagation",
                                                            "initial", "analysis", "output", "sweep"};
                if (!known.count(section)) fail("unknown section [" + section + "]");
                if (!seen_sections.insert(section).second) fail("section [" + section + "] appears twice");
                if (section == "sweep") cfg.sweep = SweepConfig{};
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string::npos) fail("expected 'key = value', got '" + text + "'");
            if (section.empty()) fail("'" + text + "' appears before any [section]");
            const std::string key = trim(text.substr(0, eq));
            const std::string value = trim(text.substr(eq + 1));
            if (key.empty()) fail("missing key before '='");
            if (value.empty()) fail("missing value for '" + key + "'");
            if (section != "lindblads" && !seen_keys.insert(section + "." + key).second)
                fail("'" + key + "' set twice in [" + section + "]");
            assign(cfg, section, key, value);
        }
        line_ = 0;
        for (const char* required : {"system", "propagation"})
            if (!seen_sections.count(required)) fail(std::string("missing required section [") + required + "]");
        return cfg;
    }

private:
    void assign(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& v) {
        auto unknown = [&] { fail("unknown key '" + key + "' in [" + section + "]"); };
        if (section == "system") {
            auto& s = cfg.system;
            if (key == "type") s.type = choice(key, v, {"nmer", "polaritonic_trimer"});
            else if (key == "N") s.n = integer(key, v);
            else if (key == "epsilon") s.epsilon = number(key, v);
            else if (key == "h") s.coupling_h = number(key, v);
            else if (key == "omega") s.rabi = number(key, v);
            else if (key == "omega_c") s.cavity = number(key, v);
            else if (key == "epsilon_ground") s.epsilon_ground = number(key, v);
            else unknown();
        } else if (section == "bath") {
            auto& b = cfg.bath;
            if (key == "kind") b.kind = choice(key, v, {"ohmic", "tabulated", "none"});
            else if (key == "xi") b.xi = number(key, v);
            else if (key == "omega_cutoff") b.omega_cutoff = number(key, v);
            else if (key == "temperature_K") b.temperature_K = number(key, v);
            else if (key == "table") b.table = v;
            else unknown();
        } else if (section == "lindblads") {
            cfg.jumps.push_back(jump(key, v));
        } else if (section == "propagation") {
            auto& p = cfg.propagation;
            if (key == "dt_fs") p.dt_fs = number(key, v);
            else if (key == "n_steps") p.n_steps = integer(key, v);
            else if (key == "tau_mem_fs") p.tau_mem_fs = number(key, v);
            else if (key == "svd_cutoff") p.svd_cutoff = number(key, v);
            else if (key == "max_bond") p.max_bond = integer(key, v);
            else if (key == "engine") p.engine = choice(key, v, {"tempo", "brute", "lindblad_only", "nonhermitian"});
            else if (key == "loss_convention") p.loss_convention = choice(key, v, {"effective", "prescribed"});
            else if (key == "lindblad_splitting") p.lindblad_splitting = choice(key, v, {"generator", "dissipator", "spanning"});
            else unknown();
        } else if (section == "initial") {
            if (key == "state") cfg.initial.state = v;
            else if (key == "matrix") cfg.initial.matrix_file = v;
            else unknown();
        } else if (section == "analysis") {
            auto& a = cfg.analysis;
            if (key == "s2s") a.s2s = flag(key, v);
            else if (key == "monomer_flows") a.monomer_flows = choice(key, v, {"on", "off", "auto"});
            else if (key == "current_fraction") a.current_fraction = number(key, v);
            else if (key == "current_min_r2") a.current_min_r2 = number(key, v);
            else if (key == "steady_fraction") a.steady_fraction = number(key, v);
            else if (key == "compare_nonhermitian") a.compare_nonhermitian = flag(key, v);
            else unknown();
        } else if (section == "output") {
            if (key == "directory") cfg.output.directory = v;
            else if (key == "prefix") cfg.output.prefix = v;
            else if (key == "stride") cfg.output.stride = integer(key, v);
            else unknown();
        } else if (section == "sweep") {
            auto& s = *cfg.sweep;
            if (key == "pump_min_fs") s.pump_min_fs = number(key, v);
            else if (key == "pump_max_fs") s.pump_max_fs = number(key, v);
            else if (key == "drain_min_fs") s.drain_min_fs = number(key, v);
            else if (key == "drain_max_fs") s.drain_max_fs = number(key, v);
            else if (key == "points") s.points = integer(key, v);
            else if (key == "spacing") s.spacing = choice(key, v, {"log", "linear"});
            else unknown();
        }
    }

    std::string origin_;
    int line_ = 0;
};

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace

std::vector<double> SweepConfig::pump_grid() const { return grid(pump_min_fs, pump_max_fs, points, spacing); }
std::vector<double> SweepConfig::drain_grid() const { return grid(drain_min_fs, drain_max_fs, points, spacing); }

RunConfig parse_config(std::istream& in, const std::string& origin, const std::filesystem::path& base_dir) {
    return Parser(origin).parse(in, base_dir);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open run file");
    return parse_config(in, path.string(), path.parent_path());
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os << "[system]\ntype = " << system.type << '\n';
    if (system.type == "nmer") {
        os << "N = " << system.n << "\nepsilon = " << fmt(system.epsilon) << "\nh = " << fmt(system.coupling_h) << '\n';
    } else {
        os << "epsilon = " << fmt(system.epsilon) << "\nh = " << fmt(system.coupling_h) << "\nomega = " << fmt(system.rabi)
           << "\nomega_c = " << fmt(system.cavity) << "\nepsilon_ground = " << fmt(system.epsilon_ground) << '\n';
    }
    os << "\n[bath]\nkind = " << bath.kind << '\n';
    if (bath.kind == "ohmic") os << "xi = " << fmt(bath.xi) << "\nomega_cutoff = " << fmt(bath.omega_cutoff) << '\n';
    if (bath.kind == "tabulated") os << "table = " << bath.table << '\n';
    if (bath.kind != "none") os << "temperature_K = " << fmt(bath.temperature_K) << '\n';
    os << "\n[lindblads]\n";
    for (const auto& j : jumps) {
        if (j.kind == "pump" || j.kind == "drain") os << j.kind << " = " << j.site << ' ' << fmt(j.timescale_fs) << '\n';
        else if (j.kind == "transition") os << "transition = " << j.from << ' ' << j.to << ' ' << fmt(j.timescale_fs) << '\n';
        else {
            os << "custom = " << j.name << ' ' << fmt(j.timescale_fs);
            for (std::size_t t = 0; t < j.transitions.size(); ++t)
                os << ' ' << j.transitions[t].first << "->" << j.transitions[t].second << '*' << fmt(j.coefficients[t]);
            os << '\n';
        }
    }
    const auto& p = propagation;
    os << "\n[propagation]\ndt_fs = " << fmt(p.dt_fs) << "\nn_steps = " << p.n_steps << "\ntau_mem_fs = " << fmt(p.tau_mem_fs)
       << "\nsvd_cutoff = " << fmt(p.svd_cutoff) << "\nmax_bond = " << p.max_bond << "\nengine = " << p.engine
       << "\nloss_convention = " << p.loss_convention << "\nlindblad_splitting = " << p.lindblad_splitting << '\n';
    os << "\n[initial]\n";
    if (!initial.state.empty()) os << "state = " << initial.state << '\n';
    if (!initial.matrix_file.empty()) os << "matrix = " << initial.matrix_file << '\n';
    const auto& a = analysis;
    os << "\n[analysis]\ns2s = " << (a.s2s ? "on" : "off") << "\nmonomer_flows = " << a.monomer_flows
       << "\ncurrent_fraction = " << fmt(a.current_fraction) << "\ncurrent_min_r2 = " << fmt(a.current_min_r2)
       << "\nsteady_fraction = " << fmt(a.steady_fraction)
       << "\ncompare_nonhermitian = " << (a.compare_nonhermitian ? "on" : "off") << '\n';
    os << "\n[output]\n";
    if (!output.directory.empty()) os << "directory = " << output.directory << '\n';
    os << "prefix = " << output.prefix << "\nstride = " << output.stride << '\n';
    if (sweep) {
        os << "\n[sweep]\npump_min_fs = " << fmt(sweep->pump_min_fs) << "\npump_max_fs = " << fmt(sweep->pump_max_fs)
           << "\ndrain_min_fs = " << fmt(sweep->drain_min_fs) << "\ndrain_max_fs = " << fmt(sweep->drain_max_fs)
           << "\npoints = " << sweep->points << "\nspacing = " << sweep->spacing << '\n';
    }
    return os.str();
}

void validate_config(const RunConfig& cfg) {
    auto fail = [&](int line, const std::string& what) { throw ConfigError(cfg.origin, line, what); };
    const auto& p = cfg.propagation;
    if (!(p.dt_fs > 0.0)) fail(0, "[propagation] dt_fs must be positive");
    if (p.n_steps < 1) fail(0, "[propagation] n_steps must be at least 1");
    if (!(p.tau_mem_fs > 0.0)) fail(0, "[propagation] tau_mem_fs must be positive");
    const double ratio = p.tau_mem_fs / p.dt_fs;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        fail(0, "[propagation] tau_mem_fs = " + fmt(p.tau_mem_fs) + " is not a multiple of dt_fs = " + fmt(p.dt_fs));
    if (p.engine != "lindblad_only") {
        if (!(p.svd_cutoff > 0.0 && p.svd_cutoff < 1.0)) fail(0, "[propagation] svd_cutoff must lie in (0, 1)");
        if (p.max_bond < 1) fail(0, "[propagation] max_bond must be at least 1");
    }
    if (cfg.system.type == "nmer" && (cfg.system.n < 1 || cfg.system.n > 6))
        fail(0, "[system] N must lie in 1..6 for the full-space aggregate");
    if (cfg.bath.kind == "ohmic" && !(cfg.bath.xi >= 0.0 && cfg.bath.omega_cutoff > 0.0))
        fail(0, "[bath] ohmic bath needs xi >= 0 and omega_cutoff > 0");
    if (cfg.bath.kind == "tabulated" && cfg.bath.table.empty()) fail(0, "[bath] tabulated bath needs 'table'");
    if (cfg.bath.kind != "none" && !(cfg.bath.temperature_K > 0.0)) fail(0, "[bath] temperature_K must be positive");
    for (const auto& j : cfg.jumps) {
        if (!(j.timescale_fs > 0.0)) fail(j.line, "[lindblads] " + j.kind + " timescale must be positive");
        if ((j.kind == "pump" || j.kind == "drain") && cfg.system.type != "nmer")
            fail(j.line, "[lindblads] " + j.kind + " needs an aggregate (type = nmer); use transition or custom");
        if ((j.kind == "pump" || j.kind == "drain") && cfg.system.type == "nmer" && (j.site < 1 || j.site > cfg.system.n))
            fail(j.line, "[lindblads] " + j.kind + " site " + std::to_string(j.site) + " outside 1.." + std::to_string(cfg.system.n));
    }
    if (cfg.initial.state.empty() == cfg.initial.matrix_file.empty())
        fail(0, "[initial] needs exactly one of 'state' or 'matrix'");
    const auto& a = cfg.analysis;
    if (!(a.current_fraction > 0.0 && a.current_fraction <= 1.0)) fail(0, "[analysis] current_fraction must lie in (0, 1]");
    if (!(a.steady_fraction > 0.0 && a.steady_fraction <= 1.0)) fail(0, "[analysis] steady_fraction must lie in (0, 1]");
    if (!(a.current_min_r2 >= 0.0 && a.current_min_r2 <= 1.0)) fail(0, "[analysis] current_min_r2 must lie in [0, 1]");
    if (a.monomer_flows == "on" && cfg.system.type != "nmer")
        fail(0, "[analysis] monomer_flows needs an aggregate (type = nmer)");
    if (a.compare_nonhermitian && p.engine != "tempo")
        fail(0, "[analysis] compare_nonhermitian runs the tempo engine; set engine = tempo");
    if (cfg.output.stride < 1) fail(0, "[output] stride must be at least 1");
    if (cfg.output.prefix.empty() || cfg.output.prefix.find('/') != std::string::npos)
        fail(0, "[output] prefix must be a plain file-name stem");
    if (cfg.sweep) {
        const auto& s = *cfg.sweep;
        if (!(s.pump_min_fs > 0.0 && s.pump_max_fs >= s.pump_min_fs && s.drain_min_fs > 0.0 && s.drain_max_fs >= s.drain_min_fs))
            fail(0, "[sweep] timescale ranges must be positive and ordered");
        if (s.points < 1) fail(0, "[sweep] points must be at least 1");
        const auto pumps = std::count_if(cfg.jumps.begin(), cfg.jumps.end(), [](const auto& j) { return j.kind == "pump"; });
        const auto drains = std::count_if(cfg.jumps.begin(), cfg.jumps.end(), [](const auto& j) { return j.kind == "drain"; });
        if (pumps < 1 || drains < 1) fail(0, "[sweep] needs a pump and a drain in [lindblads]");
    }
}

SystemModel build_model(const RunConfig& cfg) {
    const auto& s = cfg.system;
    if (s.type == "nmer") return build_excitonic_nmer(s.n, s.epsilon, s.coupling_h);
    PolaritonParams p;
    p.epsilon_ground = s.epsilon_ground;
    p.epsilon = s.epsilon;
    p.coupling_h = s.coupling_h;
    p.cavity = s.cavity;
    p.rabi = s.rabi;
    return build_polaritonic_trimer(p);
}

std::vector<JumpOperator> build_jumps(const RunConfig& cfg, const SystemModel& model) {
    std::vector<JumpOperator> out;
    for (const auto& j : cfg.jumps) {
        try {
            if (j.kind == "pump") {
                out.push_back(pump_operator(model, j.site, j.timescale_fs));
            } else if (j.kind == "drain") {
                out.push_back(drain_operator(model, j.site, j.timescale_fs));
            } else if (j.kind == "transition") {
                out.push_back(transition_operator(model, j.from, j.to, j.timescale_fs));
            } else {
                JumpOperator op{j.name, j.timescale_fs, {}};
                for (std::size_t t = 0; t < j.transitions.size(); ++t)
                    op.terms.push_back({j.coefficients[t], model.index_of(j.transitions[t].first),
                                        model.index_of(j.transitions[t].second)});
                validate_jump(op, static_cast<std::size_t>(model.dim()));
                out.push_back(std::move(op));
            }
        } catch (const std::exception& e) {
            throw ConfigError(cfg.origin, j.line, std::string("[lindblads] ") + e.what());
        }
    }
    return out;
}

BathSpec build_bath(const RunConfig& cfg) {
    const auto& b = cfg.bath;
    if (b.kind == "none") return {bath::SpectralDensity(bath::Ohmic{0.0, 1.0}), 300.0};
    if (b.kind == "ohmic") return {bath::SpectralDensity(bath::Ohmic{b.xi, b.omega_cutoff}), b.temperature_K};
    std::filesystem::path table = b.table;
    if (table.is_relative()) table = cfg.base_dir / table;
    try {
        return {bath::SpectralDensity::from_file(table), b.temperature_K};
    } catch (const std::exception& e) {
        throw ConfigError(cfg.origin, 0, std::string("[bath] ") + e.what());
    }
}

DensityMatrix build_initial(const RunConfig& cfg, const SystemModel& model) {
    if (!cfg.initial.state.empty()) {
        try {
            return DensityMatrix::pure(static_cast<Eigen::Index>(model.index_of(cfg.initial.state)), model.labels);
        } catch (const std::exception& e) {
            throw ConfigError(cfg.origin, 0, "[initial] unknown state '" + cfg.initial.state + "'");
        }
    }
    std::filesystem::path file = cfg.initial.matrix_file;
    if (file.is_relative()) file = cfg.base_dir / file;
    std::ifstream in(file);
    if (!in) throw ConfigError(cfg.origin, 0, "[initial] cannot open matrix file " + file.string());
    // One row per line: re im pairs.
    const Eigen::Index d = model.dim();
    Matrix rho(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) {
            double re = 0.0, im = 0.0;
            if (!(in >> re >> im))
                throw ConfigError(cfg.origin, 0, "[initial] matrix file needs " + std::to_string(d) + " rows of " +
                                                     std::to_string(d) + " (re im) pairs");
            rho(r, c) = Complex(re, im);
        }
    try {
        return DensityMatrix(rho, model.labels);
    } catch (const std::exception& e) {
        throw ConfigError(cfg.origin, 0, std::string("[initial] ") + e.what());
    }
}

bool wants_monomer_flows(const RunConfig& cfg) {
    if (cfg.analysis.monomer_flows == "auto") return cfg.system.type == "nmer" && cfg.analysis.s2s;
    return cfg.analysis.monomer_flows == "on";
}

std::string content_hash(const std::string& text) {
    boost::uuids::detail::sha1 h;
    const std::string header = "blob " + std::to_string(text.size()) + '\0';
    h.process_bytes(header.data(), header.size());
    h.process_bytes(text.data(), text.size());
    boost::uuids::detail::sha1::digest_type digest;
    h.get_digest(digest);
    std::ostringstream os;
    for (unsigned word : digest) os << std::hex << std::setw(8) << std::setfill('0') << word;
    return os.str();
}

}  // namespace pild
