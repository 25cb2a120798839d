// config.hpp — declarative run files: flat INI sections of key = value lines.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pild/model.hpp"
#include "pild/pathint.hpp"
#include "pild/nonhermitian.hpp"

namespace pild {

/// Malformed or inconsistent run file; line is 0 when the problem is not tied to one line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& origin, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

struct SystemConfig {
    std::string type = "nmer";  // nmer | polaritonic_trimer
    int n = 2;
    double epsilon = 0.0;
    double coupling_h = 181.5;
    double rabi = 100.0;
    double cavity = 0.0;
    double epsilon_ground = 0.0;
};

struct BathConfig {
    std::string kind = "ohmic";  // ohmic | tabulated | none
    double xi = 0.121;
    double omega_cutoff = 900.0;
    double temperature_K = 300.0;
    std::string table;
};

struct JumpConfig {
    std::string kind;  // pump | drain | transition | custom
    int site = 0;
    std::string from, to, name;
    double timescale_fs = 0.0;
    std::vector<std::pair<std::string, std::string>> transitions;  // custom: from -> to
    std::vector<double> coefficients;
    int line = 0;
};

struct PropagationConfig {
    double dt_fs = 2.0;
    int n_steps = 1000;
    double tau_mem_fs = 60.0;
    double svd_cutoff = 1e-10;
    int max_bond = 256;
    std::string engine = "tempo";  // tempo | brute | lindblad_only | nonhermitian
    std::string loss_convention = "effective";
    std::string lindblad_splitting = "generator";  // generator | dissipator | spanning

    int memory_steps() const;
};

struct InitialConfig {
    std::string state;
    std::string matrix_file;
};

struct AnalysisConfig {
    bool s2s = true;
    std::string monomer_flows = "auto";  // on | off | auto (on for aggregates)
    double current_fraction = 0.25;
    double current_min_r2 = 0.9999;
    double steady_fraction = 0.1;
    bool compare_nonhermitian = false;
};

struct OutputConfig {
    std::string directory;
    std::string prefix = "run";
    int stride = 1;
};

/// Grid over the timescales of the first pump and the first drain.
struct SweepConfig {
    double pump_min_fs = 100.0, pump_max_fs = 1000.0;
    double drain_min_fs = 100.0, drain_max_fs = 1000.0;
    int points = 7;
    std::string spacing = "log";  // log | linear

    std::vector<double> pump_grid() const;
    std::vector<double> drain_grid() const;
};

struct RunConfig {
    SystemConfig system;
    BathConfig bath;
    std::vector<JumpConfig> jumps;
    PropagationConfig propagation;
    InitialConfig initial;
    AnalysisConfig analysis;
    OutputConfig output;
    std::optional<SweepConfig> sweep;

    std::string origin;                 // file name for messages
    std::filesystem::path base_dir;     // relative paths resolve here

    /// Every setting, defaults included, in run-file syntax; parsing it gives back this config.
    std::string canonical() const;
};

RunConfig parse_config(std::istream& in, const std::string& origin = "<config>",
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Checks the invariants that need no model: positive timescales, tau_mem divisible by dt,
/// known engine, and so on. Throws ConfigError naming the offending setting.
void validate_config(const RunConfig& cfg);

SystemModel build_model(const RunConfig& cfg);
std::vector<JumpOperator> build_jumps(const RunConfig& cfg, const SystemModel& model);
BathSpec build_bath(const RunConfig& cfg);
DensityMatrix build_initial(const RunConfig& cfg, const SystemModel& model);
bool wants_monomer_flows(const RunConfig& cfg);

/// Git blob hash (SHA-1 of "blob <size>\0" + text), hex encoded.
std::string content_hash(const std::string& text);

}  // namespace pild
