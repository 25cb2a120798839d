// runner.hpp — config-driven pipeline: model -> maps -> PILD -> state-to-state analysis -> CSVs.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pild/config.hpp"
#include "pild/nonhermitian.hpp"
#include "pild/pild.hpp"
#include "pild/s2s.hpp"

namespace pild {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputRootVariable = "PILD_OUTPUT_ROOT";

/// $PILD_OUTPUT_ROOT, or ./pild_output when unset.
std::filesystem::path default_output_root();

/// Transfer tensors shared between runs that differ only in their Lindblad terms or length.
class MapCache {
public:
    struct Entry {
        TransferTensors tensors;
        std::string provenance;
        int max_bond = 0;
    };
    template <class Make>
    std::shared_ptr<const Entry> get(const std::string& key, Make make) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& slot = entries_[key];
        if (!slot) slot = std::make_shared<Entry>(make());
        return slot;
    }

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

struct RunOptions {
    std::filesystem::path output_root = default_output_root();
    bool write = true;
    MapCache* cache = nullptr;
    std::ostream* log = nullptr;
};

struct RunOutputs {
    SystemModel model;
    RDMTrajectory trajectory{0.0, {}};
    std::optional<FlowMatrix> flows;
    std::optional<SiteFlows> sites;
    std::optional<ComparisonReport> comparison;
    std::vector<double> excitation;               // total excitation per step
    std::map<std::string, std::string> results;   // scalar summaries, also written to the sidecar
    std::optional<CurrentFit> current;
    double steady_excitation = 0.0;
    std::filesystem::path directory;
    std::vector<std::filesystem::path> files;
};

std::filesystem::path output_directory(const RunConfig& cfg, const RunOptions& opt);

/// Runs one configuration (sweeps excluded) and writes its CSVs and sidecar when opt.write.
RunOutputs run_pipeline(const RunConfig& cfg, const RunOptions& opt = {});

struct SweepPoint {
    double pump_fs = 0.0, drain_fs = 0.0;
    double steady_excitation = 0.0;
    std::optional<double> current_per_ps;
};

/// Steady-state grid over the first pump and first drain timescales; the points share their
/// maps and run concurrently. Writes <prefix>_sweep.csv and the sidecar when opt.write.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const RunOptions& opt = {});

/// Total excitation: sum of populations weighted by the number of excitations per state.
std::vector<double> total_excitation(const RDMTrajectory& traj, const SystemModel& model);

/// Mean over the final `fraction` of a series.
double tail_mean(const std::vector<double>& series, double fraction);

/// Writes the canonical config plus '#'-prefixed results and file list; the file can be run as is.
void write_sidecar(const std::filesystem::path& path, const RunConfig& cfg, const std::map<std::string, std::string>& results,
                   const std::vector<std::filesystem::path>& files);

}  // namespace pild
