// figures.hpp — named reproductions: which run files feed a figure and how their outputs are
// tabulated into one <figure>.csv.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pild/runner.hpp"

namespace pild {

inline constexpr const char* kConfigDirVariable = "PILD_CONFIG_DIR";

/// $PILD_CONFIG_DIR, else the configs/ directory of the source tree.
std::filesystem::path default_config_dir();

struct FigureSpec {
    std::string id;
    std::string title;
    std::vector<std::string> configs;  // file names inside the config directory
};

const std::vector<FigureSpec>& figure_catalog();
const FigureSpec& find_figure(const std::string& id);  // throws std::invalid_argument

struct FigureResult {
    std::filesystem::path directory;
    std::filesystem::path table;
    std::vector<std::filesystem::path> files;
};

/// Runs the figure's configs under <output_root>/<id>/ and writes <id>.csv and <id>.meta there.
FigureResult reproduce_figure(const std::string& id, const std::filesystem::path& config_dir,
                              const RunOptions& opt = {});

}  // namespace pild
