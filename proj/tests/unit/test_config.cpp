#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pild/config.hpp"
#include "pild/figures.hpp"
#include "pild/runner.hpp"

using namespace pild;
namespace fs = std::filesystem;

namespace {

const char* kDimer = R"(# comment
[system]
type = nmer
N = 2
epsilon = 0
h = 181.5

[bath]
kind = none

[lindblads]
pump = 1 300
drain = 2 300

[propagation]
dt_fs = 2
n_steps = 50
tau_mem_fs = 4
engine = lindblad_only

[initial]
state = gg

[output]
prefix = tiny
)";

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

int error_line(const std::string& text) {
    try {
        auto cfg = parse(text);
        validate_config(cfg);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string error_text(const std::string& text) {
    try {
        auto cfg = parse(text);
        validate_config(cfg);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("parse a complete run file") {
    const auto cfg = parse(kDimer);
    CHECK(cfg.system.n == 2);
    CHECK(cfg.bath.kind == "none");
    REQUIRE(cfg.jumps.size() == 2);
    CHECK(cfg.jumps[0].kind == "pump");
    CHECK(cfg.jumps[1].site == 2);
    CHECK(cfg.jumps[1].timescale_fs == 300.0);
    CHECK(cfg.propagation.memory_steps() == 2);
    CHECK_NOTHROW(validate_config(cfg));
    const auto model = build_model(cfg);
    CHECK(model.dim() == 4);
    CHECK(build_jumps(cfg, model).size() == 2);
    CHECK(build_initial(cfg, model).matrix()(0, 0).real() == 1.0);
}

TEST_CASE("errors carry line numbers") {
    // Line 6 is "h = 181.5".
    CHECK(error_line(replace(kDimer, "h = 181.5", "h = fast")) == 6);
    CHECK(error_line(replace(kDimer, "h = 181.5", "colour = red")) == 6);
    CHECK(error_line(replace(kDimer, "[bath]", "[baths]")) == 8);
    CHECK(error_line(replace(kDimer, "h = 181.5", "h = 181.5\nh = 10")) == 7);
    CHECK(error_line(replace(kDimer, "drain = 2 300", "drain = 5 300")) == 13);
    CHECK(error_text(replace(kDimer, "h = 181.5", "h = fast")).rfind("test.cfg:6:", 0) == 0);
}

TEST_CASE("missing sections are named") {
    const auto text = replace(kDimer, "[system]\ntype = nmer\nN = 2\nepsilon = 0\nh = 181.5\n", "");
    CHECK(error_text(text).find("missing required section [system]") != std::string::npos);
    const auto noprop = replace(kDimer, "[propagation]\ndt_fs = 2\nn_steps = 50\ntau_mem_fs = 4\nengine = lindblad_only\n", "");
    CHECK(error_text(noprop).find("[propagation]") != std::string::npos);
}

TEST_CASE("memory length must be a multiple of the step") {
    const auto msg = error_text(replace(kDimer, "tau_mem_fs = 4", "tau_mem_fs = 5"));
    CHECK(msg.find("tau_mem_fs") != std::string::npos);
    CHECK(error_text(replace(kDimer, "dt_fs = 2", "dt_fs = -2")).find("dt_fs") != std::string::npos);
    CHECK(error_text(replace(kDimer, "engine = lindblad_only", "engine = magic")).find("engine") != std::string::npos);
}

TEST_CASE("canonical text round-trips and hashes stably") {
    const auto cfg = parse(kDimer);
    const auto text = cfg.canonical();
    const auto again = parse(text);
    CHECK(again.canonical() == text);
    CHECK(content_hash(text) == content_hash(again.canonical()));
    // git hash-object of an empty blob
    CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(content_hash(replace(kDimer, "300", "301")) != content_hash(kDimer));
}

TEST_CASE("sweep grid") {
    SweepConfig s;
    const auto g = s.pump_grid();
    REQUIRE(g.size() == 7);
    CHECK(g.front() == doctest::Approx(100.0));
    CHECK(g.back() == doctest::Approx(1000.0));
    for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(g[i] * g[i] == doctest::Approx(g[i - 1] * g[i + 1]));
}

TEST_CASE("pipeline writes its outputs and a runnable sidecar") {
    const fs::path root = fs::temp_directory_path() / "pild_test_config_run";
    fs::remove_all(root);
    RunOptions opt;
    opt.output_root = root;
    const auto cfg = parse(kDimer);
    const auto out = run_pipeline(cfg, opt);
    CHECK(out.trajectory.size() == 51);
    CHECK(out.flows.has_value());
    CHECK(out.sites.has_value());
    for (const char* name : {"tiny_rdm.csv", "tiny_populations.csv", "tiny_flows.csv", "tiny_site_flows.csv", "tiny.meta"})
        CHECK(fs::exists(root / "tiny" / name));

    std::ifstream meta(root / "tiny" / "tiny.meta");
    std::stringstream buf;
    buf << meta.rdbuf();
    CHECK(buf.str().find("# config_sha1 = " + content_hash(cfg.canonical())) != std::string::npos);
    const auto rerun = parse(buf.str());
    CHECK(rerun.canonical() == cfg.canonical());

    // Total excitation equals the monomer sum.
    const auto& s = *out.sites;
    for (std::size_t k = 0; k < out.excitation.size(); k += 10)
        CHECK(out.excitation[k] == doctest::Approx(s.excitation[0][k] + s.excitation[1][k]).epsilon(1e-12));
    fs::remove_all(root);
}

TEST_CASE("output root from the environment") {
    ::setenv(kOutputRootVariable, "/tmp/pild_env_root", 1);
    CHECK(default_output_root() == fs::path("/tmp/pild_env_root"));
    ::unsetenv(kOutputRootVariable);
    CHECK(default_output_root() == fs::path("pild_output"));
}

TEST_CASE("figure catalogue") {
    CHECK(figure_catalog().size() == 10);
    for (int i = 1; i <= 10; ++i) CHECK_NOTHROW(find_figure("fig" + std::to_string(i)));
    CHECK_THROWS_AS(find_figure("fig11"), std::invalid_argument);
    // Every referenced run file exists and validates.
    for (const auto& f : figure_catalog())
        for (const auto& name : f.configs) {
            const auto path = default_config_dir() / name;
            REQUIRE_MESSAGE(fs::exists(path), path.string());
            const auto cfg = load_config(path);
            CHECK_NOTHROW(validate_config(cfg));
            CHECK_NOTHROW(build_jumps(cfg, build_model(cfg)));
        }
}
