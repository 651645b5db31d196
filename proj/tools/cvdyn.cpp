// cvdyn - run an oscillator, ring-cavity or threshold scenario.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical or physical
// failure, 1 anything else (I/O).

#include "cvdyn/config.hpp"
#include "cvdyn/errors.hpp"
#include "cvdyn/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian continuous-variable dynamics of open oscillator and ring-cavity systems"};
    std::optional<std::string> config_path;
    std::optional<std::string> preset;
    std::optional<std::string> out_dir;
    std::optional<std::string> scenario;
    unsigned jobs = 1;
    bool list_presets = false;
    app.add_option("--config", config_path, "INI config file, or a manifest.json from an earlier run");
    app.add_option("--preset", preset, "Start from a named preset (fig2, fig3, fig4, fig5, ring-cavity)");
    app.add_option("--out", out_dir, "Output directory (overrides CVDYN_OUTPUT_DIR and output.dir)");
    app.add_option("--scenario", scenario, "Override scenario.type")
        ->check(CLI::IsMember({"oscillators", "ring-cavity", "threshold"}));
    app.add_option("--jobs", jobs, "Concurrent sweep jobs")->check(CLI::Range(1u, 1024u));
    app.add_flag("--list-presets", list_presets, "Print preset names and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (list_presets) {
        for (const auto& name : cvdyn::config::preset_names()) std::cout << name << '\n';
        return 0;
    }

    try {
        cvdyn::config::ScenarioConfig cfg =
            cvdyn::config::load_config(config_path ? std::optional<std::filesystem::path>(*config_path) : std::nullopt,
                                       preset);
        if (scenario) {
            cfg = cvdyn::config::apply(cfg, {{"scenario", {{"type", *scenario}}}});
            cfg.validate();
        }
        const auto dir = cvdyn::runner::resolve_output_dir(out_dir, std::getenv("CVDYN_OUTPUT_DIR"), cfg);
        const auto result = cvdyn::runner::run(cfg, dir, jobs);
        for (const auto& f : result.files) std::cout << f.string() << '\n';
        std::cout << result.manifest.string() << '\n';
        return 0;
    } catch (const cvdyn::Error& e) {
        std::cerr << fmt::format("cvdyn: {}: {}\n", cvdyn::to_string(e.kind()), e.what());
        return cvdyn::is_config_error(e.kind()) ? kExitConfig : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << fmt::format("cvdyn: {}\n", e.what());
        return 1;
    }
}
