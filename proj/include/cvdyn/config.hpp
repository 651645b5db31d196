// config.hpp - Scenario configuration: INI files, JSON manifests, presets.
//
// Sections and keys (all optional unless noted):
//
//   [scenario]     type = oscillators | ring-cavity | threshold, preset = fig2..fig5
//   [oscillators]  mass, omega, coupling, r, initial_state = squeeze-operator | anchored
//   [bath]         mode = time-dependent | markov | off, gamma0, cutoff, exponent,
//                  coupling_factor, temperature, renormalize
//   [time]         t_end, dt_out
//   [sweep]        parameter = r | gamma0 | cutoff | coupling, values = comma list
//   [ring_cavity]  n_atoms, g_u, g_s, delta_u, delta_s, omega_u, omega_s, phi_u, phi_s,
//                  kappa (required), gamma_u, gamma_s, delta_c, tau1, tau2,
//                  first = clockwise | anticlockwise
//   [threshold]    numeric = true | false
//   [output]       dir, bath_table = true | false

#pragma once

#include "cvdyn/oscillators.hpp"
#include "cvdyn/ring_cavity.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cvdyn::config {

enum class Scenario { kOscillators, kRingCavity, kThreshold };

std::string to_string(Scenario s);

enum class SweepParameter { kNone, kR, kGamma0, kCutoff, kCoupling };

struct ScenarioConfig {
    Scenario scenario = Scenario::kOscillators;
    std::string preset;  // empty when none

    oscillators::OscillatorPair pair;
    oscillators::BathSetup bath;
    oscillators::InitialState initial = oscillators::InitialState::kSqueezeOperator;
    double r = 1.0;
    double t_end = 50.0;
    double dt_out = 0.01;

    SweepParameter sweep = SweepParameter::kNone;
    std::vector<double> sweep_values;

    ring_cavity::EnsembleParams ensemble;
    bool kappa_given = false;
    double tau1 = 20.0;
    double tau2 = 20.0;
    ring_cavity::Step first = ring_cavity::Step::kClockwise;

    bool numeric_threshold = false;

    std::filesystem::path output_dir = "cvdyn-out";
    bool bath_table = false;

    /// Re-checks every physical invariant; throws kConfigValidation.
    void validate() const;
};

/// One oscillator trajectory of a (possibly swept) configuration.
struct OscillatorJob {
    std::string label;  // file stem, e.g. "fig2_r_1.498"
    oscillators::OscillatorPair pair;
    oscillators::BathSetup bath;
    oscillators::InitialState initial;
    double r;
    std::optional<double> sweep_value;
};

std::vector<OscillatorJob> expand(const ScenarioConfig& cfg);

/// Flat section -> key -> value view, as read from INI or JSON.
using Sections = std::map<std::string, std::map<std::string, std::string>>;

Sections parse_ini(const std::string& text);
Sections read_sections(const std::filesystem::path& path);

/// Applies `s` on top of `base`. Unknown sections or keys and malformed
/// values throw kConfigValidation; `s` may name a preset, applied first.
ScenarioConfig apply(ScenarioConfig base, const Sections& s);

/// Echo of every input of `cfg`; apply(ScenarioConfig{}, to_sections(cfg))
/// reproduces `cfg`.
Sections to_sections(const ScenarioConfig& cfg);

ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Preset (if any), then the file (if any), then validation.
ScenarioConfig load_config(const std::optional<std::filesystem::path>& path,
                           const std::optional<std::string>& preset_name = std::nullopt);

}  // namespace cvdyn::config
