#include "cvdyn/config.hpp"

#include "cvdyn/errors.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace cvdyn::config {

namespace {

using oscillators::BathMode;
using oscillators::InitialState;
using ring_cavity::Step;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::kConfigValidation, msg); }

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = boost::algorithm::trim_copy(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
        invalid(fmt::format("{}: '{}' is not a finite number", key, text));
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
    const std::string t = boost::algorithm::trim_copy(text);
    long long v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || t.empty()) {
        invalid(fmt::format("{}: '{}' is not an integer", key, text));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = boost::algorithm::trim_copy(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    invalid(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    if (boost::algorithm::trim_copy(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    return out;
}

template <typename E>
E parse_choice(const std::string& key, const std::string& text, const std::vector<std::pair<std::string, E>>& table) {
    const std::string t = boost::algorithm::trim_copy(text);
    for (const auto& [name, value] : table) {
        if (name == t) return value;
    }
    std::string names;
    for (const auto& entry : table) names += (names.empty() ? "" : ", ") + entry.first;
    invalid(fmt::format("{}: '{}' is not one of {}", key, text, names));
}

template <typename E>
std::string choice_name(E value, const std::vector<std::pair<std::string, E>>& table) {
    for (const auto& [name, v] : table) {
        if (v == value) return name;
    }
    return "?";
}

const std::vector<std::pair<std::string, Scenario>> kScenarios = {
    {"oscillators", Scenario::kOscillators}, {"ring-cavity", Scenario::kRingCavity}, {"threshold", Scenario::kThreshold}};
const std::vector<std::pair<std::string, BathMode>> kBathModes = {
    {"time-dependent", BathMode::kTimeDependent}, {"markov", BathMode::kMarkov}, {"off", BathMode::kOff}};
const std::vector<std::pair<std::string, InitialState>> kInitialStates = {
    {"squeeze-operator", InitialState::kSqueezeOperator}, {"anchored", InitialState::kAnchoredV11}};
const std::vector<std::pair<std::string, SweepParameter>> kSweeps = {{"none", SweepParameter::kNone},
                                                                     {"r", SweepParameter::kR},
                                                                     {"gamma0", SweepParameter::kGamma0},
                                                                     {"cutoff", SweepParameter::kCutoff},
                                                                     {"coupling", SweepParameter::kCoupling}};
const std::vector<std::pair<std::string, Step>> kSteps = {{"clockwise", Step::kClockwise},
                                                          {"anticlockwise", Step::kAnticlockwise}};

using Setter = std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)>;

Setter number(double ScenarioConfig::*field) {
    return [field](ScenarioConfig& c, const std::string& k, const std::string& v) { c.*field = parse_double(k, v); };
}

template <typename Fn>
Setter number_at(Fn access) {
    return [access](ScenarioConfig& c, const std::string& k, const std::string& v) { access(c) = parse_double(k, v); };
}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"scenario",
         {{"type", [](ScenarioConfig& c, const std::string& k,
                      const std::string& v) { c.scenario = parse_choice(k, v, kScenarios); }},
          // Handled by apply() before the other keys.
          {"preset", [](ScenarioConfig&, const std::string&, const std::string&) {}}}},
        {"oscillators",
         {{"mass", number_at([](ScenarioConfig& c) -> double& { return c.pair.mass; })},
          {"omega", number_at([](ScenarioConfig& c) -> double& { return c.pair.omega; })},
          {"coupling", number_at([](ScenarioConfig& c) -> double& { return c.pair.coupling; })},
          {"r", number(&ScenarioConfig::r)},
          {"initial_state", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
               c.initial = parse_choice(k, v, kInitialStates);
           }}}},
        {"bath",
         {{"mode", [](ScenarioConfig& c, const std::string& k,
                      const std::string& v) { c.bath.mode = parse_choice(k, v, kBathModes); }},
          {"gamma0", number_at([](ScenarioConfig& c) -> double& { return c.bath.spectral.gamma0; })},
          {"cutoff", number_at([](ScenarioConfig& c) -> double& { return c.bath.spectral.cutoff; })},
          {"exponent",
           [](ScenarioConfig& c, const std::string& k, const std::string& v) {
               const long long n = parse_integer(k, v);
               if (n < 1 || n > 64) invalid(fmt::format("{}: exponent must be in [1, 64]", k));
               c.bath.spectral.exponent = static_cast<int>(n);
           }},
          {"coupling_factor", number_at([](ScenarioConfig& c) -> double& { return c.bath.spectral.coupling_factor; })},
          {"temperature", number_at([](ScenarioConfig& c) -> double& { return c.bath.thermal.temperature; })},
          {"renormalize", [](ScenarioConfig& c, const std::string& k,
                             const std::string& v) { c.bath.renormalize = parse_bool(k, v); }}}},
        {"time", {{"t_end", number(&ScenarioConfig::t_end)}, {"dt_out", number(&ScenarioConfig::dt_out)}}},
        {"sweep",
         {{"parameter", [](ScenarioConfig& c, const std::string& k,
                           const std::string& v) { c.sweep = parse_choice(k, v, kSweeps); }},
          {"values", [](ScenarioConfig& c, const std::string& k,
                        const std::string& v) { c.sweep_values = parse_list(k, v); }}}},
        {"ring_cavity",
         {{"n_atoms",
           [](ScenarioConfig& c, const std::string& k, const std::string& v) {
               const long long n = parse_integer(k, v);
               if (n < 1) invalid(fmt::format("{}: need at least one atom", k));
               c.ensemble.n_atoms = static_cast<std::size_t>(n);
           }},
          {"g_u", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.g_u; })},
          {"g_s", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.g_s; })},
          {"delta_u", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.delta_u; })},
          {"delta_s", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.delta_s; })},
          {"omega_u", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.omega_u; })},
          {"omega_s", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.omega_s; })},
          {"phi_u", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.phi_u; })},
          {"phi_s", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.phi_s; })},
          {"kappa",
           [](ScenarioConfig& c, const std::string& k, const std::string& v) {
               c.ensemble.kappa = parse_double(k, v);
               c.kappa_given = true;
           }},
          {"gamma_u", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.gamma_u; })},
          {"gamma_s", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.gamma_s; })},
          {"delta_c", number_at([](ScenarioConfig& c) -> double& { return c.ensemble.delta_c; })},
          {"tau1", number(&ScenarioConfig::tau1)},
          {"tau2", number(&ScenarioConfig::tau2)},
          {"first", [](ScenarioConfig& c, const std::string& k,
                       const std::string& v) { c.first = parse_choice(k, v, kSteps); }}}},
        {"threshold", {{"numeric", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                            c.numeric_threshold = parse_bool(k, v);
                        }}}},
        {"output",
         {{"dir", [](ScenarioConfig& c, const std::string&,
                     const std::string& v) { c.output_dir = boost::algorithm::trim_copy(v); }},
          {"bath_table", [](ScenarioConfig& c, const std::string& k,
                            const std::string& v) { c.bath_table = parse_bool(k, v); }}}},
    };
    return table;
}

// Module errors raised while validating become configuration errors.
template <typename Fn>
void check(const std::string& what, Fn fn) {
    try {
        fn();
    } catch (const Error& e) {
        if (is_config_error(e.kind())) throw;
        invalid(fmt::format("{}: {}", what, e.what()));
    }
}

std::string sweep_name(SweepParameter p) { return choice_name(p, kSweeps); }

std::string scalar_to_string(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return fmt_double(v.get<double>());
    throw Error(ErrorKind::kConfigParse, fmt::format("{}: unsupported JSON value {}", key, v.dump()));
}

Sections sections_from_json(const nlohmann::json& doc) {
    const nlohmann::json& root = doc.contains("config") ? doc.at("config") : doc;
    if (!root.is_object()) throw Error(ErrorKind::kConfigParse, "JSON config must be an object of sections");
    Sections out;
    for (const auto& [section, body] : root.items()) {
        if (!body.is_object()) throw Error(ErrorKind::kConfigParse, fmt::format("JSON section '{}' must be an object", section));
        for (const auto& [key, value] : body.items()) {
            const std::string name = section + "." + key;
            if (value.is_array()) {
                std::string joined;
                for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar_to_string(item, name);
                out[section][key] = joined;
            } else {
                out[section][key] = scalar_to_string(value, name);
            }
        }
    }
    return out;
}

}  // namespace

std::string to_string(Scenario s) { return choice_name(s, kScenarios); }

void ScenarioConfig::validate() const {
    if (!(t_end > 0.0)) invalid("time.t_end must be > 0");
    if (!(dt_out > 0.0)) invalid("time.dt_out must be > 0");
    if (scenario == Scenario::kRingCavity) {
        if (!kappa_given) invalid("ring_cavity.kappa is required for the ring-cavity scenario");
        check("ring_cavity", [&] { ensemble.validate(); });
        if (!(tau1 > 0.0) || !(tau2 > 0.0)) invalid("ring_cavity.tau1 and tau2 must be > 0");
        if (dt_out > tau1 + tau2) invalid("time.dt_out exceeds the protocol duration");
        return;
    }
    if (dt_out > t_end) invalid("time.dt_out exceeds time.t_end");
    if (sweep != SweepParameter::kNone && sweep_values.empty()) invalid("sweep.values is empty");
    if (sweep == SweepParameter::kNone && !sweep_values.empty()) invalid("sweep.values given without sweep.parameter");
    std::set<double> seen;
    for (double v : sweep_values) {
        if (!seen.insert(v).second) invalid(fmt::format("sweep.values repeats {}", v));
    }
    for (const auto& job : expand(*this)) {
        const std::string where = job.sweep_value ? fmt::format("{} = {}", sweep_name(sweep), *job.sweep_value) : "config";
        if (!(job.r >= 0.0)) invalid(fmt::format("{}: squeezing r must be >= 0", where));
        check(where, [&] {
            job.pair.validate();
            job.bath.spectral.validate();
            job.bath.thermal.validate();
        });
    }
}

std::vector<OscillatorJob> expand(const ScenarioConfig& cfg) {
    OscillatorJob base{cfg.preset.empty() ? to_string(cfg.scenario) : cfg.preset, cfg.pair, cfg.bath, cfg.initial, cfg.r,
                       std::nullopt};
    base.bath.spectral.mass = cfg.pair.mass;
    if (cfg.sweep == SweepParameter::kNone) return {base};
    std::vector<OscillatorJob> jobs;
    for (double v : cfg.sweep_values) {
        OscillatorJob job = base;
        job.sweep_value = v;
        job.label = fmt::format("{}_{}_{:g}", base.label, sweep_name(cfg.sweep), v);
        switch (cfg.sweep) {
            case SweepParameter::kR: job.r = v; break;
            case SweepParameter::kGamma0: job.bath.spectral.gamma0 = v; break;
            case SweepParameter::kCutoff: job.bath.spectral.cutoff = v; break;
            case SweepParameter::kCoupling: job.pair.coupling = v; break;
            case SweepParameter::kNone: break;
        }
        jobs.push_back(job);
    }
    return jobs;
}

Sections parse_ini(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::kConfigParse, fmt::format("line {}: {}", e.line(), e.message()));
    }
    Sections out;
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) invalid(fmt::format("key '{}' is outside any [section]", section));
        auto& keys = out[section];
        for (const auto& [key, value] : body) keys[key] = value.data();
    }
    return out;
}

Sections read_sections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::kConfigParse, fmt::format("cannot open config file {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") {
        try {
            return sections_from_json(nlohmann::json::parse(buf.str()));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::kConfigParse, fmt::format("{}: {}", path.string(), e.what()));
        }
    }
    try {
        return parse_ini(buf.str());
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
    }
}

ScenarioConfig apply(ScenarioConfig base, const Sections& s) {
    if (auto sec = s.find("scenario"); sec != s.end()) {
        if (auto p = sec->second.find("preset"); p != sec->second.end()) {
            const std::string name = boost::algorithm::trim_copy(p->second);
            if (!name.empty()) base = preset(name);
        }
    }
    const auto& table = setters();
    for (const auto& [section, keys] : s) {
        const auto sec = table.find(section);
        if (sec == table.end()) invalid(fmt::format("unknown section [{}]", section));
        for (const auto& [key, value] : keys) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) invalid(fmt::format("unknown key '{}.{}'", section, key));
            setter->second(base, section + "." + key, value);
        }
    }
    return base;
}

Sections to_sections(const ScenarioConfig& c) {
    Sections s;
    s["scenario"]["type"] = to_string(c.scenario);
    // Keeps the run labels; every preset value is overridden below.
    if (!c.preset.empty()) s["scenario"]["preset"] = c.preset;
    s["oscillators"] = {{"mass", fmt_double(c.pair.mass)},
                        {"omega", fmt_double(c.pair.omega)},
                        {"coupling", fmt_double(c.pair.coupling)},
                        {"r", fmt_double(c.r)},
                        {"initial_state", choice_name(c.initial, kInitialStates)}};
    s["bath"] = {{"mode", choice_name(c.bath.mode, kBathModes)},
                 {"gamma0", fmt_double(c.bath.spectral.gamma0)},
                 {"cutoff", fmt_double(c.bath.spectral.cutoff)},
                 {"exponent", std::to_string(c.bath.spectral.exponent)},
                 {"coupling_factor", fmt_double(c.bath.spectral.coupling_factor)},
                 {"temperature", fmt_double(c.bath.thermal.temperature)},
                 {"renormalize", c.bath.renormalize ? "true" : "false"}};
    s["time"] = {{"t_end", fmt_double(c.t_end)}, {"dt_out", fmt_double(c.dt_out)}};
    std::string values;
    for (double v : c.sweep_values) values += (values.empty() ? "" : ",") + fmt_double(v);
    s["sweep"] = {{"parameter", sweep_name(c.sweep)}, {"values", values}};
    const auto& e = c.ensemble;
    s["ring_cavity"] = {{"n_atoms", std::to_string(e.n_atoms)},
                        {"g_u", fmt_double(e.g_u)},
                        {"g_s", fmt_double(e.g_s)},
                        {"delta_u", fmt_double(e.delta_u)},
                        {"delta_s", fmt_double(e.delta_s)},
                        {"omega_u", fmt_double(e.omega_u)},
                        {"omega_s", fmt_double(e.omega_s)},
                        {"phi_u", fmt_double(e.phi_u)},
                        {"phi_s", fmt_double(e.phi_s)},
                        {"gamma_u", fmt_double(e.gamma_u)},
                        {"gamma_s", fmt_double(e.gamma_s)},
                        {"delta_c", fmt_double(e.delta_c)},
                        {"tau1", fmt_double(c.tau1)},
                        {"tau2", fmt_double(c.tau2)},
                        {"first", choice_name(c.first, kSteps)}};
    if (c.kappa_given) s["ring_cavity"]["kappa"] = fmt_double(e.kappa);
    s["threshold"]["numeric"] = c.numeric_threshold ? "true" : "false";
    s["output"] = {{"dir", c.output_dir.string()}, {"bath_table", c.bath_table ? "true" : "false"}};
    return s;
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4", "fig5", "ring-cavity"}; }

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.preset = name;
    c.bath.mode = BathMode::kTimeDependent;
    c.bath.thermal.temperature = 10.0;
    c.bath.spectral.gamma0 = 0.1;
    c.bath.spectral.cutoff = 100.0;
    c.pair.coupling = 0.0;
    if (name == "fig2" || name == "fig5") {
        c.pair.coupling = name == "fig5" ? 0.8 : 0.0;
        c.sweep = SweepParameter::kR;
        c.sweep_values = {1.0, 1.498, 2.0};
    } else if (name == "fig3") {
        c.r = 1.6;
        c.bath.spectral.gamma0 = 1.0;
        c.sweep = SweepParameter::kCutoff;
        c.sweep_values = {200.0, 500.0, 800.0};
    } else if (name == "fig4") {
        c.r = 1.6;
        c.sweep = SweepParameter::kGamma0;
        c.sweep_values = {0.05, 1.0, 5.0};
    } else if (name == "ring-cavity") {
        c.scenario = Scenario::kRingCavity;
        c.kappa_given = true;
        c.dt_out = 0.05;
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        invalid(fmt::format("unknown preset '{}' (known: {})", name, names));
    }
    return c;
}

ScenarioConfig load_config(const std::optional<std::filesystem::path>& path, const std::optional<std::string>& preset_name) {
    ScenarioConfig c = preset_name ? preset(*preset_name) : ScenarioConfig{};
    if (path) c = config::apply(c, read_sections(*path));
    c.validate();
    return c;
}

}  // namespace cvdyn::config
