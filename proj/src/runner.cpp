#include "cvdyn/runner.hpp"

#include "cvdyn/bath.hpp"
#include "cvdyn/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <thread>

namespace cvdyn::runner {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using config::Scenario;
using config::ScenarioConfig;

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) throw std::runtime_error(fmt::format("failed writing {}", path.string()));
}

// Each task returns its JSON record; exceptions are kept per task.
std::vector<json> run_tasks(const std::vector<std::function<json()>>& tasks, unsigned jobs) {
    std::vector<json> records(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                records[i] = tasks[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return records;
}

json frequencies(const oscillators::OscillatorPair& pair, const bath::ThermalSpec& th) {
    const auto f = oscillators::transformed_frequencies(pair);
    return {{"omega_f", f.omega_f},
            {"omega_2", f.omega_2},
            {"nbar", bath::mean_occupation(th, f.omega_2)},
            {"r_th", oscillators::threshold_r(th.temperature, f.omega_2)}};
}

void write_bath_table(const fs::path& path, const config::OscillatorJob& job, double omega2, double t_end, double dt_out) {
    const auto grid = oscillators::output_grid(t_end, dt_out);
    auto out = open_csv(path);
    out << "t,freq_shift,gamma2,D2,f2\n";
    std::optional<bath::BathModel> model;
    bath::BathCoefficients markov;
    if (job.bath.mode == oscillators::BathMode::kMarkov) {
        markov = bath::markov_coefficients(job.bath.spectral, job.bath.thermal, omega2);
    } else {
        model.emplace(job.bath.spectral, job.bath.thermal, omega2, t_end);
    }
    for (double t : grid) {
        const auto c = model ? model->at(t) : markov;
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", t, c.freq_shift, c.gamma2, c.D2, c.f2);
    }
    finish(out, path);
}

json run_oscillator_job(const ScenarioConfig& cfg, const config::OscillatorJob& job, const fs::path& dir,
                        std::vector<fs::path>& files) {
    const auto freqs = oscillators::transformed_frequencies(job.pair);
    const auto v0 = oscillators::initial_state(job.pair, job.r, job.initial);
    const auto traj = oscillators::integrate(job.pair, job.bath, v0, cfg.t_end, cfg.dt_out);
    const auto series = oscillators::entanglement_series(traj);

    const fs::path csv = dir / (job.label + ".csv");
    auto out = open_csv(csv);
    oscillators::write_trajectory_csv(out, traj, series);
    finish(out, csv);
    files.push_back(csv);

    json deaths = json::array();
    for (const auto& d : oscillators::sudden_death_report(series)) {
        deaths.push_back({{"death", d.death}, {"revival", d.open() ? json(nullptr) : json(d.revival)}});
    }
    json rec = {{"label", job.label},
                {"file", csv.filename().string()},
                {"r", job.r},
                {"derived", frequencies(job.pair, job.bath.thermal)},
                {"sudden_death", deaths},
                {"final_log_negativity", series.back().log_negativity}};
    if (job.sweep_value) rec["sweep_value"] = *job.sweep_value;
    if (job.bath.mode == oscillators::BathMode::kMarkov) {
        std::vector<std::string> warnings;
        bath::markov_coefficients(job.bath.spectral, job.bath.thermal, freqs.omega_2, &warnings);
        rec["warnings"] = warnings;
    }
    if (cfg.bath_table && job.bath.mode != oscillators::BathMode::kOff) {
        const fs::path table = dir / (job.label + "_bath.csv");
        write_bath_table(table, job, freqs.omega_2, cfg.t_end, cfg.dt_out);
        files.push_back(table);
        rec["bath_table"] = table.filename().string();
    }
    return rec;
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json run_ring_cavity(const ScenarioConfig& cfg, const fs::path& dir, std::vector<fs::path>& files) {
    using namespace ring_cavity;
    const auto ec = effective_couplings(cfg.ensemble);
    const auto sp = squeeze_parameters(ec);
    const double kappa = cfg.ensemble.kappa;
    const auto traj = run_protocol(ec, kappa, ProtocolOptions{cfg.tau1, cfg.tau2, cfg.dt_out, cfg.first});
    const auto target = squeezed_target(ec);

    const std::string label = cfg.preset.empty() ? config::to_string(cfg.scenario) : cfg.preset;
    const fs::path csv = dir / (label + ".csv");
    auto out = open_csv(csv);
    write_protocol_csv(out, traj, target);
    finish(out, csv);
    files.push_back(csv);

    const auto cw = eigenvalue_report(build_system(ec, kappa, Step::kClockwise));
    const auto acw = eigenvalue_report(build_system(ec, kappa, Step::kAnticlockwise));
    return {{"label", label},
            {"file", csv.filename().string()},
            {"derived",
             {{"beta_u", complex_json(ec.beta_u)},
              {"beta_s", complex_json(ec.beta_s)},
              {"beta_eff", effective_mixing(ec)},
              {"xi0", sp.xi0},
              {"xi1", sp.xi1},
              {"convergence_time_clockwise", cw.convergence_time},
              {"convergence_time_anticlockwise", acw.convergence_time}}},
            {"final_distance", gaussian::max_abs_difference(traj.sigma.back().matrix(), target.matrix())},
            {"final_purity", gaussian::purity(traj.sigma.back())},
            {"warnings", validity_check(cfg.ensemble)}};
}

json run_threshold(const ScenarioConfig& cfg, const fs::path& dir, std::vector<fs::path>& files) {
    const auto job = config::expand(cfg).front();
    json derived = frequencies(job.pair, job.bath.thermal);
    std::optional<double> numeric;
    if (cfg.numeric_threshold) numeric = oscillators::numeric_threshold_r(job.pair, job.bath);

    const fs::path csv = dir / "threshold.csv";
    auto out = open_csv(csv);
    out << "temperature,omega_2,nbar,r_th" << (numeric ? ",r_numeric" : "") << '\n';
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}", job.bath.thermal.temperature, derived["omega_2"].get<double>(),
                       derived["nbar"].get<double>(), derived["r_th"].get<double>());
    if (numeric) out << fmt::format(",{:.17g}", *numeric);
    out << '\n';
    finish(out, csv);
    files.push_back(csv);

    json rec = {{"label", "threshold"}, {"file", csv.filename().string()}, {"derived", derived}};
    if (numeric) rec["r_numeric"] = *numeric;
    return rec;
}

}  // namespace

RunOutput run(const ScenarioConfig& cfg, const fs::path& out_dir, unsigned jobs) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    std::vector<std::function<json()>> tasks;
    std::vector<std::vector<fs::path>> job_files;
    const auto oscillator_jobs = config::expand(cfg);
    switch (cfg.scenario) {
        case Scenario::kOscillators:
            job_files.resize(oscillator_jobs.size());
            for (std::size_t i = 0; i < oscillator_jobs.size(); ++i) {
                tasks.push_back([&, i] { return run_oscillator_job(cfg, oscillator_jobs[i], out_dir, job_files[i]); });
            }
            break;
        case Scenario::kRingCavity:
            job_files.resize(1);
            tasks.push_back([&] { return run_ring_cavity(cfg, out_dir, job_files[0]); });
            break;
        case Scenario::kThreshold:
            job_files.resize(1);
            tasks.push_back([&] { return run_threshold(cfg, out_dir, job_files[0]); });
            break;
    }
    const auto records = run_tasks(tasks, jobs);

    RunOutput result;
    for (const auto& f : job_files) result.files.insert(result.files.end(), f.begin(), f.end());

    auto echo = config::to_sections(cfg);
    echo["output"]["dir"] = out_dir.string();
    json manifest = {{"program", "cvdyn"},
                     {"scenario", config::to_string(cfg.scenario)},
                     {"preset", cfg.preset},
                     {"config", echo},
                     {"runs", records}};
    // Single-run scenarios also expose their derived constants at top level.
    if (records.size() == 1) manifest["derived"] = records.front()["derived"];
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["wall_time_s"] = wall;

    result.manifest = out_dir / "manifest.json";
    std::ofstream out(result.manifest, std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", result.manifest.string()));
    out << manifest.dump(2) << '\n';
    finish(out, result.manifest);
    return result;
}

fs::path resolve_output_dir(const std::optional<std::string>& flag, const char* env, const ScenarioConfig& cfg) {
    if (flag && !flag->empty()) return *flag;
    if (env && *env) return env;
    return cfg.output_dir;
}

}  // namespace cvdyn::runner
