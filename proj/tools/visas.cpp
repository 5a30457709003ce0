#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "visas/visas.hpp"

namespace fs = std::filesystem;
using namespace visas;

namespace {

constexpr int kExitBenign = 0;
constexpr int kExitError = 1;
constexpr int kExitSpoof = 2;

struct WindowFlags {
    std::optional<int> n;
    std::optional<int> q;
    std::optional<double> threshold;
    std::optional<double> min_corr;
    bool one_sided = false;

    void add_to(CLI::App* cmd, bool with_window = true) {
        if (with_window) cmd->add_option("--window", n, "samples fitted per model (n)");
        cmd->add_option("--verify", q, "samples verified per model (q)");
        if (with_window) cmd->add_option("--threshold", threshold, "alert threshold, meters");
        cmd->add_option("--min-corr", min_corr, "scope limit, similarity percent");
        cmd->add_flag("--one-sided", one_sided, "flag only predicted > reported + threshold");
    }

    WindowConfig apply(WindowConfig cfg) const {
        if (n) cfg.n = *n;
        if (q) cfg.q = *q;
        if (threshold) cfg.alert_threshold = *threshold;
        if (min_corr) cfg.min_correlation = *min_corr;
        if (one_sided) cfg.one_sided = true;
        cfg.validate();
        return cfg;
    }
};

fs::path resolve_log(const fs::path& p) {
    if (fs::is_directory(p)) return p / kLogFileName;
    return p;
}

std::vector<Sample> load_flight(const fs::path& p) {
    const fs::path path = resolve_log(p);
    if (!fs::exists(path)) throw IoError("no such flight log: " + path.string());
    std::vector<Sample> samples = read_log(path);
    for (auto& s : samples) s.frame = normalize_for_comparison(s.frame);
    return samples;
}

std::vector<Scenario> load_scenarios(const fs::path& path, std::optional<std::uint64_t> seed) {
    const auto doc = load_json(path);
    try {
        return parse_batch(doc, seed);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

std::string verdicts_csv(const std::vector<Verdict>& verdicts) {
    std::ostringstream o;
    write_verdicts_csv(o, verdicts);
    return o.str();
}

struct Tally {
    std::size_t verified = 0;
    std::size_t flagged = 0;
    std::size_t resets = 0;
    std::size_t zero_variance = 0;
};

Tally tally(const std::vector<Verdict>& verdicts) {
    Tally t;
    for (const auto& v : verdicts) {
        t.verified += v.verified();
        t.flagged += v.flagged;
        t.resets += v.reason == Reason::ModelReset;
        t.zero_variance += v.reason == Reason::ZeroVarianceFrame;
    }
    return t;
}

std::string scenario_summary_json(const RunResult& r, const Tally& t) {
    const Scenario& sc = r.scenario;
    nlohmann::ordered_json j;
    j["name"] = sc.name;
    j["seed"] = sc.terrain.seed;
    j["terrain"] = std::string(to_string(sc.terrain.kind));
    j["altitude_m"] = sc.plan.altitude;
    j["speed_mps"] = sc.plan.speed;
    j["light_fraction"] = sc.plan.light_fraction;
    j["samples"] = r.samples.size();
    j["detector"] = {{"n", sc.detector.n},
                     {"q", sc.detector.q},
                     {"threshold_m", sc.detector.alert_threshold},
                     {"min_corr", sc.detector.min_correlation},
                     {"one_sided", sc.detector.one_sided}};
    j["verified"] = t.verified;
    j["flagged"] = t.flagged;
    j["model_resets"] = t.resets;
    j["spoof_detected"] = t.flagged > 0;
    j["scope"] = {{"in_scope", r.scope.in_scope},
                  {"in_scope_range_m", r.scope.in_scope_range},
                  {"r2", r.scope.r2()},
                  {"rmse_m", r.scope.model ? r.scope.model->rmse : 0.0},
                  {"mae_m", r.scope.model ? r.scope.model->mae : 0.0}};
    if (sc.attack) {
        nlohmann::ordered_json a;
        a["kind"] = std::string(to_string(sc.attack->kind));
        a["start_index"] = sc.attack->start_index;
        a["detected"] = r.detection->detected;
        a["delay"] = r.detection->delay ? nlohmann::ordered_json(*r.detection->delay) : nlohmann::ordered_json();
        a["fpr_pre_attack"] = r.detection->fpr_pre_attack;
        j["attack"] = a;
    }
    return j.dump(2) + "\n";
}

struct SimOutcome {
    Tally tally;
    std::string summary_row;
};

/// Runs one scenario and publishes `out/<name>` in a single rename.
SimOutcome simulate_one(const Scenario& sc, const fs::path& out) {
    const RunResult r = run_scenario(sc);
    const Tally t = tally(r.verdicts);
    const fs::path final_dir = out / sc.name;
    const fs::path staging = out / ("." + sc.name + ".partial");
    fs::remove_all(staging);
    FlightLogHeader header;
    header.drone_id = sc.name;
    header.origin = sc.origin;
    header.sample_rate = sc.plan.sample_rate;
    write_log(r.samples, staging, header);
    write_text(staging / "verdicts.csv", verdicts_csv(r.verdicts));
    write_text(staging / "summary.json", scenario_summary_json(r, t));
    fs::remove_all(final_dir);
    fs::rename(staging, final_dir);

    std::ostringstream row;
    row << sc.name << ',' << r.samples.size() << ',' << t.verified << ',' << t.flagged << ','
        << fmt(r.scope.in_scope_range) << ',' << fmt(r.scope.r2()) << ','
        << fmt(r.scope.model ? r.scope.model->rmse : std::numeric_limits<double>::quiet_NaN()) << ','
        << (t.flagged > 0 ? 1 : 0) << '\n';
    return {t, row.str()};
}

int cmd_simulate(const fs::path& scenario, const fs::path& out, std::optional<std::uint64_t> seed,
                 const WindowFlags& flags) {
    std::vector<Scenario> batch = load_scenarios(scenario, seed);
    std::set<std::string> names;
    for (auto& sc : batch) {
        if (!names.insert(sc.name).second) throw ConfigError("duplicate scenario name '" + sc.name + "'");
        sc.detector = flags.apply(sc.detector);
    }
    fs::create_directories(out);

    std::vector<std::future<SimOutcome>> jobs;
    for (const auto& sc : batch) jobs.push_back(std::async(std::launch::async, simulate_one, sc, out));

    std::ostringstream csv;
    csv << "name,samples,verified,flagged,in_scope_range_m,r2,rmse_m,spoof_detected\n";
    bool any_spoof = false;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const SimOutcome o = jobs[i].get();
        const Tally& t = o.tally;
        csv << o.summary_row;
        std::cout << batch[i].name << ": " << t.verified << " verified, " << t.flagged << " flagged"
                  << (t.flagged ? "  SPOOF SUSPECTED" : "") << '\n';
        any_spoof = any_spoof || t.flagged > 0;
    }
    write_text(out / "summary.csv", csv.str());
    return any_spoof ? kExitSpoof : kExitBenign;
}

int cmd_detect(const fs::path& log, const std::optional<fs::path>& out, const WindowFlags& flags) {
    const WindowConfig cfg = flags.apply(WindowConfig{});
    const std::vector<Sample> samples = load_flight(log);
    const std::vector<Verdict> verdicts = run_stream(samples, cfg);
    const std::string csv = verdicts_csv(verdicts);
    if (out) {
        fs::create_directories(*out);
        write_text(*out / "verdicts.csv", csv);
    } else {
        std::cout << csv;
    }
    const Tally t = tally(verdicts);
    std::cerr << samples.size() << " samples, " << t.verified << " verified, " << t.flagged << " flagged, "
              << t.resets << " model resets\n";
    if (t.flagged > 0) {
        const auto first = std::find_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.flagged; });
        std::cerr << "spoof suspected from sample " << first->sample_index << '\n';
        return kExitSpoof;
    }
    return kExitBenign;
}

std::vector<std::vector<Sample>> gather_flights(const std::vector<fs::path>& logs, const std::optional<fs::path>& scenario,
                                                std::optional<std::uint64_t> seed, std::vector<std::string>& names) {
    std::vector<std::vector<Sample>> flights;
    for (const auto& p : logs) {
        flights.push_back(load_flight(p));
        names.push_back(p.string());
    }
    if (scenario) {
        const auto batch = load_scenarios(*scenario, seed);
        std::vector<std::future<std::vector<Sample>>> jobs;
        for (const auto& sc : batch) {
            jobs.push_back(std::async(std::launch::async, [sc] {
                return fly(sc.plan, generate_terrain(sc.terrain), sc.camera, sc.origin);
            }));
            names.push_back(sc.name);
        }
        for (auto& j : jobs) flights.push_back(j.get());
    }
    if (flights.empty()) throw ConfigError("give --log or --scenario");
    return flights;
}

int cmd_sweep(const std::vector<fs::path>& logs, const std::optional<fs::path>& scenario, const fs::path& out,
              std::vector<int> sizes, std::vector<double> thresholds, double alpha, double target_fpr,
              std::optional<std::uint64_t> seed, const WindowFlags& flags) {
    std::vector<std::string> names;
    const auto flights = gather_flights(logs, scenario, seed, names);
    const WindowConfig base = flags.apply(WindowConfig{});
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    const auto results = window_sweep(std::span<const std::vector<Sample>>(flights), sizes, base, thresholds);

    fs::create_directories(out);
    std::ostringstream csv;
    write_sweep_csv(csv, results);
    write_text(out / "sweep.csv", csv.str());
    write_text(out / "sweep_errors.svg", svg_sweep_errors(results));
    write_text(out / "sweep_fpr.svg", svg_sweep_fpr(results));

    std::cout << "window  avg_err_m  max_err_m  e(alpha)\n";
    for (const auto& r : results) {
        char line[128];
        std::snprintf(line, sizeof line, "%6d  %9.3f  %9.3f  %8.3f\n", r.window_size, r.avg_prediction_error,
                      r.max_prediction_error, window_cost(r, alpha));
        std::cout << line;
    }
    const int best = optimal_window(results, alpha);
    std::cout << "optimal window (alpha=" << fmt(alpha, 2) << "): " << best << '\n';
    const auto chosen = std::find_if(results.begin(), results.end(), [&](const SweepResult& r) { return r.window_size == best; });
    if (const auto th = select_threshold(*chosen, target_fpr)) {
        std::cout << "threshold for FPR <= " << fmt(target_fpr, 3) << ": " << fmt(*th, 3) << " m (FPR "
                  << fmt(chosen->fpr_by_threshold.at(*th), 4) << ")\n";
    } else {
        std::cout << "no swept threshold reaches FPR <= " << fmt(target_fpr, 3) << '\n';
    }
    return kExitBenign;
}

int cmd_report(const std::vector<fs::path>& logs, const std::optional<fs::path>& scenario, const fs::path& out,
               std::optional<std::uint64_t> seed, const WindowFlags& flags) {
    std::vector<std::string> names;
    const auto flights = gather_flights(logs, scenario, seed, names);
    const double min_corr = flags.apply(WindowConfig{}).min_correlation;

    fs::create_directories(out);
    std::ostringstream csv;
    csv << "name,samples,in_scope,in_scope_range_m,rmse_m,r2,mae_m,slope_m_per_pct,intercept_m\n";
    std::vector<Series> curves;
    std::cout << "name                          in_scope  range_m     rmse_m      r2     mae_m\n";
    for (std::size_t i = 0; i < flights.size(); ++i) {
        const ScopeFit fit = scope_fit(flights[i], min_corr);
        const auto& m = fit.model;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        csv << names[i] << ',' << flights[i].size() << ',' << fit.in_scope << ',' << fmt(fit.in_scope_range) << ','
            << fmt(m ? m->rmse : nan) << ',' << fmt(fit.r2()) << ',' << fmt(m ? m->mae : nan) << ','
            << fmt(m ? m->slope : nan) << ',' << fmt(m ? m->intercept : nan) << '\n';
        char line[160];
        std::snprintf(line, sizeof line, "%-28s  %8zu  %7.2f  %9.4f  %6.4f  %8.4f\n", names[i].c_str(), fit.in_scope,
                      fit.in_scope_range, m ? m->rmse : nan, fit.r2(), m ? m->mae : nan);
        std::cout << line;
        curves.push_back({names[i], fit.dist, fit.corr});
    }
    write_text(out / "report.csv", csv.str());
    write_text(out / "correlation.svg",
               svg_line_chart("Similarity to the first frame", "distance (m)", "similarity (%)", curves));
    return kExitBenign;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detects GPS spoofing by comparing camera-frame similarity with reported travel distance"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;

    auto* sim = app.add_subcommand("simulate", "simulate scenario flights, write logs, verdicts and summaries");
    fs::path scenario_path, out_dir = ".";
    WindowFlags sim_flags;
    sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--seed", seed, "terrain seed, overrides the scenario and VISAS_SEED");
    sim_flags.add_to(sim);

    auto* det = app.add_subcommand("detect", "run the detector over a flight log");
    fs::path log_path;
    std::optional<fs::path> det_out;
    WindowFlags det_flags;
    det->add_option("--log", log_path, "flight log file or directory")->required();
    det->add_option("--out", det_out, "write verdicts.csv here instead of stdout");
    det_flags.add_to(det);

    auto* swp = app.add_subcommand("sweep", "evaluate window sizes and thresholds over benign flights");
    std::vector<fs::path> swp_logs;
    std::optional<fs::path> swp_scenario;
    fs::path swp_out = ".";
    std::vector<int> sizes{2, 3, 4, 5, 6, 7, 8};
    std::vector<double> thresholds{0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 6, 7, 8, 10};
    double alpha = 0.5, target_fpr = 0.03;
    WindowFlags swp_flags;
    swp->add_option("--log", swp_logs, "flight log file or directory (repeatable)");
    swp->add_option("--scenario", swp_scenario, "simulate the benign flights of a scenario batch");
    swp->add_option("--out", swp_out, "output directory");
    swp->add_option("--sizes", sizes, "window sizes, comma separated")->delimiter(',');
    swp->add_option("--thresholds", thresholds, "alert thresholds in meters, comma separated")->delimiter(',');
    swp->add_option("--alpha", alpha, "weight of the average error in e(alpha)")->check(CLI::Range(0.0, 1.0));
    swp->add_option("--target-fpr", target_fpr, "FPR bound used to pick the threshold")->check(CLI::Range(0.0, 1.0));
    swp->add_option("--seed", seed, "terrain seed for --scenario");
    swp_flags.add_to(swp, false);

    auto* rep = app.add_subcommand("report", "first-frame scope fit per flight (range, rmse, r2, mae)");
    std::vector<fs::path> rep_logs;
    std::optional<fs::path> rep_scenario;
    fs::path rep_out = ".";
    WindowFlags rep_flags;
    rep->add_option("--log", rep_logs, "flight log file or directory (repeatable)");
    rep->add_option("--scenario", rep_scenario, "simulate the benign flights of a scenario batch");
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--seed", seed, "terrain seed for --scenario");
    rep->add_option("--min-corr", rep_flags.min_corr, "scope limit, similarity percent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*sim) return cmd_simulate(scenario_path, out_dir, seed, sim_flags);
        if (*det) return cmd_detect(log_path, det_out, det_flags);
        if (*swp) return cmd_sweep(swp_logs, swp_scenario, swp_out, sizes, thresholds, alpha, target_fpr, seed, swp_flags);
        if (*rep) return cmd_report(rep_logs, rep_scenario, rep_out, seed, rep_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
