// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "visas/visas.hpp"

using namespace visas;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(const char* id, const char* title, double time_limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit_s > 0 && secs > time_limit_s) {
        o.pass = false;
        o.detail += " | runtime over limit of " + std::to_string(static_cast<int>(time_limit_s)) + " s";
    }
    std::printf("[%s] %s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
}

std::string num(double v, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Closed-form OLS by direct summation in long double.
struct OlsOracle {
    long double slope, intercept;
};

OlsOracle ols_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

double pearson_oracle(const Frame& a, const Frame& b) {
    const auto pa = a.pixels(), pb = b.pixels();
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        ma += pa[i];
        mb += pb[i];
    }
    ma /= pa.size();
    mb /= pb.size();
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        sab += (pa[i] - ma) * (pb[i] - mb);
        saa += (pa[i] - ma) * (pa[i] - ma);
        sbb += (pb[i] - mb) * (pb[i] - mb);
    }
    return static_cast<double>(100.0L * sab / std::sqrt(saa * sbb));
}

double rel_err(long double got, long double want) {
    return static_cast<double>(std::abs(got - want) / std::max(std::abs(want), 1e-300L));
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

const GeoPoint kOrigin{40.7831, -73.9712, 0.0};

// ---------------------------------------------------------------------------

Outcome c1_ols() {
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(u(rng) * 30);
        // Random frames against a random anchor give the x values, random fixes the y values.
        const int side = 16;
        std::vector<std::uint8_t> px(side * side);
        const auto random_frame = [&] {
            for (auto& p : px) p = static_cast<std::uint8_t>(u(rng) * 256);
            return Frame(side, side, px);
        };
        Sample anchor{random_frame(), offset_point(kOrigin, u(rng) * 100, u(rng) * 100), 0.0};
        std::vector<Sample> window;
        std::vector<double> x, y;
        for (int i = 0; i < n; ++i) {
            Sample s{random_frame(), offset_point(kOrigin, u(rng) * 500 - 250, u(rng) * 500 - 250), i + 1.0};
            x.push_back(pearson_oracle(anchor.frame, s.frame));
            y.push_back(haversine_distance(anchor.location, s.location));
            window.push_back(std::move(s));
        }
        const CorrelationModel m = fit_model(anchor, window);
        const OlsOracle o = ols_oracle(x, y);
        // Relative error measured on the fitted values, which is scale-free for both coefficients.
        for (double xv : x) {
            const long double want = o.slope * xv + o.intercept;
            const long double got = static_cast<long double>(m.slope) * xv + m.intercept;
            worst = std::max(worst, static_cast<double>(std::abs(got - want) / std::max(std::abs(want), 1.0L)));
        }
        worst = std::max(worst, rel_err(m.slope, o.slope));
    }
    return {worst <= 1e-9, "max relative error " + sci(worst) + " over 1000 random sets (limit 1e-09)"};
}

Outcome c2_decay() {
    const double alt = 50.0;
    const CameraSpec cam;
    const double F = cam.footprint(alt);
    const int bins = 8;
    std::vector<double> bin_mean(bins + 1, 0.0), pooled_d, pooled_s, per_anchor_rho;
    int anchors = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TerrainSpec ts;
        ts.seed = seed;
        ts.extent = 600;
        const Terrain terrain = generate_terrain(ts);
        std::mt19937_64 rng(seed * 31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int a = 0; a < 10; ++a, ++anchors) {
            const double h = u(rng) * 2 * std::numbers::pi;
            const double n0 = u(rng) * 300 - 150 - F / 2 * std::cos(h), e0 = u(rng) * 300 - 150 - F / 2 * std::sin(h);
            const Frame f0 = render_frame(terrain, n0, e0, cam, alt, 1.0);
            std::vector<double> ds, ss;
            for (int b = 0; b <= bins; ++b) {
                const double d = F * b / bins;
                const double s = similarity(f0, render_frame(terrain, n0 + d * std::cos(h), e0 + d * std::sin(h), cam, alt, 1.0));
                bin_mean[b] += s;
                ds.push_back(d);
                ss.push_back(s);
            }
            per_anchor_rho.push_back(spearman(ds, ss));
            pooled_d.insert(pooled_d.end(), ds.begin(), ds.end());
            pooled_s.insert(pooled_s.end(), ss.begin(), ss.end());
        }
    }
    for (auto& m : bin_mean) m /= anchors;
    bool monotone = true;
    for (int b = 1; b <= bins; ++b) monotone = monotone && bin_mean[b] <= bin_mean[b - 1];
    const double rho = mean(per_anchor_rho);
    const double pooled = spearman(pooled_d, pooled_s);
    std::vector<double> xs(bin_mean.begin() + 1, bin_mean.end()), ys;
    for (int b = 1; b <= bins; ++b) ys.push_back(F * b / bins);
    const double r2 = fit_points(xs, ys).r2;
    std::string curve;
    for (double m : bin_mean) curve += num(m, 1) + " ";
    return {monotone && rho < -0.9 && r2 >= 0.95,
            "bin means [" + curve + "] monotone=" + (monotone ? "yes" : "no") + ", mean per-anchor Spearman " + num(rho) +
                " (< -0.9), pooled Spearman " + num(pooled) + ", fit r2 " + num(r2) + " (>= 0.95), " + std::to_string(anchors) + " anchors"};
}

// Straight legs of one footprint from a common base, as in the scope experiments.
struct LegStats {
    double range = 0, rmse = 0, r2 = 0;
};

LegStats scope_leg(const Terrain& terrain, double alt, double light, double heading, double bn, double be) {
    const CameraSpec cam;
    const double F = cam.footprint(alt);
    FlightPlan plan;
    plan.waypoints = {{bn, be}, {bn + F * std::cos(heading), be + F * std::sin(heading)}};
    plan.speed = 5.0;
    plan.altitude = alt;
    plan.light_fraction = light;
    const auto flight = fly(plan, terrain, cam, kOrigin);
    const ScopeFit fit = scope_fit(flight, WindowConfig{}.min_correlation);
    return {fit.in_scope_range, fit.model ? fit.model->rmse : 0.0, fit.r2()};
}

struct ScopeStudy {
    int order_ok = 0;
    std::string per_seed;
    std::map<double, std::vector<double>> urban_r2_by_light;  // 50 m
    std::vector<double> flat_r2;
};

const ScopeStudy& scope_study() {
    static const ScopeStudy study = [] {
        ScopeStudy s;
        const int legs = 4;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            TerrainSpec ts;
            ts.seed = seed;
            ts.extent = 1200;
            const Terrain urban = generate_terrain(ts);
            ts.kind = TerrainKind::Flat;
            const Terrain flat = generate_terrain(ts);
            std::mt19937_64 rng(1000 + seed);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double bn = u(rng) * 100 - 50, be = u(rng) * 100 - 50, h0 = u(rng) * 2 * std::numbers::pi;
            std::map<double, double> range, rmse;
            for (int l = 0; l < legs; ++l) {
                const double h = h0 + 2 * std::numbers::pi * l / legs;
                for (double alt : {50.0, 100.0, 200.0}) {
                    const LegStats st = scope_leg(urban, alt, 1.0, h, bn, be);
                    range[alt] += st.range / legs;
                    rmse[alt] += st.rmse / legs;
                    if (alt == 50.0) s.urban_r2_by_light[1.0].push_back(st.r2);
                }
                for (double light : {0.75, 0.5, 0.25, 0.10}) {
                    s.urban_r2_by_light[light].push_back(scope_leg(urban, 50.0, light, h, bn, be).r2);
                }
                s.flat_r2.push_back(scope_leg(flat, 50.0, 1.0, h, bn, be).r2);
            }
            const bool ok = range[50] < range[100] && range[100] < range[200] && rmse[200] > rmse[50];
            s.order_ok += ok;
            s.per_seed += " s" + std::to_string(seed) + "=" + num(range[50], 0) + "/" + num(range[100], 0) + "/" +
                          num(range[200], 0) + "m," + num(rmse[50], 1) + "/" + num(rmse[200], 1) + (ok ? "" : "!");
        }
        return s;
    }();
    return study;
}

Outcome c3_altitude() {
    const auto& s = scope_study();
    return {s.order_ok >= 9, std::to_string(s.order_ok) + "/10 seeds ordered (need 9); range 50/100/200, rmse 50/200:" + s.per_seed};
}

Outcome c4_terrain() {
    const auto& s = scope_study();
    const double urban = mean(s.urban_r2_by_light.at(1.0)), flat = mean(s.flat_r2);
    return {flat <= 0.9 && urban - flat >= 0.05,
            "flat r2 " + num(flat) + " (<= 0.9), urban r2 " + num(urban) + ", gap " + num(urban - flat) + " (>= 0.05)"};
}

Outcome c5_light() {
    const auto& s = scope_study();
    const double r75 = mean(s.urban_r2_by_light.at(0.75)), r50 = mean(s.urban_r2_by_light.at(0.5)),
                 r25 = mean(s.urban_r2_by_light.at(0.25)), r10 = mean(s.urban_r2_by_light.at(0.10));
    const bool high = r75 >= 0.95 && r50 >= 0.95 && r25 >= 0.95;
    const bool drop = r75 - r10 >= 0.05;
    return {high && drop, "r2 at 75/50/25% light " + num(r75) + "/" + num(r50) + "/" + num(r25) + " (each >= 0.95: " +
                              (high ? "yes" : "no") + "), 10% light " + num(r10) + " (drop " + num(r75 - r10) +
                              " >= 0.05: " + (drop ? "yes" : "no") + ")"};
}

// 50 m altitude, about 4 km/h, 1 Hz, receiver noise 0.15 m per axis.
std::vector<Sample> slow_flight(std::uint64_t seed, double heading, double length = 80.0) {
    TerrainSpec ts;
    ts.seed = seed;
    ts.extent = 2 * (length / 2 + 41) + 24;
    const Terrain terrain = generate_terrain(ts);
    FlightPlan plan;
    plan.waypoints = {{-length / 2 * std::cos(heading), -length / 2 * std::sin(heading)},
                      {length / 2 * std::cos(heading), length / 2 * std::sin(heading)}};
    plan.speed = 1.111;
    plan.altitude = 50.0;
    plan.gps_noise = 0.15;
    return fly(plan, terrain, CameraSpec{}, kOrigin);
}

const std::vector<int> kSizes{2, 3, 4, 5, 6, 7, 8};

std::vector<double> threshold_grid() {
    std::vector<double> t;
    for (int k = 5; k <= 40; ++k) t.push_back(k / 10.0);
    return t;
}

std::vector<std::vector<SweepResult>> all_sweeps;

Outcome c6_detection() {
    // Tune window and threshold on calibration flights that share no seed with the trials.
    std::vector<std::vector<Sample>> calib;
    for (std::uint64_t s = 0; s < 10; ++s) calib.push_back(slow_flight(5000 + s, 0.7 * static_cast<double>(s)));
    WindowConfig base;
    const auto grid = threshold_grid();
    const auto sweep = window_sweep(std::span<const std::vector<Sample>>(calib), kSizes, base, grid);
    all_sweeps.push_back(sweep);
    WindowConfig cfg = base;
    cfg.n = optimal_window(sweep, 0.5);
    const auto& chosen = *std::find_if(sweep.begin(), sweep.end(), [&](const SweepResult& r) { return r.window_size == cfg.n; });
    const auto th = select_threshold(chosen, 0.03);
    if (!th) return {false, "no threshold reaches calibration FPR 0.03"};
    cfg.alert_threshold = *th;

    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int hit4 = 0, hit_u = 0;
    std::size_t verified = 0, flagged = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const double heading = u(rng) * 2 * std::numbers::pi;
        const auto flight = slow_flight(static_cast<std::uint64_t>(t + 1), heading);
        for (const auto& v : run_stream(flight, cfg)) {
            verified += v.verified();
            flagged += v.flagged;
        }
        const std::size_t start = 20 + static_cast<std::size_t>(u(rng) * 30);
        const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
        const double small = 1.0 + 3.0 * u(rng);
        const double magnitudes[2] = {4.0, small};
        for (int k = 0; k < 2; ++k) {
            const double magnitude = magnitudes[k];
            AttackSpec a;
            a.start_index = start;
            a.offset_north = sign * magnitude * std::cos(heading);
            a.offset_east = sign * magnitude * std::sin(heading);
            const auto verdicts = run_stream(inject(flight, a), cfg);
            const DetectionStats d = detection_stats(verdicts, start);
            const bool hit = d.detected && *d.delay <= static_cast<std::size_t>(cfg.q);
            (k == 0 ? hit4 : hit_u) += hit;
        }
    }
    const double fpr = static_cast<double>(flagged) / static_cast<double>(verified);
    const bool pass = hit4 >= 95 && hit_u >= 80 && fpr <= 0.05;
    return {pass, "tuned n=" + std::to_string(cfg.n) + " q=" + std::to_string(cfg.q) + " threshold " +
                      num(cfg.alert_threshold, 1) + " m; 4 m offsets detected within q in " + std::to_string(hit4) +
                      "/100 (>= 95), U[1,4] m offsets in " + std::to_string(hit_u) + "/100 (>= 80), benign FPR " +
                      num(fpr, 4) + " (<= 0.05)"};
}

Outcome c7_plateau() {
    const auto grid = threshold_grid();
    int plateau_ok = 0;
    bool fpr_monotone = true;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::vector<std::vector<Sample>> flights;
        for (std::uint64_t k = 0; k < 3; ++k) flights.push_back(slow_flight(7000 + 10 * seed + k, 1.3 * static_cast<double>(seed + k)));
        const auto sweep = window_sweep(std::span<const std::vector<Sample>>(flights), kSizes, WindowConfig{}, grid);
        all_sweeps.push_back(sweep);
        for (const auto& r : sweep) {
            double prev = 1.0;
            for (const auto& [th, f] : r.fpr_by_threshold) {
                fpr_monotone = fpr_monotone && f <= prev;
                prev = f;
            }
        }
        double lo = INFINITY;
        for (const auto& r : sweep) lo = std::min(lo, r.max_prediction_error);
        std::vector<int> plateau;
        for (const auto& r : sweep) {
            if (r.max_prediction_error <= lo * 1.10) plateau.push_back(r.window_size);
        }
        // kSizes is consecutive, so contiguity means consecutive window sizes.
        bool contiguous = true;
        for (std::size_t i = 1; i < plateau.size(); ++i) contiguous = contiguous && plateau[i] == plateau[i - 1] + 1;
        const bool middle = plateau.front() > kSizes.front() && plateau.back() < kSizes.back();
        plateau_ok += contiguous && middle;
        per_seed += " s" + std::to_string(seed) + "={" + std::to_string(plateau.front()) + ".." +
                    std::to_string(plateau.back()) + "}" + (contiguous && middle ? "" : "!");
    }
    return {fpr_monotone && plateau_ok >= 8, std::string("FPR non-increasing: ") + (fpr_monotone ? "yes" : "no") +
                                                 "; max-error plateau (within 10% of min) in the middle for " +
                                                 std::to_string(plateau_ok) + "/10 seeds (need 8):" + per_seed};
}

Outcome c8_endpoints() {
    std::size_t checked = 0;
    bool ok = true;
    for (const auto& sweep : all_sweeps) {
        const auto argmin = [&](auto key) {
            int best = -1;
            double bv = INFINITY;
            for (const auto& r : sweep) {
                if (key(r) < bv) {
                    bv = key(r);
                    best = r.window_size;
                }
            }
            return best;
        };
        const int avg_best = argmin([](const SweepResult& r) { return r.avg_prediction_error; });
        const int max_best = argmin([](const SweepResult& r) { return r.max_prediction_error; });
        ok = ok && optimal_window(sweep, 1.0) == avg_best && optimal_window(sweep, 0.0) == max_best;
        ++checked;
    }
    return {ok && checked > 0, std::to_string(checked) + " sweep outputs checked, endpoints " + (ok ? "match" : "differ")};
}

Outcome c9_roundtrip() {
    Scenario sc = parse_scenario(nlohmann::json::parse(R"({
        "name": "roundtrip", "seed": 9,
        "plan": {"route": {"type": "star", "radius": 30, "arms": 4}, "speed": 2.0, "altitude": 50, "gps_noise": 0.15},
        "detector": {"threshold": 1.6}})"));
    const RunResult a = run_scenario(sc);
    const fs::path dir = fs::temp_directory_path() / "visas_acceptance_roundtrip";
    fs::remove_all(dir);
    FlightLogHeader header;
    header.origin = sc.origin;
    write_log(a.samples, dir, header);
    const auto back = read_log(dir / kLogFileName);
    fs::remove_all(dir);
    bool frames = back.size() == a.samples.size(), times = frames;
    double coord = 0.0;
    for (std::size_t i = 0; frames && i < back.size(); ++i) {
        frames = frames && back[i].frame == a.samples[i].frame;
        times = times && back[i].t == a.samples[i].t;
        coord = std::max({coord, std::abs(back[i].location.lat - a.samples[i].location.lat),
                          std::abs(back[i].location.lon - a.samples[i].location.lon)});
    }
    const RunResult b = run_scenario(sc);
    std::ostringstream ca, cb;
    write_verdicts_csv(ca, a.verdicts);
    write_verdicts_csv(cb, b.verdicts);
    const bool same = ca.str() == cb.str() && !a.verdicts.empty();
    const bool pass = frames && times && coord <= 1e-7 && same;
    return {pass, std::to_string(a.samples.size()) + " samples; frames bit-exact " + (frames ? "yes" : "no") +
                      ", timestamps exact " + (times ? "yes" : "no") + ", max coordinate error " + sci(coord) +
                      " deg (<= 1e-07), verdict CSVs byte-identical " + (same ? "yes" : "no")};
}

Outcome c10_geodesy() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto random_point = [&] { return GeoPoint{u(rng) * 178 - 89, u(rng) * 360 - 180, 0.0}; };
    double asym = 0.0, tri = 0.0, round = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const GeoPoint a = random_point(), b = random_point(), c = random_point();
        const double ab = haversine_distance(a, b), ba = haversine_distance(b, a);
        asym = std::max(asym, std::abs(ab - ba));
        const double bc = haversine_distance(b, c), ac = haversine_distance(a, c);
        tri = std::max(tri, (ac - (ab + bc)) / std::max(ac, 1.0));
        const GeoPoint o{u(rng) * 120 - 60, u(rng) * 360 - 180, 0.0};
        const double r = u(rng) * 1000, h = u(rng) * 2 * std::numbers::pi;
        const double north = r * std::cos(h), east = r * std::sin(h);
        if (r < 1e-6) continue;
        round = std::max(round, std::abs(haversine_distance(o, offset_point(o, north, east)) - r) / r);
    }
    const bool pass = asym == 0.0 && tri <= 1e-6 && round <= 1e-3;
    return {pass, "10000 cases: max asymmetry " + sci(asym) + " m, worst triangle excess " + sci(tri) +
                      " (<= 1e-06 relative), worst offset round-trip " + sci(round) + " (<= 1e-03)"};
}

}  // namespace

int main() {
    run("C1", "OLS oracle equivalence", 5, c1_ols);
    run("C2", "correlation decay", 60, c2_decay);
    run("C3", "altitude ordering", 0, c3_altitude);
    run("C4", "terrain contrast", 0, c4_terrain);
    run("C5", "light degradation", 0, c5_light);
    run("C6", "end-to-end detection", 300, c6_detection);
    run("C7", "FPR monotonicity and window plateau", 0, c7_plateau);
    run("C8", "e(alpha) endpoints", 0, c8_endpoints);
    run("C9", "round-trip and determinism", 0, c9_roundtrip);
    run("C10", "geodesy", 5, c10_geodesy);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
