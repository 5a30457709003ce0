#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visas/attack.hpp"
#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/geo.hpp"
#include "visas/metrics.hpp"
#include "visas/simulator.hpp"

namespace visas {

inline constexpr std::uint64_t kDefaultSeed = 1;
inline constexpr const char* kSeedEnv = "VISAS_SEED";

/// Seed used when neither the command line nor the scenario names one.
inline std::uint64_t default_seed() {
    const char* env = std::getenv(kSeedEnv);
    if (!env || !*env) return kDefaultSeed;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError(std::string(kSeedEnv) + " is not an unsigned integer: " + env);
    return v;
}

/// One fully resolved simulation run.
struct Scenario {
    std::string name = "scenario";
    TerrainSpec terrain;
    CameraSpec camera;
    GeoPoint origin{40.7831, -73.9712, 0.0};
    FlightPlan plan;
    WindowConfig detector;
    std::optional<AttackSpec> attack;
};

namespace detail {

/// Typed access to a JSON object that reports failures with their JSON path.
class JsonView {
public:
    JsonView(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }
    [[nodiscard]] std::string at(const char* key) const { return path_ + "." + key; }

    [[nodiscard]] double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
        return v.get<double>();
    }

    [[nodiscard]] long long integer(const char* key, long long fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
        return v.get<long long>();
    }

    [[nodiscard]] bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
        return v.get<bool>();
    }

    [[nodiscard]] std::string string(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
        return v.get<std::string>();
    }

    [[nodiscard]] JsonView object(const char* key) const { return {j_.at(key), at(key)}; }
    [[nodiscard]] const nlohmann::json& raw(const char* key) const { return j_.at(key); }

    /// Rejects keys outside `allowed`, which catches misspelled settings.
    void only(std::initializer_list<const char*> allowed) const {
        for (const auto& [k, v] : j_.items()) {
            const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
            if (!ok) throw ConfigError(path_ + "." + k + ": unknown setting");
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
};

inline Waypoint parse_point(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(path + ": expected [north, east] in meters");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

/// Runs a validator and prefixes its message with the JSON path.
inline void validated(const std::string& path, const auto& check) {
    try {
        check();
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline std::vector<Waypoint> parse_route(const JsonView& route, const CameraSpec& camera, double altitude) {
    route.only({"type", "points", "base", "heading_deg", "length", "radius", "arms"});
    const std::string type = route.string("type", "waypoints");
    const Waypoint base = route.has("base") ? parse_point(route.raw("base"), route.at("base")) : Waypoint{};
    const double heading = deg2rad(route.number("heading_deg", 0.0));
    const auto leg = [&](double length) {
        return std::vector<Waypoint>{base, {base.north + length * std::cos(heading), base.east + length * std::sin(heading)}};
    };
    if (type == "waypoints") {
        if (!route.has("points") || !route.raw("points").is_array()) {
            throw ConfigError(route.at("points") + ": expected an array of [north, east]");
        }
        std::vector<Waypoint> pts;
        const auto& arr = route.raw("points");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            pts.push_back(parse_point(arr[i], route.at("points") + "[" + std::to_string(i) + "]"));
        }
        return pts;
    }
    if (type == "scope") return leg(camera.footprint(altitude));
    if (type == "line") {
        const double length = route.number("length", 0.0);
        if (!(length > 0.0)) throw ConfigError(route.at("length") + ": must be > 0");
        return leg(length);
    }
    if (type == "star") {
        const double radius = route.number("radius", 0.0);
        const auto arms = route.integer("arms", 5);
        if (!(radius > 0.0)) throw ConfigError(route.at("radius") + ": must be > 0");
        if (arms < 1) throw ConfigError(route.at("arms") + ": must be >= 1");
        return star_route(base, radius, static_cast<int>(arms), route.number("heading_deg", 0.0));
    }
    throw ConfigError(route.at("type") + ": unknown route type '" + type + "' (waypoints, scope, line, star)");
}

/// Smallest square extent (multiple of 8 m) that keeps every footprint on the terrain.
inline double auto_extent(const std::vector<Waypoint>& pts, double footprint, double resolution) {
    double reach = 0.0;
    for (const auto& p : pts) reach = std::max({reach, std::abs(p.north), std::abs(p.east)});
    const double need = 2.0 * (reach + footprint / 2.0) + 4.0 * resolution;
    return 8.0 * std::ceil(need / 8.0);
}

}  // namespace detail

/// Builds one scenario from a JSON object (no `variants`).
inline Scenario parse_scenario(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = std::nullopt) {
    using detail::JsonView;
    const JsonView root(doc, "$");
    root.only({"name", "seed", "terrain", "camera", "origin", "plan", "detector", "attack"});
    Scenario sc;
    sc.name = root.string("name", sc.name);

    if (root.has("camera")) {
        const auto cam = root.object("camera");
        cam.only({"fov_deg", "image_size", "read_noise", "grain_noise", "grain_size"});
        sc.camera.fov_deg = cam.number("fov_deg", sc.camera.fov_deg);
        sc.camera.image_size = static_cast<int>(cam.integer("image_size", sc.camera.image_size));
        sc.camera.read_noise = cam.number("read_noise", sc.camera.read_noise);
        sc.camera.grain_noise = cam.number("grain_noise", sc.camera.grain_noise);
        sc.camera.grain_size = static_cast<int>(cam.integer("grain_size", sc.camera.grain_size));
        detail::validated("$.camera", [&] { sc.camera.validate(); });
    }

    if (root.has("origin")) {
        const auto o = root.object("origin");
        o.only({"lat", "lon", "alt"});
        sc.origin = {o.number("lat", sc.origin.lat), o.number("lon", sc.origin.lon), o.number("alt", 0.0)};
    }
    if (!sc.origin.valid()) throw ConfigError("$.origin: latitude/longitude out of range");

    if (!root.has("plan")) throw ConfigError("$.plan: missing");
    const auto plan = root.object("plan");
    plan.only({"route", "speed", "altitude", "sample_rate", "light_fraction", "gps_noise"});
    sc.plan.speed = plan.number("speed", sc.plan.speed);
    sc.plan.altitude = plan.number("altitude", sc.plan.altitude);
    sc.plan.sample_rate = plan.number("sample_rate", sc.plan.sample_rate);
    sc.plan.light_fraction = plan.number("light_fraction", sc.plan.light_fraction);
    sc.plan.gps_noise = plan.number("gps_noise", sc.plan.gps_noise);
    if (!plan.has("route")) throw ConfigError("$.plan.route: missing");
    sc.plan.waypoints = detail::parse_route(plan.object("route"), sc.camera, sc.plan.altitude);
    detail::validated("$.plan", [&] { sc.plan.validate(); });

    std::uint64_t seed = default_seed();
    if (root.has("seed")) {
        const auto s = root.integer("seed", 0);
        if (s < 0) throw ConfigError("$.seed: must be >= 0");
        seed = static_cast<std::uint64_t>(s);
    }
    if (seed_override) seed = *seed_override;
    sc.terrain.seed = seed;
    std::optional<double> extent;
    if (root.has("terrain")) {
        const auto t = root.object("terrain");
        t.only({"kind", "extent", "ground_resolution", "city_blocks"});
        const std::string kind = t.string("kind", "urban");
        if (kind == "urban") {
            sc.terrain.kind = TerrainKind::Urban;
        } else if (kind == "flat") {
            sc.terrain.kind = TerrainKind::Flat;
        } else {
            throw ConfigError(t.at("kind") + ": expected \"urban\" or \"flat\"");
        }
        sc.terrain.ground_resolution = t.number("ground_resolution", sc.terrain.ground_resolution);
        sc.terrain.city_blocks = t.boolean("city_blocks", false);
        if (t.has("extent")) extent = t.number("extent", 0.0);
    }
    sc.terrain.extent = extent.value_or(detail::auto_extent(sc.plan.waypoints, sc.camera.footprint(sc.plan.altitude),
                                                            sc.terrain.ground_resolution));
    detail::validated("$.terrain", [&] { sc.terrain.validate(); });

    if (root.has("detector")) {
        const auto d = root.object("detector");
        d.only({"n", "q", "threshold", "min_corr", "one_sided", "schedule"});
        sc.detector.n = static_cast<int>(d.integer("n", sc.detector.n));
        sc.detector.q = static_cast<int>(d.integer("q", sc.detector.q));
        sc.detector.alert_threshold = d.number("threshold", sc.detector.alert_threshold);
        sc.detector.min_correlation = d.number("min_corr", sc.detector.min_correlation);
        sc.detector.one_sided = d.boolean("one_sided", sc.detector.one_sided);
        const std::string schedule = d.string("schedule", "staggered");
        if (schedule == "staggered") {
            sc.detector.schedule = Schedule::Staggered;
        } else if (schedule == "sequential") {
            sc.detector.schedule = Schedule::Sequential;
        } else {
            throw ConfigError(d.at("schedule") + ": expected \"staggered\" or \"sequential\"");
        }
        detail::validated("$.detector", [&] { sc.detector.validate(); });
    }

    if (root.has("attack")) {
        const auto a = root.object("attack");
        a.only({"kind", "start_index", "offset_north", "offset_east", "drift_rate", "drift_heading"});
        AttackSpec spec;
        const std::string kind = a.string("kind", "constant_offset");
        if (kind == "constant_offset") {
            spec.kind = AttackKind::ConstantOffset;
        } else if (kind == "drift") {
            spec.kind = AttackKind::Drift;
        } else if (kind == "freeze") {
            spec.kind = AttackKind::Freeze;
        } else {
            throw ConfigError(a.at("kind") + ": expected constant_offset, drift or freeze");
        }
        const auto start = a.integer("start_index", 1);
        if (start < 1) throw ConfigError(a.at("start_index") + ": must be >= 1");
        spec.start_index = static_cast<std::size_t>(start);
        spec.offset_north = a.number("offset_north", 0.0);
        spec.offset_east = a.number("offset_east", 0.0);
        spec.drift_rate = a.number("drift_rate", 0.0);
        spec.drift_heading = a.number("drift_heading", 0.0);
        detail::validated("$.attack", [&] { spec.validate(); });
        sc.attack = spec;
    }
    return sc;
}

/// Expands a scenario document into its runs. A top-level `variants` array
/// holds JSON merge patches applied to the rest of the document, one run each.
inline std::vector<Scenario> parse_batch(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (!doc.is_object()) throw ConfigError("$: expected an object");
    if (!doc.contains("variants")) return {parse_scenario(doc, seed_override)};
    const auto& variants = doc.at("variants");
    if (!variants.is_array() || variants.empty()) throw ConfigError("$.variants: expected a nonempty array");
    nlohmann::json base = doc;
    base.erase("variants");
    const std::string prefix = base.value("name", std::string("scenario"));
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const std::string path = "$.variants[" + std::to_string(i) + "]";
        if (!variants[i].is_object()) throw ConfigError(path + ": expected an object");
        nlohmann::json merged = base;
        merged.merge_patch(variants[i]);
        if (!variants[i].contains("name")) merged["name"] = prefix + "_" + std::to_string(i);
        try {
            out.push_back(parse_scenario(merged, seed_override));
        } catch (const ConfigError& e) {
            throw ConfigError(path + " -> " + e.what());
        }
    }
    return out;
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Everything produced by one simulated run.
struct RunResult {
    Scenario scenario;
    std::vector<Sample> samples;    // as reported, attack applied
    std::vector<Verdict> verdicts;
    ScopeFit scope;                 // first-frame fit on the benign fixes
    std::optional<DetectionStats> detection;
};

inline RunResult run_scenario(const Scenario& sc) {
    RunResult r;
    r.scenario = sc;
    const Terrain terrain = generate_terrain(sc.terrain);
    std::vector<Sample> benign = fly(sc.plan, terrain, sc.camera, sc.origin);
    r.scope = scope_fit(benign, sc.detector.min_correlation);
    r.samples = sc.attack ? inject(benign, *sc.attack) : std::move(benign);
    r.verdicts = run_stream(r.samples, sc.detector);
    if (sc.attack) r.detection = detection_stats(r.verdicts, sc.attack->start_index);
    return r;
}

}  // namespace visas
