#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visas/detail/hash.hpp"
#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/geo.hpp"
#include "visas/imaging.hpp"

namespace visas {

enum class TerrainKind { Urban, Flat };

inline std::string_view to_string(TerrainKind k) noexcept {
    return k == TerrainKind::Urban ? "urban" : "flat";
}

inline constexpr int kMaxTerrainTexels = 16'384;

struct TerrainSpec {
    std::uint64_t seed = 1;
    TerrainKind kind = TerrainKind::Urban;
    double extent = 1024.0;            // meters, side of the square
    double ground_resolution = 0.5;    // meters per texel
    bool city_blocks = false;          // overlay the street and roof pattern (Urban only)

    void validate() const {
        if (!(extent > 0.0) || !(ground_resolution > 0.0)) {
            throw ConfigError("terrain extent and ground_resolution must be > 0");
        }
        if (extent / ground_resolution > kMaxTerrainTexels) {
            throw ExtentTooLarge("terrain of " + std::to_string(extent) + " m at " +
                                 std::to_string(ground_resolution) + " m/texel exceeds " +
                                 std::to_string(kMaxTerrainTexels) + " texels per side");
        }
    }
};

/// Generation constants for the procedural orthophoto.
///
/// Urban value noise is a power-law spectrum: octave amplitude grows as
/// wavelength^kUrbanHurst above kCornerWavelength and as
/// wavelength^kFineHurst below it. The smooth large-scale part makes mean
/// similarity fall close to linearly across a whole footprint at any altitude;
/// the rougher fine part keeps similarity sensitive to metre-scale moves.
namespace terrain_params {
inline constexpr double kUrbanMinWavelength = 1.0;
inline constexpr double kUrbanMaxWavelength = 512.0;
inline constexpr double kUrbanHurst = 1.0;
inline constexpr double kCornerWavelength = 16.0;
inline constexpr double kFineHurst = 0.5;
inline constexpr double kUrbanNoiseStd = 38.0;
inline constexpr double kBlockMin = 40.0;         // street-to-street spacing range, m
inline constexpr double kBlockMax = 110.0;
inline constexpr double kStreetWidth = 9.0;
inline constexpr double kStreetOffset = -30.0;    // intensity of asphalt relative to mean
inline constexpr double kRoofStd = 26.0;
inline constexpr double kMean = 128.0;
inline constexpr double kFlatWavelength = 512.0;
inline constexpr double kFlatAmplitude = 8.0;     // peak deviation, levels
}  // namespace terrain_params

/// Seeded grayscale orthophoto centred on the flight origin. Coordinates are
/// (north, east) meters from the centre.
class Terrain {
public:
    Terrain(TerrainSpec spec, std::vector<float> texels)
        : spec_(spec), size_(static_cast<int>(std::lround(spec.extent / spec.ground_resolution))),
          texels_(std::move(texels)) {}

    [[nodiscard]] const TerrainSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] int size() const noexcept { return size_; }
    [[nodiscard]] double half_extent() const noexcept { return 0.5 * size_ * spec_.ground_resolution; }
    [[nodiscard]] std::span<const float> texels() const noexcept { return texels_; }

    /// Texel (row, col); row 0 is the northern edge.
    [[nodiscard]] float texel(int row, int col) const noexcept {
        return texels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(size_) +
                       static_cast<std::size_t>(col)];
    }

    /// Bilinear intensity at a ground position.
    [[nodiscard]] double sample(double north, double east) const noexcept {
        const double res = spec_.ground_resolution;
        const double x = (east + half_extent()) / res - 0.5;
        const double y = (half_extent() - north) / res - 0.5;
        const double fx0 = std::floor(x), fy0 = std::floor(y);
        const int x0 = std::clamp(static_cast<int>(fx0), 0, size_ - 2);
        const int y0 = std::clamp(static_cast<int>(fy0), 0, size_ - 2);
        const double fx = std::clamp(x - x0, 0.0, 1.0);
        const double fy = std::clamp(y - y0, 0.0, 1.0);
        const double a = texel(y0, x0) + (texel(y0, x0 + 1) - texel(y0, x0)) * fx;
        const double b = texel(y0 + 1, x0) + (texel(y0 + 1, x0 + 1) - texel(y0 + 1, x0)) * fx;
        return a + (b - a) * fy;
    }

private:
    TerrainSpec spec_;
    int size_;
    std::vector<float> texels_;
};

namespace detail {

inline double smoothstep(double t) noexcept { return t * t * (3.0 - 2.0 * t); }

/// Hashed lattice value in [-1, 1] for one noise octave.
inline double lattice_value(std::uint64_t key, std::int64_t ix, std::int64_t iy) noexcept {
    const auto h = hash_combine(hash_combine(key, static_cast<std::uint64_t>(ix)),
                                static_cast<std::uint64_t>(iy) ^ 0xA5A5A5A5A5A5A5A5ULL);
    return 2.0 * to_unit(h) - 1.0;
}

/// Texel-centre coordinate of column (or row) i along an axis; rows run north to south.
struct Axis {
    int n;
    double res;
    double half;
    [[nodiscard]] double east(int c) const noexcept { return (c + 0.5) * res - half; }
    [[nodiscard]] double north(int r) const noexcept { return half - (r + 0.5) * res; }
};

/// Adds amplitude * value_noise(wavelength) over the whole texture. The octave
/// lattice is evaluated once and interpolated with smoothstep weights.
inline void add_value_noise(std::vector<double>& field, const Axis& ax, std::uint64_t seed,
                            std::uint64_t octave, double wavelength, double amplitude) {
    const std::uint64_t key = hash_combine(splitmix64(seed), octave + 1);
    const double inv = 1.0 / wavelength;
    const auto lo = static_cast<std::int64_t>(std::floor(-ax.half * inv)) - 1;
    const auto hi = static_cast<std::int64_t>(std::floor(ax.half * inv)) + 2;
    const auto m = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> lat(m * m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            lat[j * m + i] = lattice_value(key, lo + static_cast<std::int64_t>(i), lo + static_cast<std::int64_t>(j));
        }
    }
    struct Tap {
        std::size_t i;
        double w;
    };
    const auto taps = [&](double coord) {
        const double g = coord * inv;
        const double f = std::floor(g);
        return Tap{static_cast<std::size_t>(static_cast<std::int64_t>(f) - lo), smoothstep(g - f)};
    };
    std::vector<Tap> cols(static_cast<std::size_t>(ax.n));
    for (int c = 0; c < ax.n; ++c) cols[static_cast<std::size_t>(c)] = taps(ax.east(c));
    for (int r = 0; r < ax.n; ++r) {
        const Tap ty = taps(ax.north(r));
        const double* row0 = &lat[ty.i * m];
        const double* row1 = row0 + m;
        double* out = &field[static_cast<std::size_t>(r) * static_cast<std::size_t>(ax.n)];
        for (int c = 0; c < ax.n; ++c) {
            const Tap tx = cols[static_cast<std::size_t>(c)];
            const double a = row0[tx.i] + (row0[tx.i + 1] - row0[tx.i]) * tx.w;
            const double b = row1[tx.i] + (row1[tx.i + 1] - row1[tx.i]) * tx.w;
            out[c] += amplitude * (a + (b - a) * ty.w);
        }
    }
}

inline void standardize(std::vector<double>& v, double target_std) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double scale = var > 0.0 ? target_std / std::sqrt(var) : 0.0;
    for (double& x : v) x = (x - mean) * scale;
}

/// Street positions along one axis with random block lengths, covering [-half, half].
inline std::vector<double> street_lines(Stream& rng, double half) {
    using namespace terrain_params;
    std::vector<double> lines;
    double pos = -half - rng.uniform(0.0, kBlockMax);
    while (pos <= half + kBlockMax) {
        lines.push_back(pos);
        pos += rng.uniform(kBlockMin, kBlockMax);
    }
    return lines;
}

struct Cell {
    std::size_t block;     // index between street lines
    double within;         // meters past the street line
    double length;         // block length along this axis
};

inline std::vector<Cell> cells_along(const std::vector<double>& lines, int n, auto coord) {
    std::vector<Cell> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = coord(i);
        const auto it = std::upper_bound(lines.begin(), lines.end(), x);
        const auto k = static_cast<std::size_t>(it - lines.begin()) - 1;
        out[static_cast<std::size_t>(i)] = {k, x - lines[k], lines[k + 1] - lines[k]};
    }
    return out;
}

/// Irregular street grid with buildings of random roof intensity, as offsets from the mean.
inline void add_city_blocks(std::vector<double>& field, const Axis& ax, std::uint64_t seed) {
    using namespace terrain_params;
    Stream rng(seed ^ 0xB10C5ULL);
    const auto east_lines = street_lines(rng, ax.half);
    const auto north_lines = street_lines(rng, ax.half);
    const auto cols = cells_along(east_lines, ax.n, [&](int c) { return ax.east(c); });
    const auto rows = cells_along(north_lines, ax.n, [&](int r) { return ax.north(r); });
    const double half_street = 0.5 * kStreetWidth;
    for (int r = 0; r < ax.n; ++r) {
        const Cell& cy = rows[static_cast<std::size_t>(r)];
        double* out = &field[static_cast<std::size_t>(r) * static_cast<std::size_t>(ax.n)];
        const bool street_row = cy.within < half_street || cy.within > cy.length - half_street;
        for (int c = 0; c < ax.n; ++c) {
            const Cell& cx = cols[static_cast<std::size_t>(c)];
            if (street_row || cx.within < half_street || cx.within > cx.length - half_street) {
                out[c] += kStreetOffset;
                continue;
            }
            const std::uint64_t block = hash_combine(hash_combine(splitmix64(seed ^ 0xB10CULL), cx.block), cy.block);
            Stream layout(block);
            const int ncols = 1 + static_cast<int>(layout.uniform() * 3.0);
            const int nrows = 1 + static_cast<int>(layout.uniform() * 3.0);
            const int ci = std::min(ncols - 1, static_cast<int>((cx.within - half_street) / (cx.length - kStreetWidth) * ncols));
            const int ri = std::min(nrows - 1, static_cast<int>((cy.within - half_street) / (cy.length - kStreetWidth) * nrows));
            Stream roof(hash_combine(block, static_cast<std::uint64_t>(ri * 8 + ci + 1)));
            out[c] += kRoofStd * roof.gaussian();
        }
    }
}

}  // namespace detail

/// Builds the texture for `spec`. Identical specs give bit-identical textures.
inline Terrain generate_terrain(const TerrainSpec& spec) {
    using namespace terrain_params;
    spec.validate();
    const int n = static_cast<int>(std::lround(spec.extent / spec.ground_resolution));
    if (n < 2) throw ConfigError("terrain must be at least 2 texels wide");
    const detail::Axis ax{n, spec.ground_resolution, 0.5 * n * spec.ground_resolution};
    const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);

    std::vector<double> field(count, 0.0);
    if (spec.kind == TerrainKind::Urban) {
        std::uint64_t k = 0;
        for (double lam = kUrbanMinWavelength; lam <= kUrbanMaxWavelength * 1.0001; lam *= 2.0, ++k) {
            const double amplitude = lam >= kCornerWavelength
                                         ? std::pow(lam, kUrbanHurst)
                                         : std::pow(kCornerWavelength, kUrbanHurst) *
                                               std::pow(lam / kCornerWavelength, kFineHurst);
            detail::add_value_noise(field, ax, spec.seed, k, lam, amplitude);
        }
        detail::standardize(field, kUrbanNoiseStd);
        if (spec.city_blocks) detail::add_city_blocks(field, ax, spec.seed);
    } else {
        detail::add_value_noise(field, ax, spec.seed, 0, kFlatWavelength, kFlatAmplitude);
    }

    std::vector<float> texels(count);
    for (std::size_t i = 0; i < count; ++i) {
        texels[i] = static_cast<float>(std::clamp(kMean + field[i], 0.0, 255.0));
    }
    return Terrain(spec, std::move(texels));
}

/// Nadir pinhole camera.
struct CameraSpec {
    double fov_deg = 78.0;      // full angle
    int image_size = 256;       // square frames
    double read_noise = 1.0;    // std of additive white sensor noise, intensity levels
    double grain_noise = 0.5;   // std of spatially correlated temporal noise, intensity levels
    int grain_size = 32;        // correlation length of the grain, pixels

    void validate() const {
        if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("camera fov must be in (0, 180)");
        if (image_size < kMinFrameSide) throw ConfigError("camera image_size must be >= 16");
        if (!(read_noise >= 0.0)) throw ConfigError("camera read_noise must be >= 0");
        if (!(grain_noise >= 0.0)) throw ConfigError("camera grain_noise must be >= 0");
        if (grain_size < 1) throw ConfigError("camera grain_size must be >= 1");
    }

    /// Side of the imaged ground square at `altitude`, meters.
    [[nodiscard]] double footprint(double altitude) const noexcept {
        return 2.0 * altitude * std::tan(deg2rad(fov_deg) / 2.0);
    }
};

/// Renders the nadir view centred at (north, east).
///
/// The footprint is area-resampled from the terrain, darkened to `light`, and
/// then sensor noise is added. Noise is keyed on the terrain seed and the exact
/// pose, so identical poses render identical frames.
inline Frame render_frame(const Terrain& terrain, double north, double east, const CameraSpec& camera,
                          double altitude, double light, double timestamp = 0.0) {
    camera.validate();
    const double side = camera.footprint(altitude);
    const double limit = terrain.half_extent();
    if (std::abs(north) + side / 2.0 > limit || std::abs(east) + side / 2.0 > limit) {
        throw FootprintOutOfBounds("footprint of " + std::to_string(side) + " m at (" +
                                   std::to_string(north) + ", " + std::to_string(east) +
                                   ") leaves the terrain (half extent " + std::to_string(limit) + " m)");
    }
    const int px = camera.image_size;
    const double pixel = side / px;
    const double res = terrain.spec().ground_resolution;
    const int ss = std::clamp(static_cast<int>(std::ceil(pixel / res)) + 1, 2, 6);
    const double step = pixel / ss;
    const double inv_ss = 1.0 / ss;

    // The box of ss x ss bilinear taps per pixel is separable: filter texel
    // rows horizontally first, then combine those rows vertically.
    struct Tap {
        int i;
        double w;
    };
    const int n = terrain.size();
    const auto tap = [&](double texel_coord) {
        const double f = std::floor(texel_coord);
        const int i = std::clamp(static_cast<int>(f), 0, n - 2);
        return Tap{i, std::clamp(texel_coord - i, 0.0, 1.0)};
    };
    const double half = terrain.half_extent();
    const double left = east - side / 2.0;
    const double top = north + side / 2.0;
    std::vector<Tap> xt(static_cast<std::size_t>(px) * ss), yt(static_cast<std::size_t>(px) * ss);
    for (int c = 0; c < px; ++c) {
        for (int k = 0; k < ss; ++k) {
            const double x = left + c * pixel + (k + 0.5) * step;
            xt[static_cast<std::size_t>(c) * ss + k] = tap((x + half) / res - 0.5);
        }
    }
    for (int r = 0; r < px; ++r) {
        for (int k = 0; k < ss; ++k) {
            const double y = top - r * pixel - (k + 0.5) * step;
            yt[static_cast<std::size_t>(r) * ss + k] = tap((half - y) / res - 0.5);
        }
    }
    const int row_lo = yt.front().i;
    const int row_hi = yt.back().i + 1;
    std::vector<double> hrows(static_cast<std::size_t>(row_hi - row_lo + 1) * px, 0.0);
    for (int tr = row_lo; tr <= row_hi; ++tr) {
        double* dst = &hrows[static_cast<std::size_t>(tr - row_lo) * px];
        const std::span<const float> src = terrain.texels().subspan(static_cast<std::size_t>(tr) * n, static_cast<std::size_t>(n));
        for (int c = 0; c < px; ++c) {
            double acc = 0.0;
            for (int k = 0; k < ss; ++k) {
                const Tap t = xt[static_cast<std::size_t>(c) * ss + k];
                acc += src[t.i] + (src[t.i + 1] - src[t.i]) * t.w;
            }
            dst[c] = acc * inv_ss;
        }
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(px) * static_cast<std::size_t>(px));
    std::vector<double> acc(static_cast<std::size_t>(px));
    for (int r = 0; r < px; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int k = 0; k < ss; ++k) {
            const Tap t = yt[static_cast<std::size_t>(r) * ss + k];
            const double* a = &hrows[static_cast<std::size_t>(t.i - row_lo) * px];
            const double* b = a + px;
            for (int c = 0; c < px; ++c) acc[c] += a[c] + (b[c] - a[c]) * t.w;
        }
        for (int c = 0; c < px; ++c) {
            const double v = std::round(acc[c] * inv_ss);
            out[static_cast<std::size_t>(r) * px + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    Frame frame = darken(Frame(px, px, std::move(out), timestamp), light);
    if (camera.read_noise <= 0.0 && camera.grain_noise <= 0.0) return frame;

    std::uint64_t key = detail::splitmix64(terrain.spec().seed ^ 0x5E11503ULL);
    for (double v : {north, east, altitude, light}) key = detail::hash_combine(key, detail::bits_of(v));
    detail::Stream noise(key);
    std::vector<double> grain;
    if (camera.grain_noise > 0.0) {
        // Gaussian lattice every grain_size pixels, bilinearly interpolated.
        const int g = camera.grain_size;
        const int cells = px / g + 2;
        detail::Stream lattice_rng(detail::hash_combine(key, 0x6A41ULL));
        std::vector<double> lattice(static_cast<std::size_t>(cells) * cells);
        for (auto& v : lattice) v = lattice_rng.gaussian();
        grain.resize(static_cast<std::size_t>(px) * px);
        for (int r = 0; r < px; ++r) {
            const double fy = static_cast<double>(r) / g;
            const int iy = static_cast<int>(fy);
            const double wy = fy - iy;
            for (int c = 0; c < px; ++c) {
                const double fx = static_cast<double>(c) / g;
                const int ix = static_cast<int>(fx);
                const double wx = fx - ix;
                const auto at = [&](int y, int x) { return lattice[static_cast<std::size_t>(y) * cells + x]; };
                const double top_v = at(iy, ix) + (at(iy, ix + 1) - at(iy, ix)) * wx;
                const double bot_v = at(iy + 1, ix) + (at(iy + 1, ix + 1) - at(iy + 1, ix)) * wx;
                grain[static_cast<std::size_t>(r) * px + c] = camera.grain_noise * (top_v + (bot_v - top_v) * wy);
            }
        }
    }
    std::vector<std::uint8_t> noisy(frame.pixels().begin(), frame.pixels().end());
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        double v = noisy[i] + camera.read_noise * noise.gaussian();
        if (!grain.empty()) v += grain[i];
        noisy[i] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    }
    return Frame(px, px, std::move(noisy), timestamp);
}

struct Waypoint {
    double north = 0.0;
    double east = 0.0;
    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct FlightPlan {
    std::vector<Waypoint> waypoints;
    double speed = 5.0;          // m/s
    double altitude = 50.0;      // m
    double sample_rate = 1.0;    // Hz
    double light_fraction = 1.0;
    double gps_noise = 0.0;      // std of the reported fix per horizontal axis, m

    void validate() const {
        if (waypoints.size() < 2) throw ConfigError("flight plan needs at least two waypoints");
        if (!(speed > 0.0)) throw ConfigError("flight speed must be > 0");
        if (!(altitude >= 10.0 && altitude <= 500.0)) throw ConfigError("altitude must be in [10, 500] m");
        if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be > 0");
        if (!(light_fraction > 0.0 && light_fraction <= 1.0)) throw ConfigError("light fraction must be in (0, 1]");
        if (!(gps_noise >= 0.0)) throw ConfigError("gps noise must be >= 0");
        for (std::size_t i = 1; i < waypoints.size(); ++i) {
            if (waypoints[i] == waypoints[i - 1]) {
                throw ConfigError("waypoints " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                  " coincide");
            }
        }
    }

    [[nodiscard]] double path_length() const noexcept {
        double len = 0.0;
        for (std::size_t i = 1; i < waypoints.size(); ++i) {
            len += std::hypot(waypoints[i].north - waypoints[i - 1].north,
                              waypoints[i].east - waypoints[i - 1].east);
        }
        return len;
    }
};

/// Position along the plan after travelling `s` meters.
inline Waypoint position_along(const FlightPlan& plan, double s) noexcept {
    for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
        const auto& a = plan.waypoints[i - 1];
        const auto& b = plan.waypoints[i];
        const double len = std::hypot(b.north - a.north, b.east - a.east);
        if (s <= len || i + 1 == plan.waypoints.size()) {
            const double f = std::clamp(s / len, 0.0, 1.0);
            if (f == 1.0) return b;
            return {a.north + f * (b.north - a.north), a.east + f * (b.east - a.east)};
        }
        s -= len;
    }
    return plan.waypoints.back();
}

/// Star-shaped delivery route: out to each tip and back to the base.
inline std::vector<Waypoint> star_route(Waypoint base, double radius, int arms, double first_heading_deg = 0.0) {
    std::vector<Waypoint> out{base};
    for (int k = 0; k < arms; ++k) {
        const double h = deg2rad(first_heading_deg + 360.0 * k / arms);
        out.push_back({base.north + radius * std::cos(h), base.east + radius * std::sin(h)});
        out.push_back(base);
    }
    return out;
}

/// Samples the plan at `sample_rate` with constant-speed interpolation between
/// waypoints. Both endpoints are included; the final sample is appended at the
/// exact arrival time if it does not fall on the sampling grid. With
/// `gps_noise` > 0 each reported fix is displaced by seeded gaussian error.
inline std::vector<Sample> fly(const FlightPlan& plan, const Terrain& terrain, const CameraSpec& camera,
                               const GeoPoint& origin) {
    plan.validate();
    camera.validate();
    origin.validate();
    const double length = plan.path_length();
    const double duration = length / plan.speed;
    const double dt = 1.0 / plan.sample_rate;
    const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));

    std::vector<double> times;
    times.reserve(steps + 2);
    for (std::size_t k = 0; k <= steps; ++k) times.push_back(static_cast<double>(k) * dt);
    if (duration - times.back() > 1e-9) times.push_back(duration);

    detail::Stream receiver(detail::hash_combine(detail::splitmix64(terrain.spec().seed ^ 0x6F5ULL),
                                                 detail::bits_of(plan.gps_noise)));
    std::vector<Sample> out;
    out.reserve(times.size());
    for (double t : times) {
        const Waypoint p = position_along(plan, std::min(t * plan.speed, length));
        double dn = 0.0, de = 0.0;
        if (plan.gps_noise > 0.0) {
            dn = plan.gps_noise * receiver.gaussian();
            de = plan.gps_noise * receiver.gaussian();
        }
        GeoPoint fix = offset_point(origin, p.north + dn, p.east + de);
        fix.alt = plan.altitude;
        out.push_back(Sample{render_frame(terrain, p.north, p.east, camera, plan.altitude, plan.light_fraction, t),
                             fix, t});
    }
    return out;
}

}  // namespace visas
