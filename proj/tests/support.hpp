#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "visas/visas.hpp"

namespace testing_support {

using namespace visas;
namespace fs = std::filesystem;

inline const GeoPoint kOrigin{40.7831, -73.9712, 0.0};

/// Row `i` of the 256x256 Sylvester Hadamard matrix as a 16x16 +-1 pattern.
inline std::vector<int> hadamard_row(int i) {
    std::vector<int> row(256);
    for (int j = 0; j < 256; ++j) row[j] = (std::popcount(static_cast<unsigned>(i & j)) % 2) ? -1 : 1;
    return row;
}

/// Stream whose similarity to any earlier sample is exactly
/// 100 * (1 - steps / width) while the reported fix advances `step_m` per
/// sample, so distance is an exact linear function of similarity.
inline std::vector<Sample> line_stream(int length, int width = 40, double step_m = 1.0, double heading = 0.3) {
    std::vector<Sample> out;
    for (int s = 0; s < length; ++s) {
        std::vector<int> acc(256, 0);
        for (int k = 0; k < width; ++k) {
            const auto row = hadamard_row(1 + (s + k) % 255);
            for (int p = 0; p < 256; ++p) acc[p] += row[p];
        }
        std::vector<std::uint8_t> px(256);
        for (int p = 0; p < 256; ++p) px[p] = static_cast<std::uint8_t>(128 + acc[p]);
        const double d = step_m * s;
        out.push_back({Frame(16, 16, std::move(px), s), offset_point(kOrigin, d * std::cos(heading), d * std::sin(heading)),
                       static_cast<double>(s)});
    }
    return out;
}

/// Straight urban flight of `samples` fixes through the terrain centre.
inline std::vector<Sample> urban_flight(std::uint64_t seed, int samples, double speed, double altitude,
                                        double gps_noise = 0.15, double heading = 0.0) {
    const CameraSpec cam;
    const double length = speed * (samples - 1);
    FlightPlan plan;
    plan.waypoints = {{-length / 2 * std::cos(heading), -length / 2 * std::sin(heading)},
                      {length / 2 * std::cos(heading), length / 2 * std::sin(heading)}};
    plan.speed = speed;
    plan.altitude = altitude;
    plan.gps_noise = gps_noise;
    TerrainSpec ts;
    ts.seed = seed;
    ts.extent = 8.0 * std::ceil((length + cam.footprint(altitude) + 8.0) / 8.0);
    return fly(plan, generate_terrain(ts), cam, kOrigin);
}

/// Fresh, empty scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("visas_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs a shell command, capturing stdout and stderr through files.
inline CommandResult run_command(const std::string& cmd, const std::string& tag) {
    const fs::path dir = scratch_dir("cmd_" + tag);
    const fs::path out = dir / "stdout", err = dir / "stderr";
    const int status = std::system((cmd + " >" + out.string() + " 2>" + err.string()).c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

}  // namespace testing_support
