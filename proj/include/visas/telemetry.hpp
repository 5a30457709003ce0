#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/geo.hpp"
#include "visas/pnm.hpp"

namespace visas {

inline constexpr const char* kLogFileName = "flight.jsonl";

struct FlightLogHeader {
    std::string drone_id = "sim";
    GeoPoint origin;
    std::string frame_dir = "frames";
    double sample_rate = 1.0;
};

/// Coordinates are stored to 7 decimal places (about 1 cm).
inline double round_coordinate(double deg) noexcept { return std::round(deg * 1e7) / 1e7; }

inline std::string frame_file_name(std::size_t number) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.pgm", number);
    return buf;
}

/// Writes `samples` as `dir/flight.jsonl` plus one PGM per frame under
/// `dir/<frame_dir>`. Returns the log path.
inline std::filesystem::path write_log(std::span<const Sample> samples, const std::filesystem::path& dir,
                                       const FlightLogHeader& header) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / header.frame_dir, ec);
    if (ec) throw IoError("cannot create " + (dir / header.frame_dir).string() + ": " + ec.message());

    const fs::path log_path = dir / kLogFileName;
    std::ofstream out(log_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + log_path.string() + " for writing");

    const nlohmann::ordered_json head = {
        {"drone_id", header.drone_id},
        {"origin",
         {{"lat", round_coordinate(header.origin.lat)},
          {"lon", round_coordinate(header.origin.lon)},
          {"alt", header.origin.alt}}},
        {"frame_dir", header.frame_dir},
        {"sample_rate", header.sample_rate},
    };
    out << head.dump() << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        const std::string name = frame_file_name(i + 1);
        write_pgm(dir / header.frame_dir / name, s.frame);
        const nlohmann::ordered_json rec = {
            {"t", s.t},
            {"lat", round_coordinate(s.location.lat)},
            {"lon", round_coordinate(s.location.lon)},
            {"alt", s.location.alt},
            {"frame_file", name},
        };
        out << rec.dump() << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed: " + log_path.string());
    return log_path;
}

/// Sequential reader over a flight log. Frames are loaded only for records
/// that are returned; `downsample` = k keeps records 0, k, 2k, ...
class LogReader {
public:
    explicit LogReader(const std::filesystem::path& path, std::size_t downsample = 1)
        : path_(path), in_(path, std::ios::binary), downsample_(downsample) {
        if (downsample_ == 0) throw ConfigError("downsample factor must be >= 1");
        if (!in_) throw IoError("cannot open flight log " + path.string());
        std::string line;
        if (!next_line(line)) throw ParseError(1, path.string() + ": missing header line");
        const auto j = parse(line);
        try {
            header_.drone_id = j.at("drone_id").get<std::string>();
            const auto& o = j.at("origin");
            header_.origin = {o.at("lat").get<double>(), o.at("lon").get<double>(), o.value("alt", 0.0)};
            header_.frame_dir = j.at("frame_dir").get<std::string>();
            header_.sample_rate = j.at("sample_rate").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no_, std::string("bad header: ") + e.what());
        }
        if (!header_.origin.valid()) throw ParseError(line_no_, "header origin is not a valid coordinate");
        if (!(header_.sample_rate > 0.0)) throw ParseError(line_no_, "header sample_rate must be > 0");
        frame_root_ = std::filesystem::path(header_.frame_dir);
        if (frame_root_.is_relative()) frame_root_ = path.parent_path() / frame_root_;
    }

    [[nodiscard]] const FlightLogHeader& header() const noexcept { return header_; }

    /// Next kept sample, or nullopt at end of log.
    std::optional<Sample> next() {
        std::string line;
        while (next_line(line)) {
            const auto j = parse(line);
            double t = 0.0;
            GeoPoint fix;
            std::string frame_file;
            try {
                t = j.at("t").get<double>();
                fix = {j.at("lat").get<double>(), j.at("lon").get<double>(), j.at("alt").get<double>()};
                frame_file = j.at("frame_file").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(line_no_, std::string("bad record: ") + e.what());
            }
            if (!std::isfinite(t)) throw ParseError(line_no_, "timestamp is not finite");
            if (!fix.valid()) throw ParseError(line_no_, "record coordinate out of range");
            if (last_t_ && !(t > *last_t_)) {
                throw OutOfOrderTimestamp(path_.string() + " line " + std::to_string(line_no_) + ": t=" +
                                          std::to_string(t) + " does not follow t=" + std::to_string(*last_t_));
            }
            last_t_ = t;
            const std::size_t record = record_++;
            if (record % downsample_ != 0) continue;
            return Sample{read_pnm(frame_root_ / frame_file, t), fix, t};
        }
        return std::nullopt;
    }

private:
    bool next_line(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    }

    nlohmann::json parse(const std::string& line) const {
        try {
            auto j = nlohmann::json::parse(line);
            if (!j.is_object()) throw ParseError(line_no_, "expected a JSON object");
            return j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no_, e.what());
        }
    }

    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t downsample_;
    FlightLogHeader header_;
    std::filesystem::path frame_root_;
    std::size_t line_no_ = 0;
    std::size_t record_ = 0;
    std::optional<double> last_t_;
};

/// Reads a whole log into memory.
inline std::vector<Sample> read_log(const std::filesystem::path& path, std::size_t downsample = 1) {
    LogReader reader(path, downsample);
    std::vector<Sample> out;
    while (auto s = reader.next()) out.push_back(std::move(*s));
    return out;
}

}  // namespace visas
