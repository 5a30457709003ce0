#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "visas/error.hpp"
#include "visas/imaging.hpp"

namespace visas {

namespace detail {

inline int read_pnm_int(std::istream& in, const std::string& path) {
    int c = in.peek();
    while (c != EOF) {
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else {
            break;
        }
        c = in.peek();
    }
    int v = -1;
    if (!(in >> v) || v < 0) throw IoError(path + ": malformed PNM header");
    return v;
}

}  // namespace detail

/// Loads a binary PGM (P5) directly or a binary PPM (P6) through to_grayscale.
inline Frame read_pnm(const std::filesystem::path& path, double timestamp = 0.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFrame(path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
        throw IoError(path.string() + ": not a binary PGM/PPM file");
    }
    const int w = detail::read_pnm_int(in, path.string());
    const int h = detail::read_pnm_int(in, path.string());
    const int maxval = detail::read_pnm_int(in, path.string());
    if (maxval != 255) throw IoError(path.string() + ": only maxval 255 is supported");
    in.get();  // single whitespace byte before the raster
    const std::size_t channels = magic[1] == '6' ? 3 : 1;
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw IoError(path.string() + ": truncated raster");
    }
    if (channels == 3) return to_grayscale(buf, w, h, timestamp);
    return Frame(w, h, std::move(buf), timestamp);
}

inline void write_pgm(const std::filesystem::path& path, const Frame& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << f.width() << ' ' << f.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.pixels().data()),
              static_cast<std::streamsize>(f.pixels().size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace visas
