#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "visas/error.hpp"

namespace visas {

/// Side length every frame is normalized to before comparison.
inline constexpr int kCompareSize = 256;
inline constexpr int kMinFrameSide = 16;

/// Row-major 8-bit grayscale image with its capture time.
class Frame {
public:
    Frame() = default;

    Frame(int width, int height, std::vector<std::uint8_t> pixels, double timestamp = 0.0)
        : width_(width), height_(height), pixels_(std::move(pixels)), timestamp_(timestamp) {
        if (width_ < kMinFrameSide || height_ < kMinFrameSide) {
            throw DimensionMismatch("frame must be at least 16x16, got " + std::to_string(width_) +
                                    "x" + std::to_string(height_));
        }
        if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
            throw MalformedBuffer("frame buffer holds " + std::to_string(pixels_.size()) +
                                  " pixels, expected " + std::to_string(width_ * height_));
        }
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] double timestamp() const noexcept { return timestamp_; }
    void set_timestamp(double t) noexcept { timestamp_ = t; }

    [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::uint8_t at(int row, int col) const noexcept {
        return pixels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                       static_cast<std::size_t>(col)];
    }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    /// True when every pixel holds the same intensity.
    [[nodiscard]] bool is_constant() const noexcept {
        return std::adjacent_find(pixels_.begin(), pixels_.end(), std::not_equal_to<>()) ==
               pixels_.end();
    }

    /// Pixel data and size only; the timestamp is metadata.
    [[nodiscard]] bool same_image(const Frame& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && pixels_ == other.pixels_;
    }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
    double timestamp_ = 0.0;
};

/// Zero-mean normalized cross-correlation scaled to [-100, 100].
///
/// Throws DimensionMismatch for differently sized frames and ZeroVariance when
/// either frame is constant.
inline double similarity(const Frame& a, const Frame& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionMismatch("similarity: " + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                "x" + std::to_string(b.height()));
    }
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    const std::size_t n = pa.size();
    if (n == 0) throw ZeroVariance("similarity: empty frame");

    // Integer sums are exact for 8-bit frames up to 2^32 pixels.
    std::uint64_t sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t x = pa[i];
        const std::uint64_t y = pb[i];
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    // n*Sxx - Sx^2 etc. computed in integers where they fit, to avoid cancellation.
    const auto centered = [n](std::uint64_t sxy, std::uint64_t sx, std::uint64_t sy) {
        __extension__ using wide = __int128;
        const wide v = static_cast<wide>(n) * sxy - static_cast<wide>(sx) * sy;
        return static_cast<double>(v);
    };
    const double vaa = centered(saa, sa, sa);
    const double vbb = centered(sbb, sb, sb);
    const double vab = centered(sab, sa, sb);
    if (vaa <= 0.0 || vbb <= 0.0) {
        throw ZeroVariance("similarity: constant frame has no correlation");
    }
    const double r = vab / std::sqrt(vaa * vbb);
    return 100.0 * std::clamp(r, -1.0, 1.0);
}

/// Multiplicative light reduction: round(p * light_fraction), fraction in (0, 1].
inline Frame darken(const Frame& f, double light_fraction) {
    if (!(light_fraction > 0.0 && light_fraction <= 1.0)) {
        throw InvalidFraction("light fraction must be in (0, 1], got " +
                              std::to_string(light_fraction));
    }
    if (light_fraction == 1.0) return f;
    std::vector<std::uint8_t> out(f.pixels().size());
    std::transform(f.pixels().begin(), f.pixels().end(), out.begin(), [&](std::uint8_t p) {
        const double v = std::round(static_cast<double>(p) * light_fraction);
        return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    });
    return Frame(f.width(), f.height(), std::move(out), f.timestamp());
}

/// Rec. 601 luma of an interleaved RGB buffer.
inline Frame to_grayscale(std::span<const std::uint8_t> rgb, int width, int height,
                          double timestamp = 0.0) {
    if (width <= 0 || height <= 0 ||
        rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        throw MalformedBuffer("RGB buffer of " + std::to_string(rgb.size()) + " bytes does not match " +
                              std::to_string(width) + "x" + std::to_string(height) + "x3");
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
        out[i] = static_cast<std::uint8_t>(std::clamp(std::round(y), 0.0, 255.0));
    }
    return Frame(width, height, std::move(out), timestamp);
}

/// Area-averaging resample to width x height. Each output pixel is the
/// coverage-weighted mean of the input pixels under it.
inline Frame downscale_area(const Frame& f, int width, int height) {
    if (width == f.width() && height == f.height()) return f;
    const double sx = static_cast<double>(f.width()) / width;
    const double sy = static_cast<double>(f.height()) / height;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) {
        const double y0 = r * sy, y1 = (r + 1) * sy;
        for (int c = 0; c < width; ++c) {
            const double x0 = c * sx, x1 = (c + 1) * sx;
            double acc = 0.0, wsum = 0.0;
            for (int yy = static_cast<int>(y0); yy < std::min(f.height(), static_cast<int>(std::ceil(y1))); ++yy) {
                const double wy = std::min<double>(yy + 1, y1) - std::max<double>(yy, y0);
                if (wy <= 0.0) continue;
                for (int xx = static_cast<int>(x0); xx < std::min(f.width(), static_cast<int>(std::ceil(x1))); ++xx) {
                    const double wx = std::min<double>(xx + 1, x1) - std::max<double>(xx, x0);
                    if (wx <= 0.0) continue;
                    acc += wx * wy * f.at(yy, xx);
                    wsum += wx * wy;
                }
            }
            out[static_cast<std::size_t>(r) * width + c] =
                static_cast<std::uint8_t>(std::clamp(std::round(acc / wsum), 0.0, 255.0));
        }
    }
    return Frame(width, height, std::move(out), f.timestamp());
}

/// Frames larger than the comparison size are area-averaged down to it.
inline Frame normalize_for_comparison(const Frame& f) {
    if (f.width() > kCompareSize || f.height() > kCompareSize) {
        return downscale_area(f, kCompareSize, kCompareSize);
    }
    return f;
}

}  // namespace visas
