#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "visas/error.hpp"

namespace visas {

/// Mean Earth radius used for every distance in the library, meters.
inline constexpr double kEarthRadiusM = 6'371'000.0;

inline constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// WGS-84 fix as reported by the receiver. `alt` is meters above ground.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    double alt = 0.0;

    [[nodiscard]] bool valid() const noexcept {
        return std::isfinite(lat) && std::isfinite(lon) && std::isfinite(alt) && lat >= -90.0 &&
               lat <= 90.0 && lon >= -180.0 && lon <= 180.0 && alt >= 0.0;
    }

    void validate() const {
        if (!valid()) {
            throw GeoError("invalid GeoPoint (lat " + std::to_string(lat) + ", lon " +
                           std::to_string(lon) + ", alt " + std::to_string(alt) + ")");
        }
    }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle surface distance in meters. Altitude is ignored.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1;
    const double dlambda = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    if (h > 1.0) h = 1.0;
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

/// Local equirectangular displacement of `origin` by (north, east) meters.
/// Valid for offsets well below 100 km; rejects origins within 0.1 deg of a pole.
inline GeoPoint offset_point(const GeoPoint& origin, double north_m, double east_m) {
    if (std::abs(origin.lat) > 89.9) {
        throw GeoError("offset_point: origin latitude " + std::to_string(origin.lat) +
                       " is too close to a pole");
    }
    GeoPoint out = origin;
    out.lat = origin.lat + rad2deg(north_m / kEarthRadiusM);
    out.lon = origin.lon + rad2deg(east_m / (kEarthRadiusM * std::cos(deg2rad(origin.lat))));
    if (out.lon > 180.0) out.lon -= 360.0;
    if (out.lon < -180.0) out.lon += 360.0;
    return out;
}

}  // namespace visas
