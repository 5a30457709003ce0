#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/geo.hpp"

namespace visas {

enum class AttackKind { ConstantOffset, Drift, Freeze };

inline std::string_view to_string(AttackKind k) noexcept {
    switch (k) {
        case AttackKind::ConstantOffset: return "constant_offset";
        case AttackKind::Drift: return "drift";
        case AttackKind::Freeze: return "freeze";
    }
    return "unknown";
}

/// A spoofer that takes over the reported fix from `start_index` onward.
struct AttackSpec {
    AttackKind kind = AttackKind::ConstantOffset;
    std::size_t start_index = 1;
    double offset_north = 0.0;     // meters, ConstantOffset
    double offset_east = 0.0;
    double drift_rate = 0.0;       // meters per second, Drift
    double drift_heading = 0.0;    // degrees clockwise from north, Drift

    void validate() const {
        if (start_index < 1) throw ConfigError("attack start_index must be >= 1");
        switch (kind) {
            case AttackKind::ConstantOffset:
                if (!(std::hypot(offset_north, offset_east) > 0.0)) {
                    throw ConfigError("constant offset attack needs a nonzero offset");
                }
                break;
            case AttackKind::Drift:
                if (!(drift_rate > 0.0)) throw ConfigError("drift attack needs drift_rate > 0");
                if (!std::isfinite(drift_heading)) throw ConfigError("drift heading must be finite");
                break;
            case AttackKind::Freeze:
                break;
        }
    }
};

/// Returns a copy of `samples` whose fixes from `spec.start_index` on are
/// spoofed. Frames, timestamps and the prefix are left exactly as given.
inline std::vector<Sample> inject(std::span<const Sample> samples, const AttackSpec& spec) {
    spec.validate();
    if (spec.start_index >= samples.size()) {
        throw StartBeyondStream("attack start " + std::to_string(spec.start_index) + " is beyond a stream of " +
                                std::to_string(samples.size()) + " samples");
    }
    std::vector<Sample> out(samples.begin(), samples.end());
    const GeoPoint frozen = samples[spec.start_index - 1].location;
    const double t0 = samples[spec.start_index].t;
    const double h = deg2rad(spec.drift_heading);
    for (std::size_t i = spec.start_index; i < out.size(); ++i) {
        GeoPoint& fix = out[i].location;
        switch (spec.kind) {
            case AttackKind::ConstantOffset:
                fix = offset_point(fix, spec.offset_north, spec.offset_east);
                break;
            case AttackKind::Drift: {
                const double d = spec.drift_rate * (out[i].t - t0);
                fix = offset_point(fix, d * std::cos(h), d * std::sin(h));
                break;
            }
            case AttackKind::Freeze:
                fix = frozen;
                break;
        }
    }
    return out;
}

}  // namespace visas
