#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visas/error.hpp"
#include "visas/geo.hpp"
#include "visas/imaging.hpp"

namespace visas {

/// One frame paired with the GPS fix reported at the same instant.
struct Sample {
    Frame frame;
    GeoPoint location;
    double t = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// How detection windows are laid over the stream.
///
/// Staggered launches a new anchor every q samples so the verification
/// horizons of successive models tile the stream: every sample after warm-up
/// is checked by a model fitted purely on earlier samples. Sequential runs one
/// anchor -> n -> q cycle at a time and re-anchors on the last verified sample.
enum class Schedule { Staggered, Sequential };

struct WindowConfig {
    int n = 4;                       // samples after the anchor used for the fit
    int q = 3;                       // samples verified against the fit
    double alert_threshold = 6.0;    // meters
    double min_correlation = 10.0;   // percent; below this the anchor is out of scope
    bool one_sided = false;          // flag only predicted - reported > threshold
    Schedule schedule = Schedule::Staggered;

    void validate() const {
        if (n < 2) throw ConfigError("window n must be >= 2, got " + std::to_string(n));
        if (q < 1) throw ConfigError("verification horizon q must be >= 1, got " + std::to_string(q));
        if (!(alert_threshold > 0.0)) {
            throw ConfigError("alert threshold must be > 0, got " + std::to_string(alert_threshold));
        }
        if (!std::isfinite(min_correlation) || min_correlation >= 100.0) {
            throw ConfigError("min correlation must be finite and below 100");
        }
    }
};

/// Linear map from similarity percent to meters, fitted against one anchor.
struct CorrelationModel {
    double slope = 0.0;       // meters per correlation percent
    double intercept = 0.0;   // meters
    double r2 = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t anchor_index = 0;
};

enum class Reason { Benign, SpoofSuspected, ModelReset, ZeroVarianceFrame };

inline std::string_view to_string(Reason r) noexcept {
    switch (r) {
        case Reason::Benign: return "Benign";
        case Reason::SpoofSuspected: return "SpoofSuspected";
        case Reason::ModelReset: return "ModelReset";
        case Reason::ZeroVarianceFrame: return "ZeroVarianceFrame";
    }
    return "Unknown";
}

/// Detector output for one sample. Distances are NaN when not computed.
struct Verdict {
    std::size_t sample_index = 0;
    double t = 0.0;
    double corr = std::numeric_limits<double>::quiet_NaN();
    double predicted_distance = std::numeric_limits<double>::quiet_NaN();
    double reported_distance = std::numeric_limits<double>::quiet_NaN();
    double error = std::numeric_limits<double>::quiet_NaN();  // predicted - reported
    bool flagged = false;
    Reason reason = Reason::Benign;
    std::size_t anchor_index = 0;  // anchor of the model that produced the verdict

    /// Benign or SpoofSuspected: the sample was actually checked against a model.
    [[nodiscard]] bool verified() const noexcept {
        return reason == Reason::Benign || reason == Reason::SpoofSuspected;
    }
};

/// Ordinary least squares of distance on correlation, with in-window fit statistics.
inline CorrelationModel fit_points(std::span<const double> corr, std::span<const double> dist,
                                   std::size_t anchor_index = 0) {
    if (corr.size() != dist.size()) {
        throw DimensionMismatch("fit_points: " + std::to_string(corr.size()) + " correlations vs " +
                                std::to_string(dist.size()) + " distances");
    }
    const std::size_t n = corr.size();
    if (n < 2) throw DegenerateWindow("fit needs at least two points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += corr[i];
        my += dist[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = corr[i] - mx;
        const double dy = dist[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw DegenerateWindow("all correlations in the window are equal");

    CorrelationModel m;
    m.anchor_index = anchor_index;
    m.slope = sxy / sxx;
    m.intercept = my - m.slope * mx;

    double ss_res = 0.0, abs_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = dist[i] - (m.slope * corr[i] + m.intercept);
        ss_res += r * r;
        abs_res += std::abs(r);
    }
    m.rmse = std::sqrt(ss_res / static_cast<double>(n));
    m.mae = abs_res / static_cast<double>(n);
    // Constant distances leave nothing to explain.
    m.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;
    return m;
}

/// Fits the model for `anchor` from the similarity and GPS distance of each
/// window sample to the anchor.
inline CorrelationModel fit_model(const Sample& anchor, std::span<const Sample> window,
                                  std::size_t anchor_index = 0) {
    std::vector<double> corr, dist;
    corr.reserve(window.size());
    dist.reserve(window.size());
    for (const auto& s : window) {
        corr.push_back(similarity(anchor.frame, s.frame));
        dist.push_back(haversine_distance(anchor.location, s.location));
    }
    return fit_points(corr, dist, anchor_index);
}

/// Distance implied by `corr`, never negative.
inline double predict(const CorrelationModel& m, double corr) noexcept {
    const double d = m.slope * corr + m.intercept;
    return d > 0.0 ? d : 0.0;
}

inline bool exceeds_threshold(double predicted, double reported, const WindowConfig& cfg) noexcept {
    const double err = predicted - reported;
    return cfg.one_sided ? err > cfg.alert_threshold : std::abs(err) > cfg.alert_threshold;
}

/// Checks one incoming sample against a fitted model.
inline Verdict judge(const CorrelationModel& m, const Sample& anchor, const Sample& incoming,
                     const WindowConfig& cfg, std::size_t sample_index = 0) {
    Verdict v;
    v.sample_index = sample_index;
    v.t = incoming.t;
    v.anchor_index = m.anchor_index;
    v.reported_distance = haversine_distance(anchor.location, incoming.location);
    try {
        v.corr = similarity(anchor.frame, incoming.frame);
    } catch (const ZeroVariance&) {
        v.reason = Reason::ZeroVarianceFrame;
        return v;
    }
    v.predicted_distance = predict(m, v.corr);
    v.error = v.predicted_distance - v.reported_distance;
    v.flagged = exceeds_threshold(v.predicted_distance, v.reported_distance, cfg);
    v.reason = v.flagged ? Reason::SpoofSuspected : Reason::Benign;
    return v;
}

/// Online detector for one drone session. Feed samples in time order; each
/// call returns the verdict for that sample, if one is due.
///
/// Collection-phase samples of the earliest models get no verdict. Zero-variance
/// frames are reported and otherwise skipped. When the current frame drops
/// below `min_correlation` against any live anchor, every model is discarded
/// and the current sample becomes the new anchor.
class StreamDetector {
public:
    explicit StreamDetector(WindowConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        interval_ = cfg_.schedule == Schedule::Staggered
                        ? static_cast<std::size_t>(cfg_.q)
                        : static_cast<std::size_t>(cfg_.n + cfg_.q);
    }

    [[nodiscard]] const WindowConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const std::vector<CorrelationModel>& models() const noexcept { return models_; }

    std::optional<Verdict> push(const Sample& s) {
        const std::size_t index = seen_++;
        if (last_t_ && !(s.t > *last_t_)) {
            throw OutOfOrderTimestamp("sample " + std::to_string(index) + " at t=" +
                                      std::to_string(s.t) + " does not follow t=" +
                                      std::to_string(*last_t_));
        }
        last_t_ = s.t;

        if (s.frame.is_constant()) {
            Verdict v;
            v.sample_index = index;
            v.t = s.t;
            v.reason = Reason::ZeroVarianceFrame;
            return v;
        }

        const std::size_t tick = tick_++;
        std::optional<Verdict> out;

        // Correlation and distance against every live anchor.
        struct Obs {
            double corr;
            double dist;
        };
        std::vector<Obs> obs;
        obs.reserve(live_.size());
        std::size_t weakest = 0;
        for (std::size_t i = 0; i < live_.size(); ++i) {
            const auto& p = live_[i];
            obs.push_back({similarity(p.anchor.frame, s.frame),
                           haversine_distance(p.anchor.location, s.location)});
            if (obs[i].corr < obs[weakest].corr) weakest = i;
        }

        if (!obs.empty() && obs[weakest].corr < cfg_.min_correlation) {
            Verdict v;
            v.sample_index = index;
            v.t = s.t;
            v.corr = obs[weakest].corr;
            v.reported_distance = obs[weakest].dist;
            v.anchor_index = live_[weakest].anchor_index;
            v.reason = Reason::ModelReset;
            live_.clear();
            launch(s, index, tick);
            return v;
        }

        for (std::size_t i = 0; i < live_.size(); ++i) {
            auto& p = live_[i];
            if (p.model) {
                if (p.verified < cfg_.q && !out) {
                    Verdict v;
                    v.sample_index = index;
                    v.t = s.t;
                    v.anchor_index = p.anchor_index;
                    v.corr = obs[i].corr;
                    v.reported_distance = obs[i].dist;
                    v.predicted_distance = predict(*p.model, v.corr);
                    v.error = v.predicted_distance - v.reported_distance;
                    v.flagged = exceeds_threshold(v.predicted_distance, v.reported_distance, cfg_);
                    v.reason = v.flagged ? Reason::SpoofSuspected : Reason::Benign;
                    out = v;
                }
                ++p.verified;
            } else {
                p.corr.push_back(obs[i].corr);
                p.dist.push_back(obs[i].dist);
                if (p.corr.size() == static_cast<std::size_t>(cfg_.n)) {
                    try {
                        p.model = fit_points(p.corr, p.dist, p.anchor_index);
                        models_.push_back(*p.model);
                    } catch (const DegenerateWindow&) {
                        p.dead = true;
                    }
                }
            }
        }
        std::erase_if(live_, [&](const Pipeline& p) { return p.dead || p.verified >= cfg_.q; });

        if (tick == next_launch_) launch(s, index, tick);
        return out;
    }

private:
    struct Pipeline {
        Sample anchor;
        std::size_t anchor_index = 0;
        std::vector<double> corr;
        std::vector<double> dist;
        std::optional<CorrelationModel> model;
        int verified = 0;
        bool dead = false;
    };

    void launch(const Sample& s, std::size_t index, std::size_t tick) {
        live_.push_back(Pipeline{s, index, {}, {}, std::nullopt, 0, false});
        next_launch_ = tick + interval_;
    }

    WindowConfig cfg_;
    std::size_t interval_ = 1;
    std::vector<Pipeline> live_;
    std::vector<CorrelationModel> models_;
    std::size_t seen_ = 0;
    std::size_t tick_ = 0;
    std::size_t next_launch_ = 0;
    std::optional<double> last_t_;
};

/// Runs a fresh detector over an ordered stream.
inline std::vector<Verdict> run_stream(std::span<const Sample> samples, const WindowConfig& cfg) {
    StreamDetector det(cfg);
    std::vector<Verdict> out;
    for (const auto& s : samples) {
        if (auto v = det.push(s)) out.push_back(*v);
    }
    return out;
}

}  // namespace visas
