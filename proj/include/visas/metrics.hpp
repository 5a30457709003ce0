#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/geo.hpp"
#include "visas/imaging.hpp"

namespace visas {

struct RegressionMetrics {
    double rmse = 0.0;
    double r2 = 0.0;
    double mae = 0.0;
};

/// RMSE, R^2 and MAE of `predicted` against `observed`.
inline RegressionMetrics regression_metrics(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size() || observed.empty()) {
        throw DimensionMismatch("regression_metrics: need equal nonempty inputs, got " +
                                std::to_string(observed.size()) + " and " + std::to_string(predicted.size()));
    }
    const auto n = static_cast<double>(observed.size());
    double mean = 0.0;
    for (double y : observed) mean += y;
    mean /= n;
    double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = observed[i] - predicted[i];
        ss_res += e * e;
        abs_sum += std::abs(e);
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
    }
    if (ss_tot == 0.0) throw ZeroVariance("regression_metrics: observed values are constant, r2 undefined");
    return {std::sqrt(ss_res / n), 1.0 - ss_res / ss_tot, abs_sum / n};
}

/// Prediction-error summary of one window size over benign flights.
struct SweepResult {
    int window_size = 0;
    double avg_prediction_error = std::numeric_limits<double>::quiet_NaN();  // meters
    double max_prediction_error = std::numeric_limits<double>::quiet_NaN();  // meters
    std::map<double, double> fpr_by_threshold;
    std::size_t verified = 0;
    std::size_t windows = 0;

    [[nodiscard]] bool has_errors() const noexcept { return windows > 0; }
};

namespace detail {

inline SweepResult sweep_one(std::span<const std::vector<Sample>> flights, int n, const WindowConfig& base,
                             std::span<const double> thresholds) {
    WindowConfig cfg = base;
    cfg.n = n;
    SweepResult r;
    r.window_size = n;
    std::vector<double> errors;
    std::vector<Verdict> checked;
    double sum_avg = 0.0, sum_max = 0.0;
    for (const auto& flight : flights) {
        // Group verified errors by the model (anchor) that produced them.
        std::map<std::size_t, std::vector<double>> per_window;
        for (const Verdict& v : run_stream(flight, cfg)) {
            if (!v.verified()) continue;
            per_window[v.anchor_index].push_back(std::abs(v.error));
            checked.push_back(v);
        }
        for (const auto& [anchor, errs] : per_window) {
            double s = 0.0, m = 0.0;
            for (double e : errs) {
                s += e;
                m = std::max(m, e);
            }
            sum_avg += s / static_cast<double>(errs.size());
            sum_max += m;
            ++r.windows;
        }
    }
    r.verified = checked.size();
    if (r.windows > 0) {
        r.avg_prediction_error = sum_avg / static_cast<double>(r.windows);
        r.max_prediction_error = sum_max / static_cast<double>(r.windows);
    }
    for (double th : thresholds) {
        WindowConfig at = cfg;
        at.alert_threshold = th;
        std::size_t flagged = 0;
        for (const Verdict& v : checked) flagged += exceeds_threshold(v.predicted_distance, v.reported_distance, at);
        r.fpr_by_threshold[th] = checked.empty() ? 0.0 : static_cast<double>(flagged) / static_cast<double>(checked.size());
    }
    return r;
}

}  // namespace detail

/// Runs the detector at every window size over benign flights.
///
/// Errors are taken per model: each model's verification errors give one
/// average and one maximum, and the reported figures are the means of those
/// over all models. FPR at a threshold is flagged / verified samples. Sizes are
/// evaluated concurrently; results come back in the order of `sizes`.
inline std::vector<SweepResult> window_sweep(std::span<const std::vector<Sample>> flights, std::span<const int> sizes,
                                             const WindowConfig& base, std::span<const double> thresholds) {
    if (sizes.empty()) throw ConfigError("window_sweep: no window sizes given");
    for (int n : sizes) {
        WindowConfig probe = base;
        probe.n = n;
        probe.validate();
    }
    const int largest = *std::max_element(sizes.begin(), sizes.end());
    const std::size_t need = 1 + static_cast<std::size_t>(largest) + static_cast<std::size_t>(base.q);
    for (const auto& flight : flights) {
        if (flight.size() < need) throw StreamTooShort(flight.size(), need);
    }
    if (flights.empty()) throw StreamTooShort(0, need);

    std::vector<double> ths(thresholds.begin(), thresholds.end());
    std::vector<std::future<SweepResult>> jobs;
    jobs.reserve(sizes.size());
    for (int n : sizes) {
        jobs.push_back(std::async(std::launch::async, [flights, n, base, &ths] {
            return detail::sweep_one(flights, n, base, ths);
        }));
    }
    std::vector<SweepResult> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

inline std::vector<SweepResult> window_sweep(std::span<const Sample> samples, std::span<const int> sizes,
                                             const WindowConfig& base, std::span<const double> thresholds) {
    const std::vector<std::vector<Sample>> one{std::vector<Sample>(samples.begin(), samples.end())};
    return window_sweep(std::span<const std::vector<Sample>>(one), sizes, base, thresholds);
}

/// e(alpha) = alpha * avg + (1 - alpha) * max.
inline double window_cost(const SweepResult& r, double alpha) noexcept {
    return alpha * r.avg_prediction_error + (1.0 - alpha) * r.max_prediction_error;
}

/// Window size minimising e(alpha); ties go to the smaller window.
inline int optimal_window(std::span<const SweepResult> results, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
    const SweepResult* best = nullptr;
    double best_cost = 0.0;
    for (const auto& r : results) {
        if (!r.has_errors()) continue;
        const double c = window_cost(r, alpha);
        if (!best || c < best_cost || (c == best_cost && r.window_size < best->window_size)) {
            best = &r;
            best_cost = c;
        }
    }
    if (!best) throw ConfigError("optimal_window: no window size produced any verified sample");
    return best->window_size;
}

/// Smallest swept threshold whose FPR does not exceed `target_fpr`.
inline std::optional<double> select_threshold(const SweepResult& r, double target_fpr) {
    for (const auto& [th, fpr] : r.fpr_by_threshold) {
        if (fpr <= target_fpr) return th;
    }
    return std::nullopt;
}

struct DetectionStats {
    bool detected = false;
    std::optional<std::size_t> delay;   // samples from attack start to first flag
    double fpr_pre_attack = 0.0;
};

inline DetectionStats detection_stats(std::span<const Verdict> verdicts, std::size_t attack_start) {
    DetectionStats s;
    std::size_t verified = 0, flagged = 0;
    for (const Verdict& v : verdicts) {
        if (v.sample_index < attack_start) {
            if (v.verified()) {
                ++verified;
                flagged += v.flagged;
            }
        } else if (v.flagged && !s.detected) {
            s.detected = true;
            s.delay = v.sample_index - attack_start;
        }
    }
    if (verified > 0) s.fpr_pre_attack = static_cast<double>(flagged) / static_cast<double>(verified);
    return s;
}

/// First-frame fit of a flight: distance on similarity against sample 0 for
/// every sample until the anchor leaves scope.
struct ScopeFit {
    std::optional<CorrelationModel> model;
    double in_scope_range = 0.0;    // meters from the anchor to the last in-scope fix
    std::size_t in_scope = 0;       // samples used by the fit
    std::vector<double> corr;
    std::vector<double> dist;

    /// R^2 of the fit; a flight that never yields a model scores 0.
    [[nodiscard]] double r2() const noexcept { return model ? model->r2 : 0.0; }
};

/// A sample is in scope while its similarity to the anchor stays at or above
/// `min_correlation`; the first sample below it ends the fit.
inline ScopeFit scope_fit(std::span<const Sample> flight, double min_correlation) {
    ScopeFit out;
    if (flight.empty()) return out;
    const Sample& anchor = flight.front();
    for (std::size_t i = 1; i < flight.size(); ++i) {
        double c = 0.0;
        try {
            c = similarity(anchor.frame, flight[i].frame);
        } catch (const ZeroVariance&) {
            break;
        }
        if (c < min_correlation) break;
        out.corr.push_back(c);
        out.dist.push_back(haversine_distance(anchor.location, flight[i].location));
    }
    out.in_scope = out.corr.size();
    if (!out.dist.empty()) out.in_scope_range = *std::max_element(out.dist.begin(), out.dist.end());
    if (out.in_scope >= 2) {
        try {
            out.model = fit_points(out.corr, out.dist, 0);
        } catch (const DegenerateWindow&) {
        }
    }
    return out;
}

}  // namespace visas
