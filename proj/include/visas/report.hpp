#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/metrics.hpp"

namespace visas {

/// Fixed-precision decimal; NaN becomes an empty CSV cell.
inline std::string fmt(double v, int precision = 6) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

inline void write_verdicts_csv(std::ostream& out, std::span<const Verdict> verdicts) {
    out << "sample_index,t,corr,reported_m,predicted_m,error_m,flagged,reason,anchor_index\n";
    for (const Verdict& v : verdicts) {
        out << v.sample_index << ',' << fmt(v.t) << ',' << fmt(v.corr) << ',' << fmt(v.reported_distance) << ','
            << fmt(v.predicted_distance) << ',' << fmt(v.error) << ',' << (v.flagged ? 1 : 0) << ','
            << to_string(v.reason) << ',' << v.anchor_index << '\n';
    }
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepResult> results) {
    out << "window_size,avg_err_m,max_err_m";
    std::vector<double> thresholds;
    if (!results.empty()) {
        for (const auto& [th, fpr] : results.front().fpr_by_threshold) thresholds.push_back(th);
    }
    for (double th : thresholds) out << ",fpr_" << fmt(th, 3);
    out << '\n';
    for (const auto& r : results) {
        out << r.window_size << ',' << fmt(r.avg_prediction_error) << ',' << fmt(r.max_prediction_error);
        for (double th : thresholds) out << ',' << fmt(r.fpr_by_threshold.at(th));
        out << '\n';
    }
}

/// Writes `text` to `path` through a temporary file so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal static line chart with axes, ticks and a legend.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  std::span<const Series> series) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    y0 = std::min(y0, 0.0);
    if (y1 <= y0) y1 = y0 + 1;
    const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
        o << "<text x=\"" << fmt(px(xv), 1) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt(xv, 2)
          << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4, 1) << "\" text-anchor=\"end\">" << fmt(yv, 2)
          << "</text>\n";
        o << "<line x1=\"" << L << "\" y1=\"" << fmt(py(yv), 1) << "\" x2=\"" << W - R << "\" y2=\"" << fmt(py(yv), 1)
          << "\" stroke=\"#ddd\"/>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* c = colors[si % std::size(colors)];
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            o << fmt(px(s.x[i]), 1) << ',' << fmt(py(s.y[i]), 1) << ' ';
        }
        o << "\"/>\n";
        const double ly = T + 16.0 * static_cast<double>(si);
        o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
          << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Average and maximum error per window size (error-vs-window figure).
inline std::string svg_sweep_errors(std::span<const SweepResult> results) {
    Series avg{"average", {}, {}}, mx{"maximum", {}, {}};
    for (const auto& r : results) {
        avg.x.push_back(r.window_size);
        avg.y.push_back(r.avg_prediction_error);
        mx.x.push_back(r.window_size);
        mx.y.push_back(r.max_prediction_error);
    }
    const std::vector<Series> s{avg, mx};
    return svg_line_chart("Prediction error by window size", "window size (frames)", "error (m)", s);
}

/// FPR against threshold, one line per window size.
inline std::string svg_sweep_fpr(std::span<const SweepResult> results) {
    std::vector<Series> s;
    for (const auto& r : results) {
        Series line{"n=" + std::to_string(r.window_size), {}, {}};
        for (const auto& [th, fpr] : r.fpr_by_threshold) {
            line.x.push_back(th);
            line.y.push_back(fpr);
        }
        s.push_back(std::move(line));
    }
    return svg_line_chart("False positive rate by threshold", "threshold (m)", "FPR", s);
}

}  // namespace visas
