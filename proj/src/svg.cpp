#include "stochdiag/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stochdiag/errors.hpp"

namespace stochdiag::svg {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 25.0;
constexpr double kMarginTop = 45.0;
constexpr double kMarginBottom = 55.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0, px_lo = 0.0, px_hi = 1.0;
    double to_px(double v) const {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw_step = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (mag * m >= raw_step) {
            step = mag * m;
            break;
        }
    }
    std::vector<double> out;
    double t = std::ceil(lo / step) * step;
    for (; t <= hi + 1e-12 * span; t += step) {
        out.push_back(std::fabs(t) < 1e-12 * span ? 0.0 : t);
    }
    return out;
}

}  // namespace

std::string render_scatter(const ScatterSpec& spec) {
    double x_lo = spec.x_min, x_hi = spec.x_max;
    if (spec.x_auto) {
        x_lo = 0.0;
        x_hi = 1.0;
        if (!spec.points.empty()) {
            x_lo = x_hi = spec.points[0].x;
            for (const auto& p : spec.points) {
                x_lo = std::min(x_lo, p.x);
                x_hi = std::max(x_hi, p.x);
            }
            const double pad = (x_hi - x_lo) * 0.05 + 1e-9;
            x_lo -= pad;
            x_hi += pad;
        }
    }
    const Axis x_axis{x_lo, x_hi, kMarginLeft, kWidth - kMarginRight};
    const Axis y_axis{spec.y_min, spec.y_max, kHeight - kMarginBottom, kMarginTop};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
           "width=\"800\" height=\"600\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
    out << "<text x=\"400\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"18\">" << spec.title << "</text>\n";

    // Frame.
    out << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(kMarginTop)
        << "\" width=\"" << fmt(kWidth - kMarginLeft - kMarginRight) << "\" height=\""
        << fmt(kHeight - kMarginTop - kMarginBottom)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (double t : ticks(x_axis.lo, x_axis.hi)) {
        const double px = x_axis.to_px(t);
        out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kHeight - kMarginBottom)
            << "\" x2=\"" << fmt(px) << "\" y2=\"" << fmt(kHeight - kMarginBottom + 5)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kHeight - kMarginBottom + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_tick(t) << "</text>\n";
    }
    for (double t : ticks(y_axis.lo, y_axis.hi)) {
        const double py = y_axis.to_px(t);
        out << "<line x1=\"" << fmt(kMarginLeft - 5) << "\" y1=\"" << fmt(py)
            << "\" x2=\"" << fmt(kMarginLeft) << "\" y2=\"" << fmt(py)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(kMarginLeft - 9) << "\" y=\"" << fmt(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << fmt_tick(t) << "</text>\n";
    }
    out << "<text x=\"" << fmt(0.5 * (kMarginLeft + kWidth - kMarginRight)) << "\" y=\""
        << fmt(kHeight - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << spec.x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << fmt(0.5 * (kMarginTop + kHeight - kMarginBottom))
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 18 "
        << fmt(0.5 * (kMarginTop + kHeight - kMarginBottom)) << ")\">" << spec.y_label
        << "</text>\n";

    for (double guide : spec.h_guides) {
        if (guide < y_axis.lo || guide > y_axis.hi) continue;
        const double py = y_axis.to_px(guide);
        out << "<line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(py) << "\" x2=\""
            << fmt(kWidth - kMarginRight) << "\" y2=\"" << fmt(py)
            << "\" stroke=\"grey\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n";
    }
    if (spec.diagonal) {
        const double lo = std::max(x_axis.lo, y_axis.lo);
        const double hi = std::min(x_axis.hi, y_axis.hi);
        out << "<line x1=\"" << fmt(x_axis.to_px(lo)) << "\" y1=\"" << fmt(y_axis.to_px(lo))
            << "\" x2=\"" << fmt(x_axis.to_px(hi)) << "\" y2=\"" << fmt(y_axis.to_px(hi))
            << "\" stroke=\"grey\" stroke-width=\"1\"/>\n";
    }

    for (const auto& p : spec.points) {
        const double px = x_axis.to_px(p.x);
        const double py = y_axis.to_px(std::clamp(p.y, y_axis.lo, y_axis.hi));
        out << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py)
            << "\" r=\"4\" fill=\"steelblue\"/>\n";
        if (!p.annotation.empty()) {
            out << "<text x=\"" << fmt(px + 7) << "\" y=\"" << fmt(py - 6)
                << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"firebrick\">"
                << p.annotation << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

void write_svg(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open SVG file for writing: " + path);
    }
    out << content;
    if (!out) {
        throw DataError("failed while writing SVG file: " + path);
    }
}

}  // namespace stochdiag::svg
