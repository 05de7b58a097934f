#pragma once

#include "delaymarket/common.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

namespace delaymarket {

// Minimal static SVG charts. The CSVs are the source of truth; these files
// are regenerated from them by the report step.

struct SvgSeries {
    std::string name;
    std::string color; // e.g. "#1f77b4"
    std::vector<std::pair<double, double>> points;
    std::vector<double> band_halfwidth; // optional, same length as points
};

namespace svg_detail {

constexpr double kWidth = 900, kHeight = 540;
constexpr double kLeft = 80, kRight = 40, kTop = 50, kBottom = 70;

inline std::string num(double v) { return fmt_double(v); }

inline void open_svg(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"28\" font-size=\"18\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\">" << title << "</text>\n";
}

inline void axes(std::ofstream& out, double xmin, double xmax, double ymin, double ymax,
                 const std::string& xlabel, const std::string& ylabel) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double px = x0 + (x1 - x0) * i / 4.0;
        out << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y0 + 5
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px << "\" y=\"" << y0 + 22
            << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" << num(fx)
            << "</text>\n";
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double py = y0 + (y1 - y0) * i / 4.0;
        out << "<line x1=\"" << x0 - 5 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
            << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << num(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18
        << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">" << xlabel
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << (y0 + y1) / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 20 "
        << (y0 + y1) / 2 << ")\">" << ylabel << "</text>\n";
}

} // namespace svg_detail

inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& xlabel, const std::string& ylabel,
                             const std::vector<SvgSeries>& series) {
    using namespace svg_detail;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write svg: " + path);

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const SvgSeries& s : series) {
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            const double bw = i < s.band_halfwidth.size() ? s.band_halfwidth[i] : 0.0;
            const auto [x, y] = s.points[i];
            if (first) {
                xmin = xmax = x;
                ymin = y - bw;
                ymax = y + bw;
                first = false;
            } else {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y - bw);
                ymax = std::max(ymax, y + bw);
            }
        }
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 1.0;
        ymax += 1.0;
    }

    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
    auto py = [&](double y) { return y0 + (y - ymin) / (ymax - ymin) * (y1 - y0); };

    open_svg(out, title);
    axes(out, xmin, xmax, ymin, ymax, xlabel, ylabel);

    for (const SvgSeries& s : series) {
        if (!s.band_halfwidth.empty() && s.points.size() > 1) {
            std::string poly;
            for (std::size_t i = 0; i < s.points.size(); ++i)
                poly += num(px(s.points[i].first)) + "," +
                        num(py(s.points[i].second + s.band_halfwidth[i])) + " ";
            for (std::size_t i = s.points.size(); i-- > 0;)
                poly += num(px(s.points[i].first)) + "," +
                        num(py(s.points[i].second - s.band_halfwidth[i])) + " ";
            out << "<polygon points=\"" << poly << "\" fill=\"" << s.color
                << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        }
        if (s.points.size() > 1) {
            std::string line;
            for (const auto& [x, y] : s.points) line += num(px(x)) + "," + num(py(y)) + " ";
            out << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"2\"/>\n";
        }
        for (const auto& [x, y] : s.points)
            out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
                << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
    }

    double ly = kTop + 8;
    for (const SvgSeries& s : series) {
        out << "<rect x=\"" << x1 - 150 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\""
            << s.color << "\"/>\n";
        out << "<text x=\"" << x1 - 132 << "\" y=\"" << ly + 2
            << "\" font-size=\"13\" font-family=\"sans-serif\">" << s.name << "</text>\n";
        ly += 20;
    }
    out << "</svg>\n";
}

inline void write_bar_chart(const std::string& path, const std::string& title,
                            const std::string& ylabel, const std::vector<std::string>& labels,
                            const std::vector<double>& values,
                            const std::vector<bool>& highlight) {
    using namespace svg_detail;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write svg: " + path);
    double vmax = 1e-12;
    for (double v : values) vmax = std::max(vmax, v);

    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    const std::size_t n = values.size();
    const double slot = (x1 - x0) / std::max<std::size_t>(1, n);

    open_svg(out, title);
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fy = vmax * i / 4.0;
        const double py = y0 + (y1 - y0) * i / 4.0;
        out << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
            << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << num(fy)
            << "</text>\n";
    }
    out << "<text x=\"20\" y=\"" << (y0 + y1) / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 20 "
        << (y0 + y1) / 2 << ")\">" << ylabel << "</text>\n";

    for (std::size_t i = 0; i < n; ++i) {
        const double h = values[i] / vmax * (y0 - y1);
        const double bx = x0 + slot * static_cast<double>(i) + slot * 0.15;
        const std::string color = i < highlight.size() && highlight[i] ? "#808000" : "#1f77b4";
        out << "<rect x=\"" << num(bx) << "\" y=\"" << num(y0 - h) << "\" width=\"" << num(slot * 0.7)
            << "\" height=\"" << num(h) << "\" fill=\"" << color << "\"/>\n";
        const double tx = bx + slot * 0.35;
        out << "<text x=\"" << num(tx) << "\" y=\"" << y0 + 14
            << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\" transform=\"rotate(-35 "
            << num(tx) << " " << y0 + 14 << ")\">" << labels[i] << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace delaymarket
