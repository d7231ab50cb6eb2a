#include "agrlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "agrlab/checkpoint.hpp"
#include "agrlab/errors.hpp"

namespace agrlab::svg {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 46, kBottom = 64;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

const char* kColors[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                         "#956cb4", "#8c613c", "#dc7ec0", "#797979"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void auto_range(const std::vector<Series>& series, double& y_min, double& y_max) {
    if (y_min != y_max) return;
    double lo = 0.0, hi = 1.0;
    bool any = false;
    for (const Series& s : series) {
        for (size_t i = 0; i < s.values.size(); ++i) {
            const double e = i < s.errors.size() ? s.errors[i] : 0.0;
            if (!any) {
                lo = s.values[i] - e;
                hi = s.values[i] + e;
                any = true;
            } else {
                lo = std::min(lo, s.values[i] - e);
                hi = std::max(hi, s.values[i] + e);
            }
        }
    }
    if (!any || hi == lo) hi = lo + 1.0;
    const double pad = 0.08 * (hi - lo);
    y_min = std::min(0.0, lo - pad);
    y_max = hi + pad;
}

double y_pixel(double v, double y_min, double y_max) {
    return kTop + (1.0 - (v - y_min) / (y_max - y_min)) * kPlotH;
}

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
}

void draw_axes(std::ostringstream& out, double y_min, double y_max) {
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + kPlotH << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << kLeft + kPlotW
        << "\" y2=\"" << kTop + kPlotH << "\" stroke=\"black\"/>\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double v = y_min + (y_max - y_min) * i / ticks;
        const double y = y_pixel(v, y_min, y_max);
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\""
            << y << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + kPlotW
            << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
            << "</text>\n";
    }
}

void draw_legend(std::ostringstream& out, const std::vector<Series>& series) {
    double x = kLeft + 8;
    const double y = kTop - 10;
    for (size_t s = 0; s < series.size(); ++s) {
        out << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
            << kColors[s % 8] << "\"/>\n";
        out << "<text x=\"" << x + 14 << "\" y=\"" << y
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(series[s].label)
            << "</text>\n";
        x += 18 + 7.0 * series[s].label.size() + 16;
    }
}

void draw_error_bar(std::ostringstream& out, double x, double v, double e, double y_min,
                    double y_max) {
    if (e <= 0.0) return;
    const double y1 = y_pixel(v - e, y_min, y_max);
    const double y2 = y_pixel(v + e, y_min, y_max);
    out << "<line x1=\"" << x << "\" y1=\"" << y1 << "\" x2=\"" << x << "\" y2=\"" << y2
        << "\" stroke=\"black\"/>\n";
    for (double y : {y1, y2}) {
        out << "<line x1=\"" << x - 3 << "\" y1=\"" << y << "\" x2=\"" << x + 3 << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
    }
}

}  // namespace

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, double y_min, double y_max) {
    auto_range(series, y_min, y_max);
    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, y_min, y_max);
    draw_legend(out, series);

    const size_t n_cat = categories.size();
    const size_t n_ser = std::max<size_t>(1, series.size());
    const double slot = kPlotW / std::max<size_t>(1, n_cat);
    const double bar = 0.8 * slot / n_ser;

    for (size_t c = 0; c < n_cat; ++c) {
        const double x0 = kLeft + c * slot + 0.1 * slot;
        out << "<text x=\"" << kLeft + c * slot + slot / 2 << "\" y=\"" << kTop + kPlotH + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << xml_escape(categories[c]) << "</text>\n";
        for (size_t s = 0; s < series.size(); ++s) {
            if (c >= series[s].values.size()) continue;
            const double v = series[s].values[c];
            const double x = x0 + s * bar;
            const double y = y_pixel(std::max(v, y_min), y_min, y_max);
            const double y_base = y_pixel(y_min, y_min, y_max);
            out << "<rect x=\"" << x << "\" y=\"" << std::min(y, y_base) << "\" width=\"" << bar - 2
                << "\" height=\"" << std::abs(y_base - y) << "\" fill=\"" << kColors[s % 8]
                << "\" data-series=\"" << xml_escape(series[s].label) << "\" data-category=\""
                << xml_escape(categories[c]) << "\" data-value=\"" << format_g17(v) << "\"/>\n";
            out << "<text x=\"" << x + (bar - 2) / 2 << "\" y=\"" << y - 4
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">"
                << fmt(v) << "</text>\n";
            const double e = c < series[s].errors.size() ? series[s].errors[c] : 0.0;
            draw_error_bar(out, x + (bar - 2) / 2, v, e, y_min, y_max);
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series, double y_min, double y_max,
                       const std::vector<RefLine>& ref_lines) {
    auto_range(series, y_min, y_max);
    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, y_min, y_max);
    draw_legend(out, series);

    for (const RefLine& ref : ref_lines) {
        const double y = y_pixel(ref.y, y_min, y_max);
        out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + kPlotW
            << "\" y2=\"" << y << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
        out << "<text x=\"" << kLeft + kPlotW - 4 << "\" y=\"" << y - 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << xml_escape(ref.label) << "</text>\n";
    }

    const size_t n = x_labels.size();
    const double step = n > 1 ? kPlotW / (n - 1) : 0.0;
    for (size_t i = 0; i < n; ++i) {
        out << "<text x=\"" << kLeft + i * step << "\" y=\"" << kTop + kPlotH + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << xml_escape(x_labels[i]) << "</text>\n";
    }
    for (size_t s = 0; s < series.size(); ++s) {
        out << "<polyline fill=\"none\" stroke=\"" << kColors[s % 8] << "\" stroke-width=\"2\" "
            << "points=\"";
        for (size_t i = 0; i < series[s].values.size() && i < n; ++i) {
            out << kLeft + i * step << ',' << y_pixel(series[s].values[i], y_min, y_max) << ' ';
        }
        out << "\"/>\n";
        for (size_t i = 0; i < series[s].values.size() && i < n; ++i) {
            const double v = series[s].values[i];
            out << "<circle cx=\"" << kLeft + i * step << "\" cy=\"" << y_pixel(v, y_min, y_max)
                << "\" r=\"3\" fill=\"" << kColors[s % 8] << "\" data-series=\""
                << xml_escape(series[s].label) << "\" data-x=\"" << xml_escape(x_labels[i])
                << "\" data-value=\"" << format_g17(v) << "\"/>\n";
            const double e = i < series[s].errors.size() ? series[s].errors[i] : 0.0;
            draw_error_bar(out, kLeft + i * step, v, e, y_min, y_max);
        }
    }
    out << "</svg>\n";
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("svg::write_file: cannot open '" + path + "'");
    f << content;
    if (!f.good()) throw DataError("svg::write_file: write to '" + path + "' failed");
}

}  // namespace agrlab::svg
