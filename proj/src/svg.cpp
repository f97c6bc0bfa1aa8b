#include "srl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "srl/common.hpp"
#include "srl/io_util.hpp"

namespace srl::svg {

namespace {

constexpr const char* kPalette[] = {"#4878cf", "#ee854a", "#6acc64", "#d65f5f",
                                    "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
constexpr int kPaletteSize = 8;
constexpr const char* kFont = "font-family=\"sans-serif\"";

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Smallest of 1/2/5 x 10^k at or above `raw` -- keeps tick values readable.
double nice_step(double raw) {
    if (!(raw > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& y_label, const std::vector<BarGroup>& groups) {
    if (groups.empty()) throw ConfigError("bar chart needs at least one group");
    size_t max_bars = 0;
    double top = 0.0;
    std::vector<std::string> series;
    for (const BarGroup& g : groups) {
        if (g.bars.empty()) throw ConfigError("bar group '" + g.label + "' has no bars");
        max_bars = std::max(max_bars, g.bars.size());
        for (const Bar& b : g.bars) {
            top = std::max(top, b.mean + b.stddev);
            if (std::find(series.begin(), series.end(), b.series) == series.end())
                series.push_back(b.series);
        }
    }
    const bool legend = series.size() > 1;

    const double width = 840.0, height = 520.0;
    const double x0 = 80.0, y0 = 56.0;
    const double plot_w = width - x0 - 30.0;
    const double plot_h = height - y0 - (legend ? 110.0 : 80.0);

    const int ticks = 5;
    const double step = nice_step(top / ticks);
    const double y_max = step * ticks;
    const auto ypos = [&](double v) { return y0 + plot_h * (1.0 - v / y_max); };

    io::atomic_write_file(path, [&](std::ostream& os) {
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
           << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
        os << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" " << kFont
           << " font-size=\"18\">" << escape(title) << "</text>\n";
        os << "<text x=\"20\" y=\"" << y0 + plot_h / 2 << "\" text-anchor=\"middle\" " << kFont
           << " font-size=\"13\" transform=\"rotate(-90 20 " << y0 + plot_h / 2 << ")\">"
           << escape(y_label) << "</text>\n";

        for (int t = 0; t <= ticks; ++t) {
            const double v = step * t;
            const double y = ypos(v);
            os << "<line x1=\"" << x0 << "\" y1=\"" << num(y) << "\" x2=\"" << x0 + plot_w
               << "\" y2=\"" << num(y) << "\" stroke=\"" << (t == 0 ? "#404040" : "#dddddd")
               << "\" stroke-width=\"1\"/>\n";
            os << "<text x=\"" << x0 - 8 << "\" y=\"" << num(y + 4)
               << "\" text-anchor=\"end\" " << kFont << " font-size=\"12\">" << num(v)
               << "</text>\n";
        }

        const double group_w = plot_w / groups.size();
        const double slot_w = group_w / (static_cast<double>(max_bars) + 1.0);
        for (size_t g = 0; g < groups.size(); ++g) {
            const BarGroup& grp = groups[g];
            const double gx = x0 + group_w * g;
            const double inset = (group_w - slot_w * grp.bars.size()) / 2.0;
            for (size_t b = 0; b < grp.bars.size(); ++b) {
                const Bar& bar = grp.bars[b];
                const size_t color_idx = std::find(series.begin(), series.end(), bar.series) -
                                         series.begin();
                const char* color = kPalette[color_idx % kPaletteSize];
                const double bx = gx + inset + slot_w * b + slot_w * 0.1;
                const double bw = slot_w * 0.8;
                const double by = ypos(std::min(bar.mean, y_max));
                os << "<rect x=\"" << num(bx) << "\" y=\"" << num(by) << "\" width=\"" << num(bw)
                   << "\" height=\"" << num(y0 + plot_h - by) << "\" fill=\"" << color
                   << "\"/>\n";
                if (bar.stddev > 0.0) {
                    const double cx = bx + bw / 2.0;
                    const double lo = ypos(std::max(0.0, bar.mean - bar.stddev));
                    const double hi = ypos(std::min(y_max, bar.mean + bar.stddev));
                    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(lo) << "\" x2=\""
                       << num(cx) << "\" y2=\"" << num(hi)
                       << "\" stroke=\"#303030\" stroke-width=\"1.5\"/>\n";
                    for (double y : {lo, hi})
                        os << "<line x1=\"" << num(cx - 4) << "\" y1=\"" << num(y) << "\" x2=\""
                           << num(cx + 4) << "\" y2=\"" << num(y)
                           << "\" stroke=\"#303030\" stroke-width=\"1.5\"/>\n";
                }
            }
            os << "<text x=\"" << num(gx + group_w / 2) << "\" y=\"" << num(y0 + plot_h + 18)
               << "\" text-anchor=\"middle\" " << kFont << " font-size=\"12\">"
               << escape(grp.label) << "</text>\n";
        }

        if (legend) {
            const double ly = y0 + plot_h + 46;
            double lx = x0;
            for (size_t s = 0; s < series.size(); ++s) {
                os << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 10)
                   << "\" width=\"14\" height=\"14\" fill=\"" << kPalette[s % kPaletteSize]
                   << "\"/>\n";
                os << "<text x=\"" << num(lx + 20) << "\" y=\"" << num(ly + 2) << "\" " << kFont
                   << " font-size=\"12\">" << escape(series[s]) << "</text>\n";
                lx += 26.0 + 8.0 * series[s].size();
            }
        }
        os << "</svg>\n";
    });
}

void write_heatmap(const std::filesystem::path& path, const std::string& title,
                   const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels,
                   const std::vector<std::vector<double>>& cells) {
    const size_t rows = cells.size();
    if (rows == 0 || rows != row_labels.size())
        throw ConfigError("heatmap needs one label per row");
    const size_t cols = col_labels.size();
    double v_max = 0.0;
    for (const auto& row : cells) {
        if (row.size() != cols) throw ConfigError("heatmap rows must match the column labels");
        for (double v : row)
            if (std::isfinite(v)) v_max = std::max(v_max, v);
    }
    if (v_max <= 0.0) v_max = 1.0;

    const double label_w = 180.0, cell = std::max(34.0, 520.0 / static_cast<double>(cols));
    const double x0 = label_w, y0 = 70.0;
    const double width = x0 + cell * cols + 30.0;
    const double height = y0 + cell * rows + 60.0;

    // White at 0 to a deep red at the maximum.
    const auto shade = [&](double v) {
        const double t = std::clamp(v / v_max, 0.0, 1.0);
        const int r = static_cast<int>(std::lround(255.0 + (178.0 - 255.0) * t));
        const int g = static_cast<int>(std::lround(250.0 + (24.0 - 250.0) * t));
        const int b = static_cast<int>(std::lround(250.0 + (43.0 - 250.0) * t));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };

    io::atomic_write_file(path, [&](std::ostream& os) {
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
           << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
        os << "<text x=\"" << width / 2 << "\" y=\"26\" text-anchor=\"middle\" " << kFont
           << " font-size=\"17\">" << escape(title) << "</text>\n";
        for (size_t c = 0; c < cols; ++c)
            os << "<text x=\"" << num(x0 + cell * c + cell / 2) << "\" y=\"" << num(y0 - 10)
               << "\" text-anchor=\"middle\" " << kFont << " font-size=\"11\">"
               << escape(col_labels[c]) << "</text>\n";
        for (size_t r = 0; r < rows; ++r) {
            os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(y0 + cell * r + cell / 2 + 4)
               << "\" text-anchor=\"end\" " << kFont << " font-size=\"11\">"
               << escape(row_labels[r]) << "</text>\n";
            for (size_t c = 0; c < cols; ++c) {
                const double v = cells[r][c];
                const bool missing = !std::isfinite(v);
                os << "<rect x=\"" << num(x0 + cell * c) << "\" y=\"" << num(y0 + cell * r)
                   << "\" width=\"" << num(cell) << "\" height=\"" << num(cell) << "\" fill=\""
                   << (missing ? std::string("#eeeeee") : shade(v))
                   << "\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
                const std::string text = missing ? "-" : num(v);
                const char* fill = (!missing && v / v_max > 0.6) ? "#ffffff" : "#303030";
                os << "<text x=\"" << num(x0 + cell * c + cell / 2) << "\" y=\""
                   << num(y0 + cell * r + cell / 2 + 4) << "\" text-anchor=\"middle\" " << kFont
                   << " font-size=\"10\" fill=\"" << fill << "\">" << text << "</text>\n";
            }
        }
        os << "<text x=\"" << num(x0) << "\" y=\"" << num(y0 + cell * rows + 28) << "\" " << kFont
           << " font-size=\"11\">0 = white, " << num(v_max) << " = dark red; '-' = not measured"
           << "</text>\n";
        os << "</svg>\n";
    });
}

}  // namespace srl::svg
