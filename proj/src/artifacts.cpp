#include "tvogp/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tvogp {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

std::string svg_line_chart(const std::vector<LineSeries>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label, int width,
                           int height) {
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series) {
        for (double v : s.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (!(x_min < x_max)) x_max = x_min + 1.0;
    if (!(y_min < y_max)) y_max = y_min + 1.0;

    const double ml = 70, mr = 20, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    // axis labels and extremes
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    svg << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
        << mt + ph / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
    svg << "<text x=\"" << ml << "\" y=\"" << height - 32
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(x_min) << "</text>\n";
    svg << "<text x=\"" << ml + pw << "\" y=\"" << height - 32
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(x_max) << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << mt + ph
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(y_min) << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(y_max) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = kPalette[i % 8];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t j = 0; j < s.x.size() && j < s.y.size(); ++j) {
            if (j) svg << ' ';
            svg << fmt(px(s.x[j])) << ',' << fmt(py(s.y[j]));
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << ml + pw - 6 << "\" y=\"" << mt + 16 + 14 * static_cast<double>(i)
            << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">" << s.label
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tvogp
