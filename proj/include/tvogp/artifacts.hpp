#ifndef TVOGP_ARTIFACTS_HPP
#define TVOGP_ARTIFACTS_HPP

#include <string>
#include <vector>

namespace tvogp {

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal static SVG line chart; deliberately timestamp-free so reruns
// are byte-identical.
std::string svg_line_chart(const std::vector<LineSeries>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           int width = 720, int height = 480);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace tvogp

#endif
