#pragma once

#include <string>
#include <utility>
#include <vector>

namespace stochdiag::svg {

struct AnnotatedPoint {
    double x = 0.0;
    double y = 0.0;
    std::string annotation;  // drawn next to the point when nonempty
};

struct ScatterSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<AnnotatedPoint> points;
    std::vector<double> h_guides;       // horizontal guide lines (dashed)
    double y_min = -1.05, y_max = 1.05;
    bool x_auto = true;                 // otherwise [x_min, x_max]
    double x_min = 0.0, x_max = 1.0;
    bool diagonal = false;              // y = x reference line
};

// Fixed 800x600 viewBox scatter plot with deterministic formatting: the same
// spec always renders to the same bytes.
std::string render_scatter(const ScatterSpec& spec);

void write_svg(const std::string& path, const std::string& content);

}  // namespace stochdiag::svg
