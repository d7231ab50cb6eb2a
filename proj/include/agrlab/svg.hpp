#pragma once

#include <string>
#include <vector>

namespace agrlab::svg {

// One plotted group/line. `errors` (optional, may be empty) draws +/- bars.
struct Series {
    std::string label;
    std::vector<double> values;
    std::vector<double> errors;
};

// Grouped bar chart: one bar cluster per category. Every bar carries its
// exact value in a data-value attribute, in the same text form the CSV
// emitters use.
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, double y_min = 0.0, double y_max = 1.0);

// Dashed horizontal reference line (e.g. a ground-truth level).
struct RefLine {
    std::string label;
    double y = 0.0;
};

// Line chart over labelled x positions (markers carry data-value too).
// y_min == y_max asks for an automatic range.
std::string line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series, double y_min = 0.0, double y_max = 1.0,
                       const std::vector<RefLine>& ref_lines = {});

void write_file(const std::string& path, const std::string& content);

}  // namespace agrlab::svg
