#pragma once

#include <string>
#include <vector>

namespace carlevel {

struct BarSeries {
    std::string name;
    std::vector<double> values;  // one per group
    /// Optional whiskers (same length as values), e.g. interquartile range.
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Static SVG with one cluster of bars per group and one colour per series.
std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<std::string>& groups, const std::vector<BarSeries>& series);

}  // namespace carlevel
