#include "carlevel/plot.hpp"

#include "carlevel/errors.hpp"
#include "carlevel/textio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace carlevel {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
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

// Round step for roughly five ticks.
double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            return m * mag;
        }
    }
    return 10.0 * mag;
}

}  // namespace

std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<std::string>& groups, const std::vector<BarSeries>& series) {
    if (groups.empty() || series.empty()) {
        throw ValidationError("bar chart needs at least one group and one series");
    }
    for (const auto& s : series) {
        if (s.values.size() != groups.size() || (!s.lower.empty() && s.lower.size() != groups.size()) ||
            (!s.upper.empty() && s.upper.size() != groups.size())) {
            throw ValidationError("bar series '" + s.name + "' does not match the group count");
        }
    }
    static constexpr std::array<const char*, 6> colours{"#4c72b0", "#dd8452", "#55a868",
                                                        "#c44e52", "#8172b3", "#937860"};
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& s : series) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            for (double v : {s.values[g], s.lower.empty() ? s.values[g] : s.lower[g],
                             s.upper.empty() ? s.values[g] : s.upper[g]}) {
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        }
    }
    if (hi == lo) {
        hi = lo + 1.0;
    }
    const double step = nice_step(hi - lo);
    lo = std::floor(lo / step) * step;
    hi = std::ceil(hi / step) * step;

    const double width = 160.0 + 110.0 * static_cast<double>(groups.size()) * std::max<double>(1.0, series.size() / 3.0);
    const double height = 420.0;
    const double left = 80.0, right = 150.0, top = 50.0, bottom = 60.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                      num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
           "</text>\n";
    for (double t = lo; t <= hi + 1e-9 * step; t += step) {
        const double y = y_of(t);
        svg += "<line x1=\"" + num(left) + "\" x2=\"" + num(left + plot_w) + "\" y1=\"" + num(y) + "\" y2=\"" +
               num(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
               tick(t) + "</text>\n";
    }
    svg += "<line x1=\"" + num(left) + "\" x2=\"" + num(left + plot_w) + "\" y1=\"" + num(y_of(0.0)) + "\" y2=\"" +
           num(y_of(0.0)) + "\" stroke=\"black\"/>\n";
    svg += "<text transform=\"translate(20," + num(top + plot_h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(y_label) + "</text>\n";

    const double group_w = plot_w / static_cast<double>(groups.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double x0 = left + group_w * static_cast<double>(g) + group_w * 0.1;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = series[s].values[g];
            if (!std::isfinite(v)) {
                continue;
            }
            const double x = x0 + bar_w * static_cast<double>(s);
            const double y = std::min(y_of(v), y_of(0.0));
            const double h = std::abs(y_of(v) - y_of(0.0));
            svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(bar_w * 0.9) + "\" height=\"" +
                   num(h) + "\" fill=\"" + colours[s % colours.size()] + "\"><title>" +
                   escape(series[s].name + " " + groups[g] + ": " + format_double(v)) + "</title></rect>\n";
            if (!series[s].lower.empty() && !series[s].upper.empty() && std::isfinite(series[s].lower[g]) &&
                std::isfinite(series[s].upper[g])) {
                const double cx = x + bar_w * 0.45;
                svg += "<line x1=\"" + num(cx) + "\" x2=\"" + num(cx) + "\" y1=\"" + num(y_of(series[s].lower[g])) +
                       "\" y2=\"" + num(y_of(series[s].upper[g])) + "\" stroke=\"black\"/>\n";
            }
        }
        svg += "<text x=\"" + num(left + group_w * (static_cast<double>(g) + 0.5)) + "\" y=\"" +
               num(top + plot_h + 20) + "\" text-anchor=\"middle\">" + escape(groups[g]) + "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = top + 20.0 * static_cast<double>(s);
        svg += "<rect x=\"" + num(width - right + 15) + "\" y=\"" + num(y) + "\" width=\"12\" height=\"12\" fill=\"" +
               colours[s % colours.size()] + "\"/>\n";
        svg += "<text x=\"" + num(width - right + 32) + "\" y=\"" + num(y + 10) + "\">" + escape(series[s].name) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace carlevel
