#include "metawise/svg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metawise/format.hpp"

namespace metawise {

namespace {

// Qualitative palette, cycled across groups.
const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                          "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string num(double x) { return format_fixed(x, 2); }

}  // namespace

std::string render_density_plot(const std::vector<DensityPlotGroup>& groups,
                                const DensityPlotOptions& options) {
    if (groups.empty()) throw std::invalid_argument("render_density_plot: no groups");

    const double margin_left = 56.0;
    const double margin_right = 16.0;
    const double margin_top = options.title.empty() ? 16.0 : 36.0;
    const double margin_bottom = 40.0;
    const double plot_w = options.width - margin_left - margin_right;
    const double plot_h = options.height - margin_top - margin_bottom;

    double x_min = groups.front().curve.grid.front();
    double x_max = groups.front().curve.grid.back();
    double y_max = 0.0;
    for (const auto& g : groups) {
        if (g.curve.grid.empty()) throw std::invalid_argument("render_density_plot: empty curve");
        x_min = std::min(x_min, g.curve.grid.front());
        x_max = std::max(x_max, g.curve.grid.back());
        y_max = std::max(y_max, *std::max_element(g.curve.density.begin(), g.curve.density.end()));
    }
    if (options.criterion_line) {
        x_min = std::min(x_min, *options.criterion_line);
        x_max = std::max(x_max, *options.criterion_line);
    }
    if (y_max <= 0.0) y_max = 1.0;
    y_max *= 1.05;

    const auto sx = [&](double x) {
        return margin_left + (x - x_min) / (x_max - x_min) * plot_w;
    };
    const auto sy = [&](double y) { return margin_top + plot_h - y / y_max * plot_h; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.width) +
           "\" height=\"" + std::to_string(options.height) + "\" viewBox=\"0 0 " +
           std::to_string(options.width) + " " + std::to_string(options.height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    if (!options.title.empty()) {
        out += "<text x=\"" + num(margin_left) + "\" y=\"22\" font-family=\"sans-serif\" "
               "font-size=\"15\">" + options.title + "</text>\n";
    }

    // Axes.
    out += "<line x1=\"" + num(margin_left) + "\" y1=\"" + num(margin_top + plot_h) + "\" x2=\"" +
           num(margin_left + plot_w) + "\" y2=\"" + num(margin_top + plot_h) +
           "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + num(margin_left) + "\" y1=\"" + num(margin_top) + "\" x2=\"" +
           num(margin_left) + "\" y2=\"" + num(margin_top + plot_h) +
           "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double x = x_min + (x_max - x_min) * tick / 5.0;
        out += "<line x1=\"" + num(sx(x)) + "\" y1=\"" + num(margin_top + plot_h) + "\" x2=\"" +
               num(sx(x)) + "\" y2=\"" + num(margin_top + plot_h + 5) +
               "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + num(sx(x)) + "\" y=\"" + num(margin_top + plot_h + 20) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               format_fixed(x, std::abs(x_max - x_min) < 10 ? 2 : 0) + "</text>\n";
    }

    if (options.criterion_line) {
        const double x = sx(*options.criterion_line);
        out += "<line x1=\"" + num(x) + "\" y1=\"" + num(margin_top) + "\" x2=\"" + num(x) +
               "\" y2=\"" + num(margin_top + plot_h) +
               "\" stroke=\"#000\" stroke-width=\"1.5\" stroke-dasharray=\"5,4\"/>\n";
    }

    std::size_t color_index = 0;
    double legend_y = margin_top + 14.0;
    for (const auto& g : groups) {
        const char* color = kPalette[color_index % (sizeof(kPalette) / sizeof(kPalette[0]))];
        ++color_index;

        std::string points;
        for (std::size_t i = 0; i < g.curve.grid.size(); ++i) {
            points += num(sx(g.curve.grid[i])) + "," + num(sy(g.curve.density[i])) + " ";
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.8\" points=\"" + points + "\"/>\n";

        // Mean hash: short vertical tick sitting on the curve at the mean.
        double density_at_mean = 0.0;
        for (std::size_t i = 0; i + 1 < g.curve.grid.size(); ++i) {
            if (g.curve.grid[i] <= g.group_mean && g.group_mean <= g.curve.grid[i + 1]) {
                const double t = (g.group_mean - g.curve.grid[i]) /
                                 (g.curve.grid[i + 1] - g.curve.grid[i]);
                density_at_mean =
                    g.curve.density[i] + t * (g.curve.density[i + 1] - g.curve.density[i]);
                break;
            }
        }
        const double hash_x = sx(g.group_mean);
        const double hash_y = sy(density_at_mean);
        out += "<line x1=\"" + num(hash_x) + "\" y1=\"" + num(hash_y - 8) + "\" x2=\"" +
               num(hash_x) + "\" y2=\"" + num(hash_y + 8) + "\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2.5\"/>\n";

        out += "<line x1=\"" + num(margin_left + plot_w - 150) + "\" y1=\"" + num(legend_y - 4) +
               "\" x2=\"" + num(margin_left + plot_w - 130) + "\" y2=\"" + num(legend_y - 4) +
               "\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(margin_left + plot_w - 124) + "\" y=\"" + num(legend_y) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + g.label + "</text>\n";
        legend_y += 16.0;
    }

    out += "</svg>\n";
    return out;
}

}  // namespace metawise
