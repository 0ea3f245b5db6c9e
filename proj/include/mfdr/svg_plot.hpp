#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mfdr {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color;     // empty picks from the palette
    bool markers = false;  // draw points instead of a polyline
};

/// Minimal line/scatter chart written as standalone SVG.
struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool equal_aspect = false;
    int width = 720;
    int height = 440;
    std::vector<PlotSeries> series;

    void add(std::string label, std::vector<double> x, std::vector<double> y, bool markers = false);
    std::string render() const;
    void write(const std::filesystem::path& path) const;
};

}  // namespace mfdr
