#include "mfdr/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"

namespace mfdr {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

/// Round-number ticks covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (f * mag >= raw) {
            step = f * mag;
            break;
        }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

}  // namespace

void LinePlot::add(std::string label, std::vector<double> x, std::vector<double> y, bool markers) {
    if (x.size() != y.size()) throw DimensionError("plot series x/y length mismatch");
    series.push_back({std::move(label), std::move(x), std::move(y), "", markers});
}

std::string LinePlot::render() const {
    const double left = 70, right = 20, top = 36, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (log_x && s.x[k] <= 0.0)) continue;
            const double xv = log_x ? std::log10(s.x[k]) : s.x[k];
            x_lo = std::min(x_lo, xv);
            x_hi = std::max(x_hi, xv);
            y_lo = std::min(y_lo, s.y[k]);
            y_hi = std::max(y_hi, s.y[k]);
        }
    if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    if (x_hi == x_lo) x_lo -= 0.5, x_hi += 0.5;
    if (y_hi == y_lo) y_lo -= 0.5, y_hi += 0.5;
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
    if (equal_aspect) {
        const double span = std::max(x_hi - x_lo, y_hi - y_lo);
        const double xc = 0.5 * (x_lo + x_hi), yc = 0.5 * (y_lo + y_hi);
        x_lo = xc - span / 2, x_hi = xc + span / 2, y_lo = yc - span / 2, y_hi = yc + span / 2;
    }
    auto sx = [&](double x) { return left + (((log_x ? std::log10(x) : x) - x_lo) / (x_hi - x_lo)) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";

    // Grid and tick labels.
    std::vector<double> xt;
    if (log_x)
        for (double e = std::ceil(x_lo); e <= x_hi + 1e-9; e += 1.0) xt.push_back(std::pow(10.0, e));
    else
        xt = linear_ticks(x_lo, x_hi);
    for (double t : xt) {
        const double px = sx(t);
        os << "<line x1=\"" << format_number(px) << "\" y1=\"" << top << "\" x2=\"" << format_number(px) << "\" y2=\""
           << top + ph << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << format_number(px) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << fmt(t)
           << "</text>\n";
    }
    for (double t : linear_ticks(y_lo, y_hi)) {
        const double py = sy(t);
        os << "<line x1=\"" << left << "\" y1=\"" << format_number(py) << "\" x2=\"" << left + pw << "\" y2=\""
           << format_number(py) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << format_number(py + 4) << "\" text-anchor=\"end\">" << fmt(t)
           << "</text>\n";
    }
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">" << escape(x_label)
       << "</text>\n";
    os << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(y_label) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::string color = s.color.empty() ? kPalette[i % std::size(kPalette)] : s.color;
        if (s.markers) {
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
                os << "<circle cx=\"" << format_number(sx(s.x[k])) << "\" cy=\"" << format_number(sy(s.y[k]))
                   << "\" r=\"3\" fill=\"none\" stroke=\"" << color << "\"/>\n";
            }
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\" points=\"";
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (log_x && s.x[k] <= 0.0)) continue;
                os << format_number(sx(s.x[k])) << ',' << format_number(sy(s.y[k])) << ' ';
            }
            os << "\"/>\n";
        }
        os << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 + 15 * static_cast<double>(i) << "\" fill=\"" << color
           << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void LinePlot::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write plot " + path.string());
    out << render();
}

}  // namespace mfdr
