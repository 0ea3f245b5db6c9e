#include "mfdr/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>

#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"

namespace mfdr {

namespace {

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
    if (first == last) return false;
    const auto result = std::from_chars(first, last, out);
    return result.ec == std::errc() && result.ptr == last;
}

void require_finite(const SignalSeries& series, const char* who) {
    if (!(series.period_seconds > 0.0)) throw ArgumentError(std::string(who) + ": period must be positive");
    for (double x : series.samples)
        if (!std::isfinite(x)) throw ArgumentError(std::string(who) + ": non-finite sample");
}

}  // namespace

std::string to_string(SignalUnits units) { return units == SignalUnits::MW ? "MW" : "on-fraction"; }

SignalSeries load_csv(const std::filesystem::path& path, SignalUnits units) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open signal file " + path.string());
    std::vector<double> times;
    SignalSeries series;
    series.units = units;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        double t = 0.0, value = 0.0;
        const bool numeric = fields.size() == 2 && parse_double(fields[0], t) && parse_double(fields[1], value);
        if (!numeric) {
            if (times.empty() && series.samples.empty() && line_no == 1) continue;  // header
            throw ParseError(path.string() + ": expected two numeric columns (time_seconds, value)", line_no);
        }
        if (!std::isfinite(t) || !std::isfinite(value)) throw ParseError(path.string() + ": non-finite value", line_no);
        times.push_back(t);
        series.samples.push_back(value);
    }
    if (series.samples.empty()) throw ParseError(path.string() + ": signal has no samples", line_no);
    if (times.size() == 1) {
        series.period_seconds = 1.0;
        return series;
    }
    const double period = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(period > 0.0)) throw ParseError(path.string() + ": time column must increase", 2);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double gap = times[k] - times[k - 1];
        if (std::abs(gap - period) > 1e-6 * period)
            throw ParseError(path.string() + ": non-uniform time grid", static_cast<long>(k + 1));
    }
    series.period_seconds = period;
    return series;
}

void write_csv(const std::filesystem::path& path, const SignalSeries& series) {
    CsvWriter out(path, {"time_seconds", series.units == SignalUnits::MW ? "value_mw" : "value_on_fraction"});
    for (std::size_t k = 0; k < series.samples.size(); ++k) {
        out.cell(static_cast<double>(k) * series.period_seconds).cell(series.samples[k]);
        out.end_row();
    }
}

SignalSeries synth_regulation(double duration_hours, double period_seconds, std::uint64_t seed, double f_lo,
                              double f_hi, double rms_target) {
    if (!(duration_hours > 0.0) || !(period_seconds > 0.0)) throw ArgumentError("synth_regulation: bad time grid");
    const double nyquist = 1800.0 / period_seconds;  // cycles/hour
    if (!(f_lo >= 0.0 && f_lo < f_hi && f_hi <= nyquist))
        throw ArgumentError("synth_regulation: band must satisfy 0 <= f_lo < f_hi <= Nyquist");
    if (!(rms_target >= 0.0)) throw ArgumentError("synth_regulation: rms must be nonnegative");

    const auto n = static_cast<std::size_t>(std::llround(duration_hours * 3600.0 / period_seconds));
    SignalSeries series;
    series.period_seconds = period_seconds;
    series.units = SignalUnits::MW;
    series.samples.assign(n, 0.0);
    if (n < 2 || rms_target == 0.0) return series;

    // Bin k has frequency k / (n Δt); keep DC and Nyquist out.
    const double bin_width = 3600.0 / (static_cast<double>(n) * period_seconds);
    const auto k_lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f_lo / bin_width - 1e-9)));
    const auto k_hi = std::min<std::size_t>((n - 1) / 2, static_cast<std::size_t>(std::floor(f_hi / bin_width + 1e-9)));
    if (k_lo > k_hi) throw ArgumentError("synth_regulation: band contains no frequency bin; lengthen the series");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        const double a = normal(rng), b = normal(rng);
        for (std::size_t t = 0; t < n; ++t) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            series.samples[t] += a * std::cos(phase) + b * std::sin(phase);
        }
    }
    double mean = 0.0;
    for (double x : series.samples) mean += x;
    mean /= static_cast<double>(n);
    for (double& x : series.samples) x -= mean;
    const double current = rms(series.samples);
    if (current > 0.0)
        for (double& x : series.samples) x *= rms_target / current;
    return series;
}

double lowpass_gain(double frequency, double cutoff, double period_seconds) {
    const double a = std::exp(-2.0 * std::numbers::pi * cutoff * period_seconds / 3600.0);
    const double w = 2.0 * std::numbers::pi * frequency * period_seconds / 3600.0;
    const double single = (1.0 - a) / std::abs(1.0 - a * std::polar(1.0, -w));
    return single * single;
}

SignalSeries lowpass(const SignalSeries& series, double cutoff) {
    require_finite(series, "lowpass");
    const double nyquist = 1800.0 / series.period_seconds;
    if (!(cutoff > 0.0 && cutoff <= nyquist)) throw ArgumentError("lowpass: cutoff must lie in (0, Nyquist]");
    SignalSeries out = series;
    if (out.samples.empty()) return out;
    const double a = std::exp(-2.0 * std::numbers::pi * cutoff * series.period_seconds / 3600.0);
    auto pass = [a](std::vector<double>& x, bool forward) {
        const std::size_t n = x.size();
        double state = forward ? x.front() : x.back();
        for (std::size_t j = 0; j < n; ++j) {
            double& sample = x[forward ? j : n - 1 - j];
            state = state + (1.0 - a) * (sample - state);
            sample = state;
        }
    };
    pass(out.samples, true);
    pass(out.samples, false);
    return out;
}

SignalSeries to_on_fraction(const SignalSeries& series, std::size_t n_agents, double p_bar_kw) {
    if (series.units != SignalUnits::MW) throw ArgumentError("to_on_fraction: series is not in MW");
    if (n_agents == 0 || !(p_bar_kw > 0.0)) throw ArgumentError("to_on_fraction: N and p_bar must be positive");
    const double full_mw = static_cast<double>(n_agents) * p_bar_kw / 1000.0;
    SignalSeries out = series;
    out.units = SignalUnits::OnFraction;
    for (double& x : out.samples) x /= full_mw;
    return out;
}

SignalSeries to_mw(const SignalSeries& series, std::size_t n_agents, double p_bar_kw) {
    if (series.units != SignalUnits::OnFraction) throw ArgumentError("to_mw: series is not an on-fraction");
    if (n_agents == 0 || !(p_bar_kw > 0.0)) throw ArgumentError("to_mw: N and p_bar must be positive");
    const double full_mw = static_cast<double>(n_agents) * p_bar_kw / 1000.0;
    SignalSeries out = series;
    out.units = SignalUnits::MW;
    for (double& x : out.samples) x *= full_mw;
    return out;
}

double rms(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double total = 0.0;
    for (double v : x) total += v * v;
    return std::sqrt(total / static_cast<double>(x.size()));
}

double nrms(const std::vector<double>& reference, const std::vector<double>& output, std::size_t begin,
            std::size_t end) {
    if (reference.size() != output.size()) throw DimensionError("nrms: length mismatch");
    end = std::min(end, reference.size());
    if (begin >= end) throw ArgumentError("nrms: empty window");
    double err = 0.0, ref = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        err += (reference[k] - output[k]) * (reference[k] - output[k]);
        ref += reference[k] * reference[k];
    }
    if (ref == 0.0) throw ArgumentError("nrms: reference is identically zero");
    return std::sqrt(err / ref);
}

double out_of_band_fraction(const SignalSeries& series, double f_lo, double f_hi) {
    const std::size_t n = series.samples.size();
    if (n < 2) return 0.0;
    const double bin_width = 3600.0 / (static_cast<double>(n) * series.period_seconds);
    double inside = 0.0, outside = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            acc += series.samples[t] *
                   std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n));
        const double power = std::norm(acc);
        const double f = static_cast<double>(k) * bin_width;
        if (f >= f_lo * (1 - 1e-9) && f <= f_hi * (1 + 1e-9)) inside += power;
        else outside += power;
    }
    const double total = inside + outside;
    return total > 0.0 ? outside / total : 0.0;
}

}  // namespace mfdr
