#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfdr {

enum class SignalUnits { OnFraction, MW };

std::string to_string(SignalUnits units);

/// Uniformly sampled real series.
struct SignalSeries {
    std::vector<double> samples;
    double period_seconds = 1.0;
    SignalUnits units = SignalUnits::MW;

    std::size_t size() const { return samples.size(); }
    double duration_hours() const { return static_cast<double>(samples.size()) * period_seconds / 3600.0; }
};

/// Two-column CSV (time_seconds, value). A non-numeric first row is taken as a header.
/// Throws ParseError (with line number) on malformed rows or non-uniform spacing.
SignalSeries load_csv(const std::filesystem::path& path, SignalUnits units = SignalUnits::MW);
void write_csv(const std::filesystem::path& path, const SignalSeries& series);

/// Zero-mean band-limited Gaussian surrogate: random complex amplitudes on the
/// DFT bins inside [f_lo, f_hi] cycles/hour, scaled to the requested RMS.
SignalSeries synth_regulation(double duration_hours, double period_seconds, std::uint64_t seed, double f_lo,
                              double f_hi, double rms);

/// Zero-phase forward-backward first-order lowpass with unit DC gain.
SignalSeries lowpass(const SignalSeries& series, double cutoff_cycles_per_hour);

/// Magnitude of the forward-backward filter at a frequency (cycles/hour).
double lowpass_gain(double frequency_cycles_per_hour, double cutoff_cycles_per_hour, double period_seconds);

/// MW → on-fraction deviation: divides by N p̄.
SignalSeries to_on_fraction(const SignalSeries& series, std::size_t n_agents, double p_bar_kw);
/// On-fraction → MW.
SignalSeries to_mw(const SignalSeries& series, std::size_t n_agents, double p_bar_kw);

double rms(const std::vector<double>& x);

/// RMS(r − y) / RMS(r) over [begin, end).
double nrms(const std::vector<double>& reference, const std::vector<double>& output, std::size_t begin = 0,
            std::size_t end = static_cast<std::size_t>(-1));

/// Fraction of periodogram power in bins outside [f_lo, f_hi] cycles/hour (DC excluded).
double out_of_band_fraction(const SignalSeries& series, double f_lo, double f_hi);

}  // namespace mfdr
