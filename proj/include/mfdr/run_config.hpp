#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mfdr {

/// `[section]` headers and `key = value` lines; `#` and `;` start comments.
class IniFile {
public:
    static IniFile parse(std::istream& in, const std::string& source = "<config>");
    static IniFile load(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    /// (section, key) → value, sorted.
    const std::map<std::pair<std::string, std::string>, std::string>& entries() const { return entries_; }
    /// Line where (section, key) was defined.
    long line_of(const std::string& section, const std::string& key) const;

private:
    std::map<std::pair<std::string, std::string>, std::string> entries_;
    std::map<std::pair<std::string, std::string>, long> lines_;
};

struct RunConfig {
    // [model]
    int bins = 48;
    double gamma = 6.0;
    double alpha = 0.5;
    double period_minutes = 30.0;
    // [sweep]
    double zeta_min = -6.0;
    double zeta_max = 6.0;
    int zeta_points = 121;
    // [simulation]
    std::string backend = "agent";
    std::size_t agents = 100000;
    int m = 12;
    std::uint64_t seed = 1;
    double hours = 96.0;
    double zeta_step = 1.0;
    std::string init = "stationary";
    unsigned threads = 0;  // 0 = hardware concurrency
    // [controller]
    double kp = 20.0;
    double ki = 4.0;
    double zeta_guard = 40.0;
    // [reference]
    std::string source = "synthetic";
    double band_lo = 0.01;  // cycles/hour
    double band_hi = 0.1;
    double rms_mw = 100.0;
    double lowpass_cph = 0.0;  // 0 disables
    double amplitude_fraction = 0.6;
    bool shift_to_envelope = false;
    double p_bar_kw = 1.0;
    // [capacity]
    bool estimate = true;
    std::string capacity_backend = "mean_field";
    double tolerance = 0.05;
    double horizon_days = 4.0;
    std::optional<double> plus_mw;
    std::optional<double> minus_mw;
    bool truncate = true;
    // [guard]
    int guard_window_days = 0;  // 0 disables
    double guard_lo_hours = 0.0;
    double guard_hi_hours = 24.0;
    // [verify]
    std::size_t mc_cycles = 100000;
    std::vector<std::string> fixtures{"all"};
    // [output]
    std::string dir = "out";

    /// Throws ConfigError naming the offending field.
    void validate() const;
    double grid_period_seconds() const { return period_minutes * 60.0 / m; }
};

struct ConfigField {
    std::string section;
    std::string key;
    std::string help;
};

/// Every settable key; each doubles as a command-line flag `--key`.
const std::vector<ConfigField>& config_fields();

/// Parses and stores one value. Throws ConfigError "section.key: ..." on bad input.
void apply_setting(RunConfig& config, const std::string& section, const std::string& key, const std::string& value);

/// Applies every entry of the file; unknown keys are errors.
void apply_file(RunConfig& config, const IniFile& file);

/// Current value of a field rendered as text.
std::string setting_value(const RunConfig& config, const std::string& section, const std::string& key);

/// The whole configuration in file syntax.
std::string to_ini(const RunConfig& config);

}  // namespace mfdr
