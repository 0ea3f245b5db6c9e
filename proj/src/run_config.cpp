#include "mfdr/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"

namespace mfdr {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& name, const std::string& text) {
    T value{};
    const std::string t = trim(text);
    const auto result = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || result.ec != std::errc() || result.ptr != t.data() + t.size())
        throw ConfigError(name + ": cannot parse '" + text + "' as a number");
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(value)) throw ConfigError(name + ": value must be finite");
    return value;
}

bool parse_bool(const std::string& name, const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(name + ": expected true or false, got '" + text + "'");
}

std::string show(double v) { return format_number(v); }
std::string show(bool v) { return v ? "true" : "false"; }

struct FieldOps {
    ConfigField field;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define MFDR_DOUBLE(sec, name, help)                                                                         \
    FieldOps {                                                                                               \
        {sec, #name, help}, [](RunConfig& c, const std::string& n, const std::string& v) {                   \
            c.name = parse_number<double>(n, v);                                                             \
        },                                                                                                   \
            [](const RunConfig& c) { return show(c.name); }                                                  \
    }
#define MFDR_INTEGER(sec, name, type, help)                                                                  \
    FieldOps {                                                                                               \
        {sec, #name, help}, [](RunConfig& c, const std::string& n, const std::string& v) {                   \
            c.name = parse_number<type>(n, v);                                                               \
        },                                                                                                   \
            [](const RunConfig& c) { return std::to_string(c.name); }                                        \
    }
#define MFDR_BOOL(sec, name, help)                                                                           \
    FieldOps {                                                                                               \
        {sec, #name, help}, [](RunConfig& c, const std::string& n, const std::string& v) {                   \
            c.name = parse_bool(n, v);                                                                       \
        },                                                                                                   \
            [](const RunConfig& c) { return show(c.name); }                                                  \
    }
#define MFDR_STRING(sec, name, help)                                                                         \
    FieldOps {                                                                                               \
        {sec, #name, help}, [](RunConfig& c, const std::string&, const std::string& v) { c.name = trim(v); }, \
            [](const RunConfig& c) { return c.name; }                                                        \
    }
#define MFDR_OPTIONAL(sec, name, help)                                                                       \
    FieldOps {                                                                                               \
        {sec, #name, help}, [](RunConfig& c, const std::string& n, const std::string& v) {                   \
            const std::string t = trim(v);                                                                   \
            if (t.empty() || t == "none") c.name.reset();                                                    \
            else c.name = parse_number<double>(n, t);                                                        \
        },                                                                                                   \
            [](const RunConfig& c) { return c.name ? show(*c.name) : std::string("none"); }                  \
    }

const std::vector<FieldOps>& field_table() {
    static const std::vector<FieldOps> table = {
        MFDR_INTEGER("model", bins, int, "time bins per on/off mode"),
        MFDR_DOUBLE("model", gamma, "switching curve sharpness"),
        MFDR_DOUBLE("model", alpha, "target fraction of time off"),
        MFDR_DOUBLE("model", period_minutes, "base sampling period in minutes"),
        MFDR_DOUBLE("sweep", zeta_min, "lower end of the zeta sweep"),
        MFDR_DOUBLE("sweep", zeta_max, "upper end of the zeta sweep"),
        MFDR_INTEGER("sweep", zeta_points, int, "number of sweep points"),
        MFDR_STRING("simulation", backend, "mean_field or agent"),
        MFDR_INTEGER("simulation", agents, std::size_t, "number of loads N"),
        MFDR_INTEGER("simulation", m, int, "super-sampling classes"),
        MFDR_INTEGER("simulation", seed, std::uint64_t, "random seed"),
        MFDR_DOUBLE("simulation", hours, "simulated horizon in hours"),
        MFDR_DOUBLE("simulation", zeta_step, "constant zeta applied by simulate"),
        MFDR_STRING("simulation", init, "stationary or all_off"),
        MFDR_INTEGER("simulation", threads, unsigned, "worker threads, 0 = all cores"),
        MFDR_DOUBLE("controller", kp, "proportional gain"),
        MFDR_DOUBLE("controller", ki, "integral gain"),
        MFDR_DOUBLE("controller", zeta_guard, "clamp on |zeta|"),
        MFDR_STRING("reference", source, "'synthetic' or a two-column CSV path (MW)"),
        MFDR_DOUBLE("reference", band_lo, "synthetic band lower edge, cycles/hour"),
        MFDR_DOUBLE("reference", band_hi, "synthetic band upper edge, cycles/hour"),
        MFDR_DOUBLE("reference", rms_mw, "synthetic RMS in MW before scaling"),
        MFDR_DOUBLE("reference", lowpass_cph, "lowpass cutoff, cycles/hour; 0 disables"),
        MFDR_DOUBLE("reference", amplitude_fraction, "peak reference as a fraction of the envelope (above 1 overshoots it); 0 keeps MW scale"),
        MFDR_BOOL("reference", shift_to_envelope, "map the reference range onto the scaled envelope"),
        MFDR_DOUBLE("reference", p_bar_kw, "power per operating load in kW"),
        MFDR_BOOL("capacity", estimate, "estimate the envelope before tracking"),
        MFDR_STRING("capacity", capacity_backend, "backend used for capacity estimation"),
        MFDR_DOUBLE("capacity", tolerance, "NRMS tolerance defining capacity"),
        MFDR_DOUBLE("capacity", horizon_days, "capacity test horizon in days"),
        MFDR_OPTIONAL("capacity", plus_mw, "envelope override, MW above nominal"),
        MFDR_OPTIONAL("capacity", minus_mw, "envelope override, MW below nominal"),
        MFDR_BOOL("capacity", truncate, "truncate the reference to the envelope"),
        MFDR_INTEGER("guard", guard_window_days, int, "guard window in days; 0 disables"),
        MFDR_DOUBLE("guard", guard_lo_hours, "guard band lower edge, on-hours per day"),
        MFDR_DOUBLE("guard", guard_hi_hours, "guard band upper edge, on-hours per day"),
        MFDR_INTEGER("verify", mc_cycles, std::size_t, "regeneration cycles for Monte-Carlo checks"),
        FieldOps{{"verify", "fixtures", "comma-separated fixture names or 'all'"},
                 [](RunConfig& c, const std::string&, const std::string& v) {
                     c.fixtures.clear();
                     for (const auto& f : split_csv_line(v))
                         if (!trim(f).empty()) c.fixtures.push_back(trim(f));
                 },
                 [](const RunConfig& c) {
                     std::string out;
                     for (std::size_t i = 0; i < c.fixtures.size(); ++i) out += (i ? "," : "") + c.fixtures[i];
                     return out;
                 }},
        MFDR_STRING("output", dir, "output directory"),
    };
    return table;
}

#undef MFDR_DOUBLE
#undef MFDR_INTEGER
#undef MFDR_BOOL
#undef MFDR_STRING
#undef MFDR_OPTIONAL

const FieldOps& find_field(const std::string& section, const std::string& key) {
    for (const auto& f : field_table())
        if (f.field.section == section && f.field.key == key) return f;
    throw ConfigError(section + "." + key + ": unknown configuration key");
}

}  // namespace

IniFile IniFile::parse(std::istream& in, const std::string& source) {
    IniFile file;
    std::string section, line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        const std::string text = trim(comment == std::string::npos ? line : line.substr(0, comment));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) throw ParseError(source + ": malformed section header", line_no);
            section = trim(text.substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError(source + ": expected key = value", line_no);
        const std::string key = trim(text.substr(0, eq));
        if (key.empty()) throw ParseError(source + ": empty key", line_no);
        if (section.empty()) throw ParseError(source + ": key '" + key + "' appears before any [section]", line_no);
        file.entries_[{section, key}] = trim(text.substr(eq + 1));
        file.lines_[{section, key}] = line_no;
    }
    return file;
}

IniFile IniFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

std::optional<std::string> IniFile::get(const std::string& section, const std::string& key) const {
    const auto it = entries_.find({section, key});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

long IniFile::line_of(const std::string& section, const std::string& key) const {
    const auto it = lines_.find({section, key});
    return it == lines_.end() ? 0 : it->second;
}

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = [] {
        std::vector<ConfigField> out;
        for (const auto& f : field_table()) out.push_back(f.field);
        return out;
    }();
    return fields;
}

void apply_setting(RunConfig& config, const std::string& section, const std::string& key, const std::string& value) {
    find_field(section, key).set(config, section + "." + key, value);
}

void apply_file(RunConfig& config, const IniFile& file) {
    for (const auto& [where, value] : file.entries()) apply_setting(config, where.first, where.second, value);
}

std::string setting_value(const RunConfig& config, const std::string& section, const std::string& key) {
    return find_field(section, key).get(config);
}

std::string to_ini(const RunConfig& config) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : field_table()) {
        if (f.field.section != section) {
            if (!section.empty()) os << '\n';
            section = f.field.section;
            os << '[' << section << "]\n";
        }
        os << f.field.key << " = " << f.get(config) << '\n';
    }
    return os.str();
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& field, const std::string& what) {
        if (!ok) throw ConfigError(field + ": " + what);
    };
    require(bins >= 2 && bins <= 1000, "model.bins", "must lie in [2, 1000]");
    require(gamma > 1.0, "model.gamma", "must exceed 1");
    require(alpha > 0.0 && alpha < 1.0, "model.alpha", "must lie in (0, 1)");
    require(period_minutes > 0.0, "model.period_minutes", "must be positive");
    require(zeta_min < zeta_max, "sweep.zeta_min", "must be below sweep.zeta_max");
    require(std::abs(zeta_min) <= zeta_guard && std::abs(zeta_max) <= zeta_guard, "sweep.zeta_max",
            "sweep must stay within controller.zeta_guard");
    require(zeta_points >= 2, "sweep.zeta_points", "must be at least 2");
    require(backend == "agent" || backend == "mean_field", "simulation.backend", "must be agent or mean_field");
    require(agents >= 1 && agents <= 4000000000ULL, "simulation.agents", "must lie in [1, 4e9]");
    require(m >= 1 && m <= 1000, "simulation.m", "must lie in [1, 1000]");
    require(hours > 0.0, "simulation.hours", "must be positive");
    require(std::abs(zeta_step) <= zeta_guard, "simulation.zeta_step", "must stay within controller.zeta_guard");
    require(init == "stationary" || init == "all_off", "simulation.init", "must be stationary or all_off");
    require(zeta_guard > 0.0 && zeta_guard <= 40.0, "controller.zeta_guard", "must lie in (0, 40]");
    require(source == "synthetic" || !source.empty(), "reference.source", "must be 'synthetic' or a CSV path");
    require(band_lo >= 0.0 && band_lo < band_hi, "reference.band_lo", "must satisfy 0 <= band_lo < band_hi");
    require(band_hi <= 1800.0 / grid_period_seconds(), "reference.band_hi", "exceeds the grid-level Nyquist frequency");
    require(rms_mw >= 0.0, "reference.rms_mw", "must be nonnegative");
    require(lowpass_cph >= 0.0 && lowpass_cph <= 1800.0 / grid_period_seconds(), "reference.lowpass_cph",
            "must lie in [0, Nyquist]");
    require(amplitude_fraction >= 0.0 && amplitude_fraction <= 2.0, "reference.amplitude_fraction", "must lie in [0, 2]");
    require(p_bar_kw > 0.0, "reference.p_bar_kw", "must be positive");
    require(capacity_backend == "agent" || capacity_backend == "mean_field", "capacity.capacity_backend",
            "must be agent or mean_field");
    require(tolerance > 0.0 && tolerance < 1.0, "capacity.tolerance", "must lie in (0, 1)");
    require(horizon_days > 0.0, "capacity.horizon_days", "must be positive");
    require(!plus_mw || *plus_mw >= 0.0, "capacity.plus_mw", "must be nonnegative");
    require(!minus_mw || *minus_mw >= 0.0, "capacity.minus_mw", "must be nonnegative");
    require(plus_mw.has_value() == minus_mw.has_value(), "capacity.plus_mw", "set both plus_mw and minus_mw or neither");
    require(guard_window_days >= 0, "guard.guard_window_days", "must be nonnegative");
    require(guard_lo_hours >= 0.0 && guard_lo_hours <= guard_hi_hours && guard_hi_hours <= 24.0,
            "guard.guard_lo_hours", "band must satisfy 0 <= lo <= hi <= 24");
    require(mc_cycles >= 10000, "verify.mc_cycles", "must be at least 10000");
    require(!fixtures.empty(), "verify.fixtures", "fixture list is empty");
    require(!dir.empty(), "output.dir", "must not be empty");
}

}  // namespace mfdr
