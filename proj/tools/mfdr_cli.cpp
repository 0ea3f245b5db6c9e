#include <algorithm>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "mfdr/commands.hpp"
#include "mfdr/errors.hpp"
#include "mfdr/run_config.hpp"

namespace {

using Command = int (*)(const mfdr::RunConfig&, std::ostream&);

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field demand dispatch: design, analysis and closed-loop simulation of a pool-pump population"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "Configuration file (sections of key = value)");

    // Every config key is a flag; values are applied after the file so flags override it.
    std::map<std::string, std::string> flag_values;
    std::vector<std::pair<CLI::Option*, const mfdr::ConfigField*>> flags;
    for (const auto& field : mfdr::config_fields()) {
        const std::string name = "--" + dashed(field.key) + (field.key.find('_') != std::string::npos ? ",--" + field.key : "");
        auto* opt = app.add_option(name, flag_values[field.section + "." + field.key],
                                   field.help + " [" + field.section + "]");
        opt->group(field.section);
        flags.emplace_back(opt, &field);
    }

    const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands{
        {"design", {"Spectral design sweep and nominal statistics", mfdr::cmd_design}},
        {"analyze-lti", {"Linearized model: Bode response, zeros and poles", mfdr::cmd_analyze_lti}},
        {"simulate", {"Open-loop response to a constant broadcast", mfdr::cmd_simulate}},
        {"track", {"Closed-loop tracking of a regulation reference", mfdr::cmd_track}},
        {"capacity", {"Estimate the trackable capacity envelope", mfdr::cmd_capacity}},
        {"verify", {"Run the brute-force and Monte-Carlo oracle suite", mfdr::cmd_verify}},
    };
    Command chosen = nullptr;
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        sub->fallthrough();
        sub->callback([&chosen, cmd = entry.second] { chosen = cmd; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? mfdr::kExitOk : mfdr::kExitValidation;
    }

    try {
        mfdr::RunConfig config;
        if (!config_path.empty()) mfdr::apply_file(config, mfdr::IniFile::load(config_path));
        for (const auto& [opt, field] : flags)
            if (opt->count() > 0)
                mfdr::apply_setting(config, field->section, field->key, flag_values[field->section + "." + field->key]);
        return chosen(config, std::cout);
    } catch (const mfdr::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return mfdr::kExitNumerical;
    } catch (const mfdr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mfdr::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mfdr::kExitValidation;
    }
}
