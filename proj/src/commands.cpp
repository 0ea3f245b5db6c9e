#include "mfdr/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "mfdr/agent_sim.hpp"
#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"
#include "mfdr/lti_model.hpp"
#include "mfdr/mean_field.hpp"
#include "mfdr/nominal_stats.hpp"
#include "mfdr/oracle.hpp"
#include "mfdr/spectral_design.hpp"
#include "mfdr/svg_plot.hpp"

namespace mfdr {

namespace fs = std::filesystem;

namespace {

fs::path prepare_output(const RunConfig& config) {
    config.validate();
    const fs::path dir(config.dir);
    fs::create_directories(dir);
    std::ofstream(dir / "config_used.ini") << to_ini(config);
    return dir;
}

void configure_threads(const RunConfig& config) { set_simulation_threads(config.threads); }

/// key = value lines with round-trip numbers.
class Summary {
public:
    explicit Summary(const fs::path& path) : out_(path) {
        if (!out_) throw ConfigError("cannot write " + path.string());
    }
    Summary& put(const std::string& key, double value) {
        out_ << key << " = " << format_number(value) << '\n';
        return *this;
    }
    Summary& put(const std::string& key, const std::string& value) {
        out_ << key << " = " << value << '\n';
        return *this;
    }

private:
    std::ofstream out_;
};

LinePlot make_plot(std::string title, std::string x_label, std::string y_label) {
    LinePlot plot;
    plot.title = std::move(title);
    plot.x_label = std::move(x_label);
    plot.y_label = std::move(y_label);
    return plot;
}

std::vector<double> ticks_hours(std::size_t n, double period_seconds) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) * period_seconds / 3600.0;
    return t;
}

}  // namespace

LoadModel model_from_config(const RunConfig& config) {
    SwitchingCurve curve;
    curve.bins = config.bins;
    curve.gamma = config.gamma;
    curve.alpha = config.alpha;
    return build_pool_model(curve, config.period_minutes);
}

std::optional<CapacityEnvelope> resolve_envelope(const RunConfig& config, const LoadModel& model,
                                                 const NominalStats& stats) {
    if (config.plus_mw && config.minus_mw)
        return CapacityEnvelope::from_mw(*config.plus_mw, *config.minus_mw, config.agents, config.p_bar_kw);
    if (!config.estimate) return std::nullopt;
    CapacityOptions options;
    options.tolerance = config.tolerance;
    options.horizon_days = config.horizon_days;
    options.gains.kp = config.kp;
    options.gains.ki = config.ki;
    options.loop.zeta_guard = config.zeta_guard;
    options.backend.kind = parse_backend(config.capacity_backend);
    options.backend.m = config.m;
    options.backend.n_agents = config.agents;
    options.backend.seed = config.seed;
    return estimate_capacity(model, stats, options);
}

SignalSeries build_reference(const RunConfig& config, const std::optional<CapacityEnvelope>& env) {
    const double period = config.grid_period_seconds();
    SignalSeries mw;
    if (config.source == "synthetic") {
        mw = synth_regulation(config.hours, period, config.seed, config.band_lo, config.band_hi, config.rms_mw);
    } else {
        mw = load_csv(config.source, SignalUnits::MW);
        if (std::abs(mw.period_seconds - period) > 1e-6 * period)
            throw ConfigError("reference.source: sample period " + format_number(mw.period_seconds) +
                              " s does not match the grid period " + format_number(period) + " s");
    }
    if (config.lowpass_cph > 0.0) mw = lowpass(mw, config.lowpass_cph);
    SignalSeries r = to_on_fraction(mw, config.agents, config.p_bar_kw);

    if (config.amplitude_fraction > 0.0 && env && !r.samples.empty()) {
        const auto [lo_it, hi_it] = std::minmax_element(r.samples.begin(), r.samples.end());
        const double lo = *lo_it, hi = *hi_it;
        const double f = config.amplitude_fraction;
        if (config.shift_to_envelope) {
            if (hi > lo)
                for (double& x : r.samples)
                    x = f * (-env->minus_supply + (x - lo) / (hi - lo) * (env->plus_demand + env->minus_supply));
        } else {
            double scale = std::numeric_limits<double>::infinity();
            if (hi > 0.0) scale = std::min(scale, f * env->plus_demand / hi);
            if (lo < 0.0) scale = std::min(scale, f * env->minus_supply / -lo);
            if (std::isfinite(scale))
                for (double& x : r.samples) x *= scale;
        }
    }
    return fade_in(r, static_cast<std::size_t>(std::llround(2.0 * 3600.0 / period)));
}

int cmd_design(const RunConfig& config, std::ostream& log) {
    const fs::path dir = prepare_output(config);
    const LoadModel model = model_from_config(config);
    const NominalStats stats = compute_stats(model);
    export_model(model, dir / "model");

    {
        CsvWriter out(dir / "nominal.csv", {"state", "label", "utility", "pi0", "H", "S"});
        for (std::size_t x = 0; x < model.size(); ++x) {
            const auto i = static_cast<Eigen::Index>(x);
            out.cell(static_cast<long long>(x)).cell(model.labels()[x]).cell(model.utility()(i)).cell(stats.pi0(i));
            out.cell(stats.H(i)).cell(stats.S(i));
            out.end_row();
        }
    }
    {
        const SwitchingCurve& curve = *model.curve();
        CsvWriter out(dir / "switching_curve.csv", {"bin", "hours", "p_on", "p_off"});
        std::vector<double> hours, on, off;
        for (int i = 1; i <= curve.bins; ++i) {
            hours.push_back(i * config.period_minutes / 60.0);
            on.push_back(curve.switch_on_probability(i));
            off.push_back(curve.switch_off_probability(i));
            out.cell(static_cast<long long>(i)).cell(hours.back()).cell(on.back()).cell(off.back());
            out.end_row();
        }
        LinePlot plot = make_plot("Switching probabilities", "hours in current mode", "probability");
        plot.add("switch on after i bins off", hours, on);
        plot.add("switch off after i bins on", hours, off);
        plot.write(dir / "switching_curve.svg");
    }

    std::vector<double> zetas, eta, eta_taylor, onf, onf_taylor, lambdas;
    {
        CsvWriter out(dir / "sweep.csv", {"zeta", "lambda", "eta_star", "taylor_eta", "on_fraction", "taylor_on_fraction",
                                          "h_span", "iterations"});
        SolveOptions options;
        options.zeta_guard = config.zeta_guard;
        for (int k = 0; k < config.zeta_points; ++k) {
            const double zeta = config.zeta_min + (config.zeta_max - config.zeta_min) * k / (config.zeta_points - 1);
            const SpectralDesign design = solve(model, zeta, options);
            options.warm_start = design.v;
            zetas.push_back(zeta);
            lambdas.push_back(design.lambda);
            eta.push_back(design.eta_star);
            eta_taylor.push_back(taylor_eta(stats, zeta));
            onf.push_back(steady_state_on_fraction(design, model));
            onf_taylor.push_back(taylor_on_fraction(stats, zeta));
            out.cell(zeta).cell(design.lambda).cell(design.eta_star).cell(eta_taylor.back()).cell(onf.back());
            out.cell(onf_taylor.back()).cell(design.h_star.maxCoeff() - design.h_star.minCoeff());
            out.cell(static_cast<long long>(design.iterations));
            out.end_row();
        }
    }
    {
        LinePlot plot = make_plot("Optimal average welfare", "zeta", "eta*");
        plot.add("exact", zetas, eta);
        plot.add("second-order Taylor", zetas, eta_taylor);
        plot.write(dir / "eta_star.svg");
        LinePlot frac = make_plot("Steady-state on-fraction", "zeta", "fraction of pools on");
        frac.add("exact", zetas, onf);
        frac.add("affine approximation", zetas, onf_taylor);
        frac.write(dir / "on_fraction.svg");
    }
    Summary(dir / "design_summary.txt")
        .put("states", static_cast<double>(model.size()))
        .put("eta0", stats.eta0)
        .put("kappa2", stats.kappa2)
        .put("on_fraction_at_zero", steady_state_on_fraction(solve(model, 0.0), model));
    log << "design: eta0 = " << format_number(stats.eta0) << ", kappa2 = " << format_number(stats.kappa2) << ", "
        << zetas.size() << " sweep points written to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_analyze_lti(const RunConfig& config, std::ostream& log) {
    const fs::path dir = prepare_output(config);
    const LoadModel model = model_from_config(config);
    const NominalStats stats = compute_stats(model);
    const LtiSystem sys = linearize(model, stats);
    const ZeroPoleReport rep = zeros_poles(sys);
    const SupersampleFilter filter{config.m, config.period_minutes};

    auto write_bode = [&](const fs::path& stem, const std::vector<BodePoint>& points, const std::string& title) {
        CsvWriter out(stem.string() + ".csv", {"omega", "magnitude_db", "phase_deg"});
        std::vector<double> w, mag, phase;
        for (const auto& p : points) {
            out.cell(p.omega).cell(p.magnitude_db).cell(p.phase_deg);
            out.end_row();
            w.push_back(p.omega);
            mag.push_back(p.magnitude_db);
            phase.push_back(p.phase_deg);
        }
        LinePlot plot = make_plot(title, "omega (rad/sample)", "magnitude (dB)");
        plot.log_x = true;
        plot.add("|H|", w, mag);
        plot.write(stem.string() + "_magnitude.svg");
        LinePlot ph = make_plot(title, "omega (rad/sample)", "phase (deg)");
        ph.log_x = true;
        ph.add("arg H", w, phase);
        ph.write(stem.string() + "_phase.svg");
    };
    write_bode(dir / "bode", bode(sys), "Linearized aggregate response");
    write_bode(dir / "bode_supersampled", bode(sys, 400, 1e-3, std::numbers::pi, &filter),
               "Super-sampled response, m = " + std::to_string(config.m));

    {
        CsvWriter out(dir / "zeros.csv", {"re", "im", "modulus", "canceled"});
        std::vector<bool> kept(rep.all_zeros.size(), false);
        for (const auto& z : rep.zeros)
            for (std::size_t j = 0; j < rep.all_zeros.size(); ++j)
                if (!kept[j] && rep.all_zeros[j] == z) {
                    kept[j] = true;
                    break;
                }
        for (std::size_t j = 0; j < rep.all_zeros.size(); ++j) {
            const auto& z = rep.all_zeros[j];
            out.cell(z.real()).cell(z.imag()).cell(std::abs(z)).cell(std::string(kept[j] ? "false" : "true"));
            out.end_row();
        }
    }
    {
        CsvWriter out(dir / "poles.csv", {"re", "im", "modulus", "residue"});
        for (std::size_t k = 0; k < rep.all_poles.size(); ++k) {
            out.cell(rep.all_poles[k].real()).cell(rep.all_poles[k].imag()).cell(std::abs(rep.all_poles[k]));
            out.cell(rep.pole_residues[k]);
            out.end_row();
        }
    }
    {
        CsvWriter out(dir / "filter_zeros.csv", {"re", "im"});
        for (int k = 1; k < config.m; ++k) {
            const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * k / config.m);
            out.cell(z.real()).cell(z.imag());
            out.end_row();
        }
    }
    {
        LinePlot plot = make_plot("Poles (x) and zeros (o)", "Re", "Im");
        plot.equal_aspect = true;
        std::vector<double> cx, cy;
        for (int k = 0; k <= 200; ++k) {
            cx.push_back(std::cos(2.0 * std::numbers::pi * k / 200));
            cy.push_back(std::sin(2.0 * std::numbers::pi * k / 200));
        }
        plot.add("unit circle", cx, cy);
        std::vector<double> px, py, zx, zy;
        for (const auto& p : rep.poles) px.push_back(p.real()), py.push_back(p.imag());
        for (const auto& z : rep.zeros) zx.push_back(z.real()), zy.push_back(z.imag());
        plot.add("poles", px, py, true);
        plot.add("zeros", zx, zy, true);
        plot.write(dir / "pole_zero.svg");
    }
    double max_zero = 0.0;
    for (const auto& z : rep.zeros) max_zero = std::max(max_zero, std::abs(z));
    const double dc = transfer_value(sys, 1.0).real();
    Summary summary(dir / "lti_summary.txt");
    summary.put("dc_gain", dc)
        .put("kappa2", stats.kappa2)
        .put("minimum_phase", rep.minimum_phase ? "true" : "false")
        .put("max_zero_modulus", max_zero)
        .put("perron_residue", rep.perron_residue)
        .put("zeros", static_cast<double>(rep.zeros.size()))
        .put("canceled_poles", static_cast<double>(rep.canceled.size()))
        .put("supersampling_m", static_cast<double>(config.m));
    for (const auto& w : rep.warnings) summary.put("warning", w);
    log << "analyze-lti: DC gain " << format_number(dc) << " (kappa2 " << format_number(stats.kappa2)
        << "), minimum phase: " << (rep.minimum_phase ? "yes" : "no") << ", largest zero modulus "
        << format_number(max_zero) << '\n';
    for (const auto& w : rep.warnings) log << "warning: " << w << '\n';
    return kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    const fs::path dir = prepare_output(config);
    configure_threads(config);
    const LoadModel model = model_from_config(config);
    const NominalStats stats = compute_stats(model);
    PolicyCache cache(model);

    Vector mu0 = stats.pi0;
    InitSpec init;
    if (config.init == "all_off") {
        init.kind = InitKind::AllOff;
        mu0 = Vector::Zero(static_cast<Eigen::Index>(model.size()));
        mu0(0) = 1.0;
    }
    ClassedMeanField field(model, config.m, mu0);
    std::optional<AgentPopulation> pop;
    if (config.backend == "agent") {
        pop = init_population(model, config.agents, config.m, config.seed, init);
        if (config.guard_window_days > 0)
            pop->set_guard({config.guard_window_days, config.guard_lo_hours, config.guard_hi_hours});
    }

    const double period = config.grid_period_seconds();
    const auto ticks = static_cast<std::size_t>(std::llround(config.hours * 3600.0 / period));
    std::vector<std::string> header{"t", "time_seconds", "zeta", "y_mean_field"};
    if (pop) {
        header.push_back("y");
        for (int c = 0; c < config.m; ++c) header.push_back("y_class_" + std::to_string(c));
    }
    CsvWriter out(dir / "simulate.csv", header);
    std::vector<double> t_hours, y_mf, y_agents;
    for (std::size_t k = 0; k <= ticks; ++k) {
        out.cell(static_cast<long long>(k)).cell(static_cast<double>(k) * period).cell(config.zeta_step);
        out.cell(field.output());
        t_hours.push_back(static_cast<double>(k) * period / 3600.0);
        y_mf.push_back(field.output());
        if (pop) {
            out.cell(pop->output());
            y_agents.push_back(pop->output());
            for (int c = 0; c < config.m; ++c) out.cell(pop->class_output(c));
        }
        out.end_row();
        if (k == ticks) break;
        field.tick(cache, config.zeta_step);
        if (pop) pop->tick(cache, config.zeta_step);
    }
    LinePlot plot = make_plot("Open-loop response to constant zeta = " + format_number(config.zeta_step), "hours",
                  "fraction of pools on");
    plot.add("mean field", t_hours, y_mf);
    if (pop) plot.add("agents (N = " + std::to_string(config.agents) + ")", t_hours, y_agents);
    plot.write(dir / "simulate.svg");

    Summary summary(dir / "simulate_summary.txt");
    summary.put("ticks", static_cast<double>(ticks)).put("y_mean_field_final", y_mf.back());
    if (pop) {
        pop->write_snapshot(dir / "population.txt");
        const Vector empirical = empirical_distribution(*pop, model.size());
        summary.put("y_agents_final", y_agents.back())
            .put("l1_gap_final", (empirical - field.distribution()).cwiseAbs().sum())
            .put("guarded_transitions", static_cast<double>(pop->guarded_transitions()));
    }
    log << "simulate: " << ticks << " grid ticks, final mean-field y = " << format_number(y_mf.back());
    if (pop) log << ", agents y = " << format_number(y_agents.back());
    log << '\n';
    return kExitOk;
}

int cmd_capacity(const RunConfig& config, std::ostream& log) {
    const fs::path dir = prepare_output(config);
    configure_threads(config);
    const LoadModel model = model_from_config(config);
    const NominalStats stats = compute_stats(model);
    RunConfig forced = config;
    forced.estimate = true;
    forced.plus_mw.reset();
    forced.minus_mw.reset();
    const CapacityEnvelope env = *resolve_envelope(forced, model, stats);
    Summary(dir / "capacity.txt")
        .put("plus_demand", env.plus_demand)
        .put("minus_supply", env.minus_supply)
        .put("plus_mw", env.plus_mw(config.agents, config.p_bar_kw))
        .put("minus_mw", env.minus_mw(config.agents, config.p_bar_kw))
        .put("tolerance", config.tolerance)
        .put("backend", config.capacity_backend);
    log << "capacity: {+" << format_number(env.plus_mw(config.agents, config.p_bar_kw)) << " MW, -"
        << format_number(env.minus_mw(config.agents, config.p_bar_kw)) << " MW} at N = " << config.agents << '\n';
    return kExitOk;
}

int cmd_track(const RunConfig& config, std::ostream& log) {
    const fs::path dir = prepare_output(config);
    configure_threads(config);
    const LoadModel model = model_from_config(config);
    const NominalStats stats = compute_stats(model);
    const std::optional<CapacityEnvelope> env = resolve_envelope(config, model, stats);
    const SignalSeries reference = build_reference(config, env);
    write_csv(dir / "reference.csv", reference);

    PolicyCache cache(model);
    BackendSpec spec{parse_backend(config.backend), config.m, config.agents, config.seed};
    auto backend = make_backend(model, stats, cache, spec);
    auto* agents = dynamic_cast<AgentBackend*>(backend.get());
    if (agents) {
        if (config.guard_window_days > 0)
            agents->population().set_guard({config.guard_window_days, config.guard_lo_hours, config.guard_hi_hours});
        else
            agents->population().track_history(4);
    }
    PiController ctrl;
    ctrl.kp = config.kp;
    ctrl.ki = config.ki;
    ClosedLoopOptions options;
    options.zeta_guard = config.zeta_guard;
    const ClosedLoopTrace trace =
        run_closed_loop(*backend, stats.eta0, reference, ctrl, config.truncate ? env : std::nullopt, options);
    const double period = config.grid_period_seconds();
    write_trace_csv(dir / "track.csv", trace, period);

    const double error_nrms = tracking_nrms(trace);
    Summary summary(dir / "track_summary.txt");
    summary.put("backend", to_string(spec.kind))
        .put("ticks", static_cast<double>(trace.size()))
        .put("nrms", error_nrms)
        .put("clamped_ticks", static_cast<double>(trace.clamped_ticks))
        .put("truncation", config.truncate && env ? "true" : "false");
    if (env) {
        summary.put("plus_mw", env->plus_mw(config.agents, config.p_bar_kw))
            .put("minus_mw", env->minus_mw(config.agents, config.p_bar_kw));
        const bool exceeded = std::any_of(trace.reference.begin(), trace.reference.end(), [&](double r) {
            return r > env->plus_demand || r < -env->minus_supply;
        });
        if (exceeded && trace.reference.front() <= env->plus_demand && trace.reference.front() >= -env->minus_supply) {
            const WindupReport w = analyze_windup(trace, *env);
            summary.put("saturation_episodes", static_cast<double>(w.episodes))
                .put("baseline_error_rms", w.baseline_rms)
                .put("max_post_saturation_error", w.max_post_error)
                .put("windup_ratio", w.ratio)
                .put("windup_flag", w.ratio > 10.0 ? "true" : "false");
            log << "track: reference leaves the envelope in " << w.episodes << " episodes; post-saturation error is "
                << format_number(w.ratio) << "x the baseline RMS" << (w.ratio > 10.0 ? " (windup)" : "") << '\n';
        }
    }

    std::vector<double> hours = ticks_hours(trace.size(), period);
    const double full_mw = static_cast<double>(config.agents) * config.p_bar_kw / 1000.0;
    std::vector<double> r_mw, y_mw;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        r_mw.push_back(trace.truncated[k] * full_mw);
        y_mw.push_back((trace.output[k] - trace.y0) * full_mw);
    }
    LinePlot plot = make_plot("Closed-loop tracking (" + to_string(spec.kind) + ")", "hours", "power deviation (MW)");
    plot.add("reference", hours, r_mw);
    plot.add("aggregate", hours, y_mw);
    plot.write(dir / "track.svg");

    if (agents) {
        const std::vector<double> on_hours = agents->population().on_hours_per_day();
        if (!on_hours.empty()) {
            const double width = config.period_minutes / 60.0;
            std::vector<std::size_t> counts(static_cast<std::size_t>(std::ceil(24.0 / width)) + 1, 0);
            double mean = 0.0;
            for (double h : on_hours) {
                ++counts[std::min(counts.size() - 1, static_cast<std::size_t>(h / width))];
                mean += h / static_cast<double>(on_hours.size());
            }
            CsvWriter out(dir / "on_hours_histogram.csv", {"hours_per_day_lo", "hours_per_day_hi", "agents"});
            for (std::size_t b = 0; b < counts.size(); ++b) {
                out.cell(static_cast<double>(b) * width).cell(static_cast<double>(b + 1) * width);
                out.cell(static_cast<long long>(counts[b]));
                out.end_row();
            }
            summary.put("mean_on_hours_per_day", mean)
                .put("guarded_transitions", static_cast<double>(agents->population().guarded_transitions()));
        }
    }
    log << "track: NRMS " << format_number(error_nrms) << " over " << trace.size() << " ticks";
    if (env)
        log << ", envelope {+" << format_number(env->plus_mw(config.agents, config.p_bar_kw)) << ", -"
            << format_number(env->minus_mw(config.agents, config.p_bar_kw)) << "} MW";
    log << '\n';
    return kExitOk;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
    const fs::path dir = prepare_output(config);
    std::vector<TinyChain> chosen;
    const std::vector<TinyChain> all = fixture_set();
    for (const auto& name : config.fixtures) {
        if (name == "all") {
            chosen.insert(chosen.end(), all.begin(), all.end());
            continue;
        }
        const auto it = std::find_if(all.begin(), all.end(), [&](const TinyChain& c) { return c.name == name; });
        if (it == all.end()) throw ConfigError("verify.fixtures: unknown fixture '" + name + "'");
        chosen.push_back(*it);
    }
    OracleSuiteOptions options;
    options.mc_cycles = config.mc_cycles;
    options.seed = config.seed;
    const std::vector<OracleCheck> checks = run_oracle_suite(chosen, options);
    write_oracle_report(dir / "oracle_report.csv", checks);
    std::size_t failures = 0;
    for (const auto& c : checks) {
        if (c.pass) continue;
        ++failures;
        log << "FAIL " << c.fixture << " zeta=" << format_number(c.zeta) << " T=" << c.horizon << ' ' << c.quantity
            << ": pipeline " << format_number(c.pipeline) << ", oracle " << format_number(c.oracle) << ", tolerance "
            << format_number(c.tolerance) << '\n';
    }
    log << "verify: " << checks.size() - failures << "/" << checks.size() << " checks passed over " << chosen.size()
        << " fixtures\n";
    return failures == 0 ? kExitOk : kExitVerification;
}

}  // namespace mfdr
