#include "mfdr/grid_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfdr/csv.hpp"
#include "mfdr/errors.hpp"

namespace mfdr {

double pi_step(PiController& ctrl, double r, double y) {
    const double e = r - y;
    ctrl.integrator += e;
    ctrl.zeta = ctrl.kp * e + ctrl.ki * ctrl.integrator;
    return ctrl.zeta;
}

double CapacityEnvelope::plus_mw(std::size_t n_agents, double p_bar_kw) const {
    return plus_demand * static_cast<double>(n_agents) * p_bar_kw / 1000.0;
}

double CapacityEnvelope::minus_mw(std::size_t n_agents, double p_bar_kw) const {
    return minus_supply * static_cast<double>(n_agents) * p_bar_kw / 1000.0;
}

CapacityEnvelope CapacityEnvelope::from_mw(double plus_mw, double minus_mw, std::size_t n_agents, double p_bar_kw) {
    const double full = static_cast<double>(n_agents) * p_bar_kw / 1000.0;
    if (!(full > 0.0)) throw ArgumentError("capacity envelope: N and p_bar must be positive");
    return {plus_mw / full, minus_mw / full};
}

double truncate_reference(double r, const CapacityEnvelope& env) {
    return std::clamp(r, -env.minus_supply, env.plus_demand);
}

MeanFieldBackend::MeanFieldBackend(const LoadModel& model, PolicyCache& cache, int m, const Vector& mu0)
    : cache_(cache), field_(model, m, mu0) {}

AgentBackend::AgentBackend(PolicyCache& cache, AgentPopulation population)
    : cache_(cache), population_(std::move(population)) {}

BackendKind parse_backend(const std::string& name) {
    if (name == "mean_field" || name == "mean-field") return BackendKind::MeanField;
    if (name == "agent" || name == "agent_sim" || name == "agents") return BackendKind::Agent;
    throw ConfigError("backend must be mean_field or agent, got '" + name + "'");
}

std::string to_string(BackendKind kind) { return kind == BackendKind::MeanField ? "mean_field" : "agent"; }

std::unique_ptr<Backend> make_backend(const LoadModel& model, const NominalStats& stats, PolicyCache& cache,
                                      const BackendSpec& spec) {
    if (spec.kind == BackendKind::MeanField) return std::make_unique<MeanFieldBackend>(model, cache, spec.m, stats.pi0);
    InitSpec init;
    init.kind = InitKind::Custom;
    init.distribution = stats.pi0;
    return std::make_unique<AgentBackend>(cache, init_population(model, spec.n_agents, spec.m, spec.seed, init));
}

std::vector<double> ClosedLoopTrace::deviation() const {
    std::vector<double> out(output.size());
    for (std::size_t k = 0; k < output.size(); ++k) out[k] = output[k] - y0;
    return out;
}

ClosedLoopTrace run_closed_loop(Backend& backend, double y0, const SignalSeries& reference, PiController ctrl,
                                const std::optional<CapacityEnvelope>& env, const ClosedLoopOptions& options) {
    if (reference.units != SignalUnits::OnFraction)
        throw ArgumentError("run_closed_loop: reference must be expressed as an on-fraction deviation");
    const std::size_t n = reference.size();
    ClosedLoopTrace trace;
    trace.y0 = y0;
    trace.reference = reference.samples;
    trace.truncated.reserve(n);
    trace.zeta.reserve(n);
    trace.output.reserve(n);
    trace.error.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double y = backend.output();
        const double r = env ? truncate_reference(reference.samples[k], *env) : reference.samples[k];
        double zeta = pi_step(ctrl, r, y - y0);
        if (!std::isfinite(zeta))
            throw NumericalError("run_closed_loop: non-finite zeta at tick " + std::to_string(k) +
                                 " (integrator " + std::to_string(ctrl.integrator) + ")");
        if (std::abs(zeta) > options.zeta_guard) {
            zeta = std::copysign(options.zeta_guard, zeta);
            ++trace.clamped_ticks;
        }
        trace.truncated.push_back(r);
        trace.zeta.push_back(zeta);
        trace.output.push_back(y);
        trace.error.push_back(r - (y - y0));
        if (options.record_classes) {
            std::vector<double> per_class(static_cast<std::size_t>(backend.classes()));
            for (int c = 0; c < backend.classes(); ++c) per_class[static_cast<std::size_t>(c)] = backend.class_output(c);
            trace.class_output.push_back(std::move(per_class));
        }
        backend.advance(zeta);
    }
    return trace;
}

double tracking_nrms(const ClosedLoopTrace& trace, std::size_t begin) {
    return nrms(trace.truncated, trace.deviation(), begin);
}

SignalSeries ramped_constant(double level, std::size_t ticks, std::size_t ramp_ticks, double period_seconds) {
    SignalSeries s;
    s.period_seconds = period_seconds;
    s.units = SignalUnits::OnFraction;
    s.samples.assign(ticks, level);
    return fade_in(s, ramp_ticks);
}

SignalSeries fade_in(const SignalSeries& series, std::size_t ramp_ticks) {
    SignalSeries out = series;
    const std::size_t n = std::min(ramp_ticks, out.samples.size());
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(ramp_ticks)));
        out.samples[k] *= w;
    }
    return out;
}

double constant_tracking_nrms(const LoadModel& model, const NominalStats& stats, PolicyCache& cache, double level,
                              const CapacityOptions& options) {
    const double period = model.sample_period_minutes() * 60.0 / options.backend.m;
    const auto ticks = static_cast<std::size_t>(std::llround(options.horizon_days * 86400.0 / period));
    const auto ramp = static_cast<std::size_t>(std::llround(options.ramp_hours * 3600.0 / period));
    const SignalSeries reference = ramped_constant(level, ticks, ramp, period);
    auto backend = make_backend(model, stats, cache, options.backend);
    const ClosedLoopTrace trace = run_closed_loop(*backend, stats.eta0, reference, options.gains, std::nullopt, options.loop);
    return tracking_nrms(trace);
}

CapacityEnvelope estimate_capacity(const LoadModel& model, const NominalStats& stats, const CapacityOptions& options) {
    if (!(options.tolerance > 0.0)) throw ConfigError("capacity tolerance must be positive");
    if (!(options.resolution > 0.0)) throw ConfigError("capacity resolution must be positive");
    PolicyCache cache(model);
    const double probe = std::min(0.01, 0.5 * std::min(stats.eta0, 1.0 - stats.eta0));

    auto search = [&](double sign, double ceiling) {
        auto ok = [&](double amplitude) {
            return constant_tracking_nrms(model, stats, cache, sign * amplitude, options) < options.tolerance;
        };
        if (!ok(probe))
            throw ConfigError("capacity estimation does not bracket: tracking fails at amplitude " + std::to_string(probe));
        double lo = probe, hi = ceiling;
        if (ok(hi)) return hi;
        while (hi - lo > options.resolution) {
            const double mid = 0.5 * (lo + hi);
            (ok(mid) ? lo : hi) = mid;
        }
        return lo;
    };
    CapacityEnvelope env;
    env.plus_demand = search(+1.0, 1.0 - stats.eta0);
    env.minus_supply = search(-1.0, stats.eta0);
    return env;
}

WindupReport analyze_windup(const ClosedLoopTrace& trace, const CapacityEnvelope& env, std::size_t window) {
    WindupReport rep;
    const std::size_t n = trace.reference.size();
    auto saturated = [&](std::size_t k) {
        return trace.reference[k] > env.plus_demand || trace.reference[k] < -env.minus_supply;
    };
    std::size_t k = 0;
    while (k < n && !saturated(k)) ++k;
    rep.first_episode = k;
    if (k == 0) throw ArgumentError("analyze_windup: reference saturates at the first tick; no baseline");
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += trace.error[j] * trace.error[j];
    rep.baseline_rms = std::sqrt(sum / static_cast<double>(k));

    while (k < n) {
        while (k < n && !saturated(k)) ++k;
        if (k == n) break;
        while (k < n && saturated(k)) ++k;
        ++rep.episodes;
        // Window after the episode ends, cut short by the next episode.
        for (std::size_t j = k; j < std::min(n, k + window) && !saturated(j); ++j)
            rep.max_post_error = std::max(rep.max_post_error, std::abs(trace.error[j]));
    }
    rep.ratio = rep.baseline_rms > 0.0 ? rep.max_post_error / rep.baseline_rms : 0.0;
    return rep;
}

void write_trace_csv(const std::filesystem::path& path, const ClosedLoopTrace& trace, double period_seconds) {
    CsvWriter out(path, {"t", "time_seconds", "r", "r_truncated", "zeta", "y", "e"});
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out.cell(static_cast<long long>(k))
            .cell(static_cast<double>(k) * period_seconds)
            .cell(trace.reference[k])
            .cell(trace.truncated[k])
            .cell(trace.zeta[k])
            .cell(trace.output[k])
            .cell(trace.error[k]);
        out.end_row();
    }
}

}  // namespace mfdr
