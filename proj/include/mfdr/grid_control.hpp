#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfdr/agent_sim.hpp"
#include "mfdr/load_model.hpp"
#include "mfdr/mean_field.hpp"
#include "mfdr/nominal_stats.hpp"
#include "mfdr/policy_cache.hpp"
#include "mfdr/signal.hpp"

namespace mfdr {

/// ζ = kp e + ki Σe, no anti-windup beyond reference truncation.
struct PiController {
    double kp = 20.0;
    double ki = 4.0;
    double integrator = 0.0;
    double zeta = 0.0;
};

/// e = r − y; integrator += e; returns ζ = kp e + ki integrator.
double pi_step(PiController& ctrl, double r, double y);

/// Reachable deviation band around y₀, in on-fraction units.
struct CapacityEnvelope {
    double plus_demand = 0.0;
    double minus_supply = 0.0;

    double plus_mw(std::size_t n_agents, double p_bar_kw = 1.0) const;
    double minus_mw(std::size_t n_agents, double p_bar_kw = 1.0) const;
    static CapacityEnvelope from_mw(double plus_mw, double minus_mw, std::size_t n_agents, double p_bar_kw = 1.0);
};

/// Clamp to [−minus_supply, +plus_demand].
double truncate_reference(double r, const CapacityEnvelope& env);

/// Plant seen by the balancing authority, one grid tick at a time.
class Backend {
public:
    virtual ~Backend() = default;
    /// Current aggregate on-fraction.
    virtual double output() const = 0;
    /// Applies ζ for one grid tick.
    virtual void advance(double zeta) = 0;
    virtual int classes() const = 0;
    virtual double class_output(int c) const = 0;
    virtual std::string name() const = 0;
};

class MeanFieldBackend final : public Backend {
public:
    MeanFieldBackend(const LoadModel& model, PolicyCache& cache, int m, const Vector& mu0);
    double output() const override { return field_.output(); }
    void advance(double zeta) override { field_.tick(cache_, zeta); }
    int classes() const override { return field_.classes(); }
    double class_output(int c) const override { return field_.class_output(c); }
    std::string name() const override { return "mean_field"; }
    const ClassedMeanField& field() const { return field_; }

private:
    PolicyCache& cache_;
    ClassedMeanField field_;
};

class AgentBackend final : public Backend {
public:
    AgentBackend(PolicyCache& cache, AgentPopulation population);
    double output() const override { return population_.output(); }
    void advance(double zeta) override { population_.tick(cache_, zeta); }
    int classes() const override { return population_.m(); }
    double class_output(int c) const override { return population_.class_output(c); }
    std::string name() const override { return "agent"; }
    AgentPopulation& population() { return population_; }
    const AgentPopulation& population() const { return population_; }

private:
    PolicyCache& cache_;
    AgentPopulation population_;
};

enum class BackendKind { MeanField, Agent };

BackendKind parse_backend(const std::string& name);
std::string to_string(BackendKind kind);

struct BackendSpec {
    BackendKind kind = BackendKind::MeanField;
    int m = 12;
    std::size_t n_agents = 100000;
    std::uint64_t seed = 1;
};

/// Backend started from the nominal invariant law.
std::unique_ptr<Backend> make_backend(const LoadModel& model, const NominalStats& stats, PolicyCache& cache,
                                      const BackendSpec& spec);

struct ClosedLoopOptions {
    double zeta_guard = 40.0;  // ζ is clamped here; the integrator is not
    bool record_classes = false;
};

struct ClosedLoopTrace {
    double y0 = 0.0;
    std::vector<double> reference;   // r, deviation from y₀
    std::vector<double> truncated;   // r̃ (equal to r without an envelope)
    std::vector<double> zeta;
    std::vector<double> output;      // y, absolute on-fraction
    std::vector<double> error;       // r̃ − (y − y₀)
    std::vector<std::vector<double>> class_output;  // per tick, when recorded
    std::size_t clamped_ticks = 0;

    std::size_t size() const { return zeta.size(); }
    /// Deviation y − y₀ per tick.
    std::vector<double> deviation() const;
};

/// Per grid tick k: measure y_k, r̃_k = truncate(r_k), ζ_k = PI(r̃_k, y_k − y₀), advance the backend with ζ_k.
ClosedLoopTrace run_closed_loop(Backend& backend, double y0, const SignalSeries& reference, PiController ctrl,
                                const std::optional<CapacityEnvelope>& env = std::nullopt,
                                const ClosedLoopOptions& options = {});

/// Tracking quality of a trace: RMS(r̃ − ỹ) / RMS(r̃).
double tracking_nrms(const ClosedLoopTrace& trace, std::size_t begin = 0);

/// Raised-cosine ramp from 0 to `level` over `ramp_ticks`, then constant.
SignalSeries ramped_constant(double level, std::size_t ticks, std::size_t ramp_ticks, double period_seconds);

/// Multiplies the first `ramp_ticks` samples by a raised-cosine window.
SignalSeries fade_in(const SignalSeries& series, std::size_t ramp_ticks);

struct CapacityOptions {
    double tolerance = 0.05;  // NRMS
    double horizon_days = 4.0;
    double ramp_hours = 2.0;
    double resolution = 1e-3;  // amplitude bisection stops at this width
    PiController gains;
    ClosedLoopOptions loop;
    BackendSpec backend;
};

/// NRMS of the closed loop tracking a ramped constant deviation `level`.
double constant_tracking_nrms(const LoadModel& model, const NominalStats& stats, PolicyCache& cache, double level,
                              const CapacityOptions& options);

/// Largest +r and −r whose ramped-constant tracking NRMS stays below tolerance.
/// Throws ConfigError if tracking fails already at the smallest probe amplitude.
CapacityEnvelope estimate_capacity(const LoadModel& model, const NominalStats& stats, const CapacityOptions& options = {});

struct WindupReport {
    std::size_t episodes = 0;
    std::size_t first_episode = 0;
    double baseline_rms = 0.0;      // RMS error before the first saturation episode
    double max_post_error = 0.0;    // max |e| over the windows after each episode
    double ratio = 0.0;             // max_post_error / baseline_rms
};

/// Saturation episodes are maximal runs of ticks where r lies outside the envelope.
WindupReport analyze_windup(const ClosedLoopTrace& trace, const CapacityEnvelope& env, std::size_t window = 50);

/// Writes (t, r, r_truncated, zeta, y, e) in grid ticks.
void write_trace_csv(const std::filesystem::path& path, const ClosedLoopTrace& trace, double period_seconds);

}  // namespace mfdr
