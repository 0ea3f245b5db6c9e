#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mfdr/load_model.hpp"
#include "mfdr/policy_cache.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// Uniform [0, 1) draw from the counter-based stream (seed, agent, tick).
double stream_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t tick);

enum class InitKind { Stationary, AllOff, Custom };

struct InitSpec {
    InitKind kind = InitKind::Stationary;
    Vector distribution;  // used with InitKind::Custom
};

struct GuardBand {
    int window_days = 1;
    double lo_hours = 0.0;  // on-hours per day
    double hi_hours = 24.0;
};

class AgentPopulation {
public:
    std::size_t n_agents() const { return states_.size(); }
    int m() const { return m_; }
    std::uint64_t seed() const { return seed_; }
    long long time() const { return t_; }
    const std::vector<std::uint16_t>& states() const { return states_; }
    const std::vector<std::uint16_t>& classes() const { return classes_; }
    const std::vector<std::uint32_t>& class_members(int c) const { return members_.at(static_cast<std::size_t>(c)); }

    /// Fraction of all agents in on-states (Σ U / N).
    double output() const;
    double class_output(int c) const;

    /// Agents whose trailing on-hours per day fall outside [lo, hi] move by P₀.
    void set_guard(const GuardBand& band);
    void clear_guard() { guard_.reset(); }
    bool guard_enabled() const { return guard_.has_value(); }
    /// Number of transitions decided by P₀ because of the guard.
    std::uint64_t guarded_transitions() const { return guarded_transitions_; }

    /// Keeps a per-agent on/off bit history over the trailing window, without guarding.
    void track_history(int window_days);
    /// Per-agent on-hours per day over the trailing window. Empty if no history is tracked.
    std::vector<double> on_hours_per_day() const;

    /// Moves class (t mod m) one step under ζ, then t += 1. Returns y over all agents.
    double tick(PolicyCache& cache, double zeta);

    void write_snapshot(const std::filesystem::path& path) const;
    static AgentPopulation read_snapshot(const LoadModel& model, const std::filesystem::path& path);

private:
    friend AgentPopulation init_population(const LoadModel&, std::size_t, int, std::uint64_t, const InitSpec&);

    struct History {
        int window_days = 1;
        std::size_t length = 0;  // bits per agent
        std::size_t words = 0;   // 64-bit words per agent
        std::vector<std::uint64_t> bits;
        std::vector<std::uint32_t> on_count;
        std::vector<std::size_t> cursor;  // per class, next bit to overwrite
    };

    AgentPopulation(const LoadModel& model, int m, std::uint64_t seed);
    void rebuild_members();
    void start_history(int window_days);
    bool outside_band(std::size_t agent) const;

    const LoadModel* model_;
    int m_ = 1;
    std::uint64_t seed_ = 0;
    long long t_ = 0;
    std::vector<std::uint16_t> states_;
    std::vector<std::uint16_t> classes_;
    std::vector<std::vector<std::uint32_t>> members_;
    std::vector<std::uint8_t> is_on_;  // U(x) ≥ ½ per state
    std::optional<GuardBand> guard_;
    std::optional<History> history_;
    std::uint64_t guarded_transitions_ = 0;
};

/// States drawn i.i.d. from the chosen law using the seeded stream; agent i is in class i mod m.
AgentPopulation init_population(const LoadModel& model, std::size_t n, int m, std::uint64_t seed,
                                const InitSpec& init = {});

double tick(AgentPopulation& pop, PolicyCache& cache, double zeta);

/// Occupation frequencies (1/N) Σ 1{X^i = x}.
Vector empirical_distribution(const AgentPopulation& pop, std::size_t d);

/// Worker count used for within-tick parallelism.
unsigned simulation_threads();
void set_simulation_threads(unsigned threads);

}  // namespace mfdr
