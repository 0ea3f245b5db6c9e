#include "mfdr/agent_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "mfdr/errors.hpp"
#include "mfdr/nominal_stats.hpp"

namespace mfdr {

namespace {

std::atomic<unsigned> thread_override{0};

constexpr std::uint64_t kInitTick = std::numeric_limits<std::uint64_t>::max();
constexpr std::size_t kParallelThreshold = 32768;

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Runs body(begin, end, chunk) over [0, n) split into contiguous chunks.
template <typename Body>
void parallel_chunks(std::size_t n, unsigned threads, Body&& body) {
    if (threads <= 1 || n < kParallelThreshold) {
        body(std::size_t{0}, n, 0u);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
        const std::size_t begin = std::min(n, k * chunk), end = std::min(n, begin + chunk);
        workers.emplace_back([&body, begin, end, k] { body(begin, end, k); });
    }
    for (auto& w : workers) w.join();
}

}  // namespace

double stream_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t tick) {
    const std::uint64_t bits = mix64(mix64(mix64(seed) ^ agent) ^ tick);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

unsigned simulation_threads() {
    const unsigned forced = thread_override.load();
    if (forced > 0) return forced;
    return std::max(1u, std::thread::hardware_concurrency());
}

void set_simulation_threads(unsigned threads) { thread_override.store(threads); }

AgentPopulation::AgentPopulation(const LoadModel& model, int m, std::uint64_t seed)
    : model_(&model), m_(m), seed_(seed) {
    if (m < 1) throw ArgumentError("agent population: m must be positive");
    if (model.size() > std::numeric_limits<std::uint16_t>::max()) throw DimensionError("agent population: too many states");
    is_on_.resize(model.size());
    for (std::size_t x = 0; x < model.size(); ++x) is_on_[x] = model.utility()(static_cast<Eigen::Index>(x)) >= 0.5;
}

void AgentPopulation::rebuild_members() {
    members_.assign(static_cast<std::size_t>(m_), {});
    for (std::size_t i = 0; i < classes_.size(); ++i) members_[classes_[i]].push_back(static_cast<std::uint32_t>(i));
}

double AgentPopulation::output() const {
    const Vector& U = model_->utility();
    double total = 0.0;
    for (auto s : states_) total += U(s);
    return total / static_cast<double>(states_.size());
}

double AgentPopulation::class_output(int c) const {
    const auto& members = class_members(c);
    if (members.empty()) return 0.0;
    const Vector& U = model_->utility();
    double total = 0.0;
    for (auto i : members) total += U(states_[i]);
    return total / static_cast<double>(members.size());
}

void AgentPopulation::start_history(int window_days) {
    if (window_days < 1) throw ArgumentError("history window must be at least one day");
    const double per_day = 1440.0 / model_->sample_period_minutes();
    History h;
    h.window_days = window_days;
    h.length = static_cast<std::size_t>(std::llround(per_day * window_days));
    if (h.length == 0) throw ArgumentError("history window shorter than one period");
    h.words = (h.length + 63) / 64;

    // Pre-history: round(η₀ L) on-bits spread evenly over the window.
    const double eta0 = potential_solve(model_->transition(), model_->anchor()).pi.dot(model_->utility());
    const auto on_bits = static_cast<std::size_t>(std::llround(eta0 * static_cast<double>(h.length)));
    std::vector<std::uint64_t> pattern(h.words, 0);
    for (std::size_t j = 0; j < h.length; ++j)
        if ((j + 1) * on_bits / h.length > j * on_bits / h.length) pattern[j / 64] |= std::uint64_t{1} << (j % 64);

    h.bits.resize(h.words * states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) std::copy(pattern.begin(), pattern.end(), h.bits.begin() + i * h.words);
    h.on_count.assign(states_.size(), static_cast<std::uint32_t>(on_bits));
    h.cursor.assign(static_cast<std::size_t>(m_), 0);
    history_ = std::move(h);
}

void AgentPopulation::track_history(int window_days) { start_history(window_days); }

void AgentPopulation::set_guard(const GuardBand& band) {
    if (band.window_days < 1) throw ArgumentError("guard window must be at least one day");
    if (!(band.lo_hours <= band.hi_hours)) throw ArgumentError("guard band must satisfy lo <= hi");
    if (!history_ || history_->window_days != band.window_days) start_history(band.window_days);
    guard_ = band;
}

std::vector<double> AgentPopulation::on_hours_per_day() const {
    if (!history_) return {};
    const double scale = model_->sample_period_minutes() / 60.0 / history_->window_days;
    std::vector<double> hours(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) hours[i] = history_->on_count[i] * scale;
    return hours;
}

bool AgentPopulation::outside_band(std::size_t agent) const {
    const double hours =
        history_->on_count[agent] * model_->sample_period_minutes() / 60.0 / history_->window_days;
    return hours < guard_->lo_hours || hours > guard_->hi_hours;
}

double AgentPopulation::tick(PolicyCache& cache, double zeta) {
    const int c = static_cast<int>(t_ % m_);
    const auto policy = cache.get(zeta);
    std::shared_ptr<const Policy> nominal;
    if (guard_) nominal = cache.get(0.0);

    const auto& members = members_[static_cast<std::size_t>(c)];
    const auto tick_id = static_cast<std::uint64_t>(t_);
    const unsigned threads = simulation_threads();
    std::vector<std::uint64_t> guarded(std::max(1u, threads), 0);
    History* h = history_ ? &*history_ : nullptr;
    const std::size_t cursor = h ? h->cursor[static_cast<std::size_t>(c)] : 0;

    parallel_chunks(members.size(), threads, [&](std::size_t begin, std::size_t end, unsigned k) {
        for (std::size_t j = begin; j < end; ++j) {
            const std::uint32_t i = members[j];
            const Policy* rule = policy.get();
            if (guard_ && outside_band(i)) {
                rule = nominal.get();
                ++guarded[k];
            }
            const StateIndex next = rule->sample(states_[i], stream_uniform(seed_, i, tick_id));
            states_[i] = static_cast<std::uint16_t>(next);
            if (h) {
                std::uint64_t& word = h->bits[i * h->words + cursor / 64];
                const std::uint64_t mask = std::uint64_t{1} << (cursor % 64);
                const bool old_bit = (word & mask) != 0;
                const bool new_bit = is_on_[next] != 0;
                if (old_bit != new_bit) {
                    word ^= mask;
                    if (new_bit) ++h->on_count[i];
                    else --h->on_count[i];
                }
            }
        }
    });
    for (auto g : guarded) guarded_transitions_ += g;
    if (h) h->cursor[static_cast<std::size_t>(c)] = (cursor + 1) % h->length;
    ++t_;
    return output();
}

void AgentPopulation::write_snapshot(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write snapshot " + path.string());
    out << "mfdr-population 1\n" << states_.size() << ' ' << m_ << ' ' << seed_ << ' ' << t_ << '\n';
    for (std::size_t i = 0; i < states_.size(); ++i) out << states_[i] << ' ' << classes_[i] << '\n';
}

AgentPopulation AgentPopulation::read_snapshot(const LoadModel& model, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read snapshot " + path.string());
    std::string magic;
    int version = 0;
    std::size_t n = 0;
    int m = 0;
    std::uint64_t seed = 0;
    long long t = 0;
    if (!(in >> magic >> version >> n >> m >> seed >> t) || magic != "mfdr-population" || version != 1)
        throw ParseError("snapshot header is malformed", 1);
    AgentPopulation pop(model, m, seed);
    pop.t_ = t;
    pop.states_.resize(n);
    pop.classes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        unsigned s = 0, c = 0;
        if (!(in >> s >> c) || s >= model.size() || c >= static_cast<unsigned>(m))
            throw ParseError("snapshot agent record is invalid", static_cast<long>(i + 3));
        pop.states_[i] = static_cast<std::uint16_t>(s);
        pop.classes_[i] = static_cast<std::uint16_t>(c);
    }
    pop.rebuild_members();
    return pop;
}

AgentPopulation init_population(const LoadModel& model, std::size_t n, int m, std::uint64_t seed,
                                const InitSpec& init) {
    if (n < 1) throw ArgumentError("init_population: n must be at least 1");
    if (n > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("init_population: n too large");
    AgentPopulation pop(model, m, seed);
    const std::size_t d = model.size();

    Vector law;
    switch (init.kind) {
        case InitKind::Stationary:
            law = potential_solve(model.transition(), model.anchor()).pi;
            break;
        case InitKind::AllOff: {
            law = Vector::Zero(static_cast<Eigen::Index>(d));
            const Vector& U = model.utility();
            Eigen::Index lowest = 0;
            U.minCoeff(&lowest);
            law(lowest) = 1.0;
            break;
        }
        case InitKind::Custom:
            law = init.distribution;
            break;
    }
    if (law.size() != static_cast<Eigen::Index>(d) || !law.allFinite() || law.minCoeff() < 0.0 ||
        std::abs(law.sum() - 1.0) > 1e-9)
        throw ArgumentError("init_population: initial distribution must be a probability vector of length " +
                            std::to_string(d));

    const Matrix row = law.transpose();
    const auto sampler = make_policy(row, Vector::Ones(1), 0.0);
    pop.states_.resize(n);
    pop.classes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        pop.states_[i] = static_cast<std::uint16_t>(sampler->sample(0, stream_uniform(seed, i, kInitTick)));
        pop.classes_[i] = static_cast<std::uint16_t>(i % static_cast<std::size_t>(m));
    }
    pop.rebuild_members();
    return pop;
}

double tick(AgentPopulation& pop, PolicyCache& cache, double zeta) { return pop.tick(cache, zeta); }

Vector empirical_distribution(const AgentPopulation& pop, std::size_t d) {
    std::vector<std::size_t> counts(d, 0);
    for (auto s : pop.states()) ++counts.at(s);
    Vector mu(static_cast<Eigen::Index>(d));
    for (std::size_t x = 0; x < d; ++x)
        mu(static_cast<Eigen::Index>(x)) = static_cast<double>(counts[x]) / static_cast<double>(pop.n_agents());
    return mu;
}

}  // namespace mfdr
