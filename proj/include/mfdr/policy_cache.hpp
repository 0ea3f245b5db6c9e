#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mfdr/load_model.hpp"
#include "mfdr/spectral_design.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// P̌_ζ together with sparse per-row cumulative distributions for sampling.
struct Policy {
    double zeta = 0.0;
    Matrix P_check;
    Vector v;
    std::vector<std::uint32_t> row_start;  // size d + 1
    std::vector<std::uint32_t> column;
    std::vector<double> cdf;  // last entry of each row is exactly 1

    /// Next state from `row` given u ∈ [0, 1).
    StateIndex sample(StateIndex row, double u) const;
};

std::shared_ptr<const Policy> make_policy(const Matrix& P_check, const Vector& v, double zeta);

/// ζ-keyed least-recently-used cache of policies. ζ is rounded to a multiple of
/// `quantum` before solving, so every caller sees the policy of the rounded ζ.
class PolicyCache {
public:
    explicit PolicyCache(const LoadModel& model, std::size_t capacity = 4096, double quantum = 1e-6,
                         SolveOptions options = default_options());

    std::shared_ptr<const Policy> get(double zeta);

    double quantize(double zeta) const;
    std::size_t size() const;
    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }
    const LoadModel& model() const { return model_; }

    static SolveOptions default_options();

private:
    using Key = std::int64_t;
    struct Entry {
        std::shared_ptr<const Policy> policy;
        std::list<Key>::iterator position;
    };

    const LoadModel& model_;
    std::size_t capacity_;
    double quantum_;
    SolveOptions options_;
    std::list<Key> recency_;  // front = most recent
    std::unordered_map<Key, Entry> entries_;
    Vector last_v_;  // warm start for the next solve
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
    mutable std::mutex mutex_;
};

}  // namespace mfdr
