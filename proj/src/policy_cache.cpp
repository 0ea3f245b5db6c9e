#include "mfdr/policy_cache.hpp"

#include <algorithm>
#include <cmath>

#include "mfdr/errors.hpp"

namespace mfdr {

StateIndex Policy::sample(StateIndex row, double u) const {
    const auto first = cdf.begin() + row_start[row];
    const auto last = cdf.begin() + row_start[row + 1];
    auto it = std::upper_bound(first, last, u);
    if (it == last) --it;
    return column[static_cast<std::size_t>(it - cdf.begin())];
}

std::shared_ptr<const Policy> make_policy(const Matrix& P_check, const Vector& v, double zeta) {
    auto policy = std::make_shared<Policy>();
    policy->zeta = zeta;
    policy->P_check = P_check;
    policy->v = v;
    const auto rows = P_check.rows(), cols = P_check.cols();
    policy->row_start.reserve(static_cast<std::size_t>(rows) + 1);
    policy->row_start.push_back(0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double p = P_check(i, j);
            if (p <= 0.0) continue;
            total += p;
            policy->column.push_back(static_cast<std::uint32_t>(j));
            policy->cdf.push_back(total);
        }
        if (policy->cdf.size() == policy->row_start.back()) throw ModelError("make_policy: empty row");
        // Renormalize so the last cumulative entry is exactly 1.
        for (auto k = policy->row_start.back(); k < policy->cdf.size(); ++k) policy->cdf[k] /= total;
        policy->cdf.back() = 1.0;
        policy->row_start.push_back(static_cast<std::uint32_t>(policy->cdf.size()));
    }
    return policy;
}

PolicyCache::PolicyCache(const LoadModel& model, std::size_t capacity, double quantum, SolveOptions options)
    : model_(model), capacity_(capacity), quantum_(quantum), options_(std::move(options)) {
    if (capacity_ == 0) throw ArgumentError("PolicyCache: capacity must be positive");
    if (!(quantum_ > 0.0)) throw ArgumentError("PolicyCache: quantum must be positive");
}

SolveOptions PolicyCache::default_options() {
    SolveOptions options;
    options.compute_invariant = false;
    return options;
}

double PolicyCache::quantize(double zeta) const { return static_cast<double>(std::llround(zeta / quantum_)) * quantum_; }

std::size_t PolicyCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::shared_ptr<const Policy> PolicyCache::get(double zeta) {
    if (!std::isfinite(zeta)) throw ArgumentError("PolicyCache: non-finite zeta");
    std::lock_guard lock(mutex_);
    const Key key = std::llround(zeta / quantum_);
    if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        recency_.splice(recency_.begin(), recency_, it->second.position);
        return it->second.policy;
    }
    ++misses_;
    SolveOptions options = options_;
    if (last_v_.size() == static_cast<Eigen::Index>(model_.size())) options.warm_start = last_v_;
    const double rounded = static_cast<double>(key) * quantum_;
    const SpectralDesign design = solve(model_, rounded, options);
    last_v_ = design.v;
    auto policy = make_policy(design.P_check, design.v, rounded);

    if (entries_.size() >= capacity_) {
        entries_.erase(recency_.back());
        recency_.pop_back();
    }
    recency_.push_front(key);
    entries_.emplace(key, Entry{policy, recency_.begin()});
    return policy;
}

}  // namespace mfdr
