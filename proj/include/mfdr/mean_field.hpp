#pragma once

#include <vector>

#include "mfdr/load_model.hpp"
#include "mfdr/policy_cache.hpp"
#include "mfdr/types.hpp"

namespace mfdr {

/// Deterministic population distribution at grid tick t.
struct MeanFieldState {
    Vector mu;
    long long t = 0;
};

/// Checks Σμ = 1 within 1e-12 and μ ≥ 0.
void validate_distribution(const Vector& mu, std::size_t d);

/// μ_{t+1} = μ_t P̌_ζ
MeanFieldState step(const MeanFieldState& state, const Policy& policy);
MeanFieldState step(const MeanFieldState& state, PolicyCache& cache, double zeta);

/// Σ μ U
double output(const MeanFieldState& state, const LoadModel& model);

/// Mean field split into m equally weighted classes; class c moves only on
/// ticks t ≡ c (mod m). Each class distribution sums to 1; the aggregate is
/// their average. With m = 1 this is the plain mean-field recursion.
class ClassedMeanField {
public:
    ClassedMeanField(const LoadModel& model, int m, const Vector& mu0);

    /// Advances class (t mod m) under ζ, then t += 1. Returns the output after the move.
    double tick(PolicyCache& cache, double zeta);

    double output() const;
    double class_output(int c) const;
    Vector distribution() const;
    const std::vector<Vector>& class_distributions() const { return classes_; }
    long long time() const { return t_; }
    int classes() const { return static_cast<int>(classes_.size()); }

private:
    const LoadModel* model_;
    std::vector<Vector> classes_;
    long long t_ = 0;
};

}  // namespace mfdr
