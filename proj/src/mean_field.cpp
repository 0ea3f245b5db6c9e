#include "mfdr/mean_field.hpp"

#include <cmath>
#include <string>

#include "mfdr/errors.hpp"

namespace mfdr {

void validate_distribution(const Vector& mu, std::size_t d) {
    if (mu.size() != static_cast<Eigen::Index>(d))
        throw DimensionError("distribution has length " + std::to_string(mu.size()) + ", expected " + std::to_string(d));
    if (!mu.allFinite() || mu.minCoeff() < 0.0) throw ArgumentError("distribution must be finite and nonnegative");
    if (std::abs(mu.sum() - 1.0) > 1e-12) throw ArgumentError("distribution must sum to 1");
}

MeanFieldState step(const MeanFieldState& state, const Policy& policy) {
    if (state.mu.size() != policy.P_check.rows()) throw DimensionError("mean_field step: dimension mismatch");
    MeanFieldState next;
    next.mu = (state.mu.transpose() * policy.P_check).transpose();
    next.mu = next.mu.cwiseMax(0.0);
    next.mu /= next.mu.sum();
    next.t = state.t + 1;
    return next;
}

MeanFieldState step(const MeanFieldState& state, PolicyCache& cache, double zeta) {
    return step(state, *cache.get(zeta));
}

double output(const MeanFieldState& state, const LoadModel& model) { return state.mu.dot(model.utility()); }

ClassedMeanField::ClassedMeanField(const LoadModel& model, int m, const Vector& mu0) : model_(&model) {
    if (m < 1) throw ArgumentError("ClassedMeanField: m must be positive");
    validate_distribution(mu0, model.size());
    classes_.assign(static_cast<std::size_t>(m), mu0);
}

double ClassedMeanField::tick(PolicyCache& cache, double zeta) {
    const auto c = static_cast<std::size_t>(t_ % static_cast<long long>(classes_.size()));
    const auto policy = cache.get(zeta);
    Vector next = (classes_[c].transpose() * policy->P_check).transpose();
    next = next.cwiseMax(0.0);
    classes_[c] = next / next.sum();
    ++t_;
    return output();
}

double ClassedMeanField::output() const {
    double y = 0.0;
    for (const auto& mu : classes_) y += mu.dot(model_->utility());
    return y / static_cast<double>(classes_.size());
}

double ClassedMeanField::class_output(int c) const {
    return classes_.at(static_cast<std::size_t>(c)).dot(model_->utility());
}

Vector ClassedMeanField::distribution() const {
    Vector mu = Vector::Zero(classes_.front().size());
    for (const auto& part : classes_) mu += part;
    return mu / static_cast<double>(classes_.size());
}

}  // namespace mfdr
