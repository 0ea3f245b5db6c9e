#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfdr/types.hpp"

namespace mfdr {

/// Smooth switching profile: 2^{γ-1} x^γ below one half, mirrored above.
/// Throws ArgumentError unless 0 <= x <= 1 and gamma > 1.
double rho_s(double x, double gamma);

/// Parameters of the pool-pump switching curves.
///
/// `alpha` is the target fraction of the day the pump runs. The on-curve is
/// rho_s(x^{on_exponent}) and the off-curve rho_s(x^{off_exponent}); the
/// exponents are chosen so that the γ→∞ limits are steps at x = 1-α (switch
/// on after being off that long) and x = α (switch off after running that
/// long). Both exponents are 1 for α = 1/2.
struct SwitchingCurve {
    double gamma = 6.0;
    double alpha = 0.5;
    int bins = 48;

    void validate() const;
    double on_exponent() const;
    double off_exponent() const;
    /// p_i^+: probability of switching on after i bins off, i in 1..bins.
    double switch_on_probability(int i) const;
    /// p_i^-: probability of switching off after i bins on, i in 1..bins.
    double switch_off_probability(int i) const;
};

enum class PumpMode { Off, On };

struct PoolState {
    PumpMode mode;
    int bin;  // 1..T
};

/// Finite-state load model: nominal transition law, utility, anchor state.
/// Instances are validated at construction and immutable afterwards.
class LoadModel {
   public:
    std::size_t size() const { return static_cast<std::size_t>(transition_.rows()); }
    const Matrix& transition() const { return transition_; }
    const Vector& utility() const { return utility_; }
    StateIndex anchor() const { return anchor_; }
    double sample_period_minutes() const { return sample_period_minutes_; }
    const std::vector<std::string>& labels() const { return labels_; }
    /// Present for pool models only.
    const std::optional<SwitchingCurve>& curve() const { return curve_; }

    /// Pool models order states as (off,1..T) then (on,1..T).
    static StateIndex pool_index(PumpMode mode, int bin, int bins);
    static PoolState pool_state(StateIndex index, int bins);

   private:
    friend LoadModel build_custom_model(Matrix, Vector, StateIndex, double);
    friend LoadModel build_pool_model(const SwitchingCurve&, double);

    LoadModel() = default;

    Matrix transition_;
    Vector utility_;
    StateIndex anchor_ = 0;
    double sample_period_minutes_ = 30.0;
    std::vector<std::string> labels_;
    std::optional<SwitchingCurve> curve_;
};

LoadModel build_pool_model(const SwitchingCurve& curve, double sample_period_minutes = 30.0);

/// Validates and wraps a user supplied chain.
/// Throws DimensionError, StochasticityError or ReducibleChainError.
LoadModel build_custom_model(Matrix P0, Vector utility, StateIndex anchor,
                             double sample_period_minutes = 30.0);

/// Strong connectivity of the support graph (entries > edge_tolerance are edges).
bool is_irreducible(const Matrix& P, double edge_tolerance = 1e-15);

/// Writes `<stem>.csv` (transition matrix rows) and `<stem>.txt` (header with
/// T, gamma, alpha, anchor, period and utility).
void export_model(const LoadModel& model, const std::filesystem::path& stem);
LoadModel import_model(const std::filesystem::path& stem);

}  // namespace mfdr
