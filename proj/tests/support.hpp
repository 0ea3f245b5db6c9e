#pragma once

#include "mfdr/load_model.hpp"
#include "mfdr/nominal_stats.hpp"

namespace mfdr::testing {

inline LoadModel symmetric_pool() {
    static const LoadModel model = build_pool_model(SwitchingCurve{});
    return model;
}

inline LoadModel cleaning_pool() {
    static const LoadModel model = [] {
        SwitchingCurve curve;
        curve.alpha = 1.0 / 3.0;
        return build_pool_model(curve);
    }();
    return model;
}

/// P₀ rows (½, ½), U = (0, 1): i.i.d. fair coin.
inline LoadModel coin() {
    Matrix P(2, 2);
    P << 0.5, 0.5, 0.5, 0.5;
    return build_custom_model(P, Vector::LinSpaced(2, 0.0, 1.0), 0);
}

inline Matrix two_state(double a, double b) {
    Matrix P(2, 2);
    P << 1.0 - a, a, b, 1.0 - b;
    return P;
}

}  // namespace mfdr::testing
