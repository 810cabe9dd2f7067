#pragma once

namespace thirdgrade {

// Smooth cut-off theta_M: 1 on [0, M], 0 on [2M, inf), a quintic smoothstep
// in between. C^2, nonincreasing, Lipschitz with constant 15 / (8M).
struct CutoffFn {
  double M = 10.0;

  double operator()(double x) const {
    if (x <= M) return 1.0;
    if (x >= 2.0 * M) return 0.0;
    const double s = 2.0 - x / M;
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  }

  double lipschitz() const { return 15.0 / (8.0 * M); }
};

inline double theta(const CutoffFn& cut, double x) { return cut(x); }

}  // namespace thirdgrade
