#pragma once

#include <cmath>

namespace morder {

// phi(x) = e^x - x - 1, the exponential-moment remainder. A Taylor series is
// used for |x| < 1e-4 where the direct form cancels catastrophically.
inline double phi(double x) noexcept {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return x2 * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
    }
    return std::expm1(x) - x;
}

}  // namespace morder
