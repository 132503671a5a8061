#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace fpt::detail {

template <class F>
double bisect(F&& f, double a, double b, double fa) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (b - a <= 1e-8 * std::max(std::abs(mid), 1e-300)) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

// First sign change of f on a uniform scan of (0, scan_max], refined by bisection.
template <class F>
std::optional<double> first_root(F&& f, double f0, double scan_max, int scan_points) {
    const double step = scan_max / scan_points;
    double a = 0.0, fa = f0;
    for (int i = 1; i <= scan_points; ++i) {
        const double b = step * i;
        const double fb = f(b);
        if ((fb >= 0.0) != (fa >= 0.0)) return fb == 0.0 ? b : bisect(f, a, b, fa);
        a = b;
        fa = fb;
    }
    return std::nullopt;
}

}  // namespace fpt::detail
