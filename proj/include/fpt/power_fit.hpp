#pragma once

#include <span>

namespace fpt {

struct PowerPlusLinear {
    double exponent = 0.0;
    double power_coefficient = 0.0;
    double linear_coefficient = 0.0;
    double residual = 0.0;  // RMS relative residual
};

/// Fits y = a x^p + b x with relative weighting. a and b are eliminated by
/// linear least squares for each trial p; p is located by scan plus golden
/// section on [p_lo, p_hi].
PowerPlusLinear fit_power_plus_linear(std::span<const double> x, std::span<const double> y,
                                      double p_lo = 0.01, double p_hi = 0.999);

/// Ordinary least-squares slope of log|y| against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace fpt
