#pragma once

#include <complex>

#include "fpt/kernels.hpp"
#include "fpt/spectral.hpp"

namespace fpt {

enum class Cutoff { Hard, Exponential };

/// J(w) = kappa_R (w / omega_c)^s P_c(w), zero temperature, J(w < 0) = 0.
struct BathSpec {
    double s = 1.0;
    double kappa_R = 0.1;
    double omega_c = 1.0;
    Cutoff cutoff = Cutoff::Exponential;
};

void validate(const BathSpec& bath);

/// Throws NegativeFrequency for w < 0.
double spectral_function(const BathSpec& bath, double omega);

/// beta(t) = (1/pi) int_0^inf J(w) sin(wt) dw by adaptive quadrature.
double beta_kernel(const BathSpec& bath, double t, double rel_tol = 1e-11);

/// gamma(t) = (2/pi) int_0^inf J(w)/w cos(wt) dw, so that gamma' = -2 beta. Needs s > 0.
double gamma_kernel(const BathSpec& bath, double t, double rel_tol = 1e-11);

/// B(w) = int_0^inf beta(t) e^{-iwt} dt
///      = (1/pi) PV int J(v) v / (v^2 - w^2) dv - (i/2) sgn(w) J(|w|).
std::complex<double> bath_transform(const BathSpec& bath, double omega, double rel_tol = 1e-11);

/// int_0^inf beta(t) e^{-lambda t} dt = (1/pi) int J(v) v / (v^2 + lambda^2) dv, lambda >= 0.
double bath_laplace_transform(const BathSpec& bath, double lambda, double rel_tol = 1e-11);

/// w^2 - omega_R^2 + 4 omega_R B(w).
std::complex<double> bath_char_poly(double omega_R, const BathSpec& bath, double omega);

/// Soft-mode frequency (Re D = 0 on the real axis) when 4 B(0) < omega_R, otherwise
/// the growth rate of the real root of D(-i lambda). Same scan/bisection as stability_roots.
StabilityRoots bath_stability_roots(double omega_R, const BathSpec& bath, double scan_max = 3.0,
                                    int scan_points = 300);

/// 4 pi omega_R^2 J(w), with J(w < 0) = 0. Unlike the feedback spectrum there is
/// no detection cross term.
double bath_noise_spectrum(double omega_R, const BathSpec& bath, double omega);

struct BathMapping {
    BathSpec bath;                  // sub-Ohmic part, exponential cutoff at 1/time_scale
    double ohmic_background = 0.0;  // J gains ohmic_background * w
    double exponent = 0.0;
    double residual = 0.0;          // RMS relative residual of the fit
};

/// Matches -Im[K_fb H(w)] / (2 omega_R), the J(w) of a bath with the same
/// dissipative part, to kappa_R (w/omega_c)^s + b w on a log grid over
/// [omega_lo, omega_hi] / time_scale. Throws PoorFit when the data carry no
/// sub-Ohmic power law (exponent near 1, or the power term negligible).
BathMapping kernel_bath_map(const FeedbackKernel& kernel, const ModelParams& params, double omega_lo = 1e-4,
                            double omega_hi = 1e-2, int points = 25);

}  // namespace fpt
