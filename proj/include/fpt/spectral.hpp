#pragma once

#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "fpt/kernels.hpp"

namespace fpt {

/// Feedback Dicke model in units where omega_R sets the frequency scale.
struct ModelParams {
    double delta = 1.0;
    double omega_R = 1.0;
    double g = 1.0;
    double kappa = 100.0;
    double G = 0.0;
    double theta = std::numbers::pi / 2;
    double eta = 1.0;
    int N = 1;
};

/// Throws InvalidParameter on kappa <= 0, omega_R <= 0, g < 0, eta outside
/// (0, 1], N < 1 or any non-finite field.
void validate(const ModelParams& p);

/// Adiabatic elimination of the cavity is only trustworthy for kappa >> omega_R.
inline bool adiabatic_advisory(const ModelParams& p) { return p.kappa < 10.0 * p.omega_R; }

/// Coefficients of the reduced matter equation
///   X'' = -omega2 X + feedback (h * X) + F
/// after eliminating the cavity. The detector efficiency is already folded into
/// `effective_gain` = sqrt(eta) G.
struct ReducedCoefficients {
    double K = 0.0;            // kappa^2 + delta^2
    double C_theta = 0.0;      // delta cos(theta) + kappa sin(theta)
    double omega2 = 0.0;       // omega_R^2 - 4 omega_R g^2 delta / K
    double feedback = 0.0;     // 4 omega_R G' g kappa C_theta / K
    double effective_gain = 0.0;
};

ReducedCoefficients reduced_coefficients(const ModelParams& p);

/// D(w) = w^2 - omega_R^2 + 4 omega_R g^2 delta / K + 4 omega_R G' g kappa C_theta H(w) / K.
std::complex<double> char_poly(const ModelParams& p, const FeedbackKernel& kernel, double omega);

/// D continued to w = -i lambda (growing solutions e^{lambda t}); real-valued.
double char_poly_growth(const ModelParams& p, const FeedbackKernel& kernel, double lambda);

/// S(w) = pi omega_R^2 kappa / K |2g + G' (kappa - i delta) e^{-i theta} H(w)|^2.
double noise_spectrum(const ModelParams& p, const FeedbackKernel& kernel, double omega);

/// (S(w) + S(-w)) / 2, the part of S seen by a real stationary process.
double symmetrized_noise_spectrum(const ModelParams& p, const FeedbackKernel& kernel, double omega);

/// G at which D(0) = 0. Throws DegenerateGeometry when g, C_theta or H(0) vanish.
double critical_gain(const ModelParams& p, const FeedbackKernel& kernel);

struct StabilityRoots {
    std::optional<double> soft_mode_frequency;  // below threshold: root of Re D on the real axis
    std::optional<double> growth_rate;          // above threshold: root of D(-i lambda)
};

/// Scan [0, scan_max] with `scan_points` samples, then bisect to 1e-8 relative.
/// The regime is decided by the sign of D(0). Throws NoBracket.
StabilityRoots stability_roots(const ModelParams& p, const FeedbackKernel& kernel, double scan_max = 3.0,
                               int scan_points = 300);

struct VarianceValue {
    double value = 0.0;
    double error = 0.0;  // absolute quadrature error estimate
};

/// <X^2> = (1/4pi^2) int S(w)/|D(w)|^2 dw over the whole real line, both
/// half-lines evaluated separately. Throws UnstableRegime at or above
/// threshold and for an undamped soft mode (where the integral diverges).
VarianceValue quadrature_variance(const ModelParams& p, const FeedbackKernel& kernel);

struct SpectralResult {
    std::vector<double> omega;
    std::vector<std::complex<double>> D_values;
    std::vector<double> S_values;
    std::optional<double> G_crit;
    std::optional<double> soft_mode_frequency;
    std::optional<double> growth_rate;
    std::optional<VarianceValue> variance;
};

/// Samples D and S on `omegas` and attaches whatever roots, threshold and
/// variance exist for these parameters.
SpectralResult analyze(const ModelParams& p, const FeedbackKernel& kernel, std::span<const double> omegas);

struct CriticalFit {
    double A = 0.0;
    double B = 0.0;
    double alpha = 0.0;
    double alpha_stderr = 0.0;
    double G_crit_used = 0.0;
    double residual = 0.0;  // RMS relative residual
};

/// Fits <X^2> = A / |1 - G/G_crit|^alpha + B with G_crit fixed, B >= 0 and
/// residuals taken relative to the model value.
CriticalFit fit_critical_exponent(std::span<const double> G, std::span<const double> variance, double G_crit);

}  // namespace fpt
