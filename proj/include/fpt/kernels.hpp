#pragma once

#include <complex>
#include <span>
#include <variant>
#include <vector>

namespace fpt {

/// h(t) = h0 * (t0 / (t + t0))^(s+1).
struct PowerLaw {
    double h0 = 1.0;
    double t0 = 1.0;
    double s = 1.0;
};

/// h(t) = amplitude * exp(-rate t).
struct Exponential {
    double amplitude = 1.0;
    double rate = 1.0;
};

/// h(t) = weight * delta(t - 0+). The full weight sits inside the causal half-line.
struct DeltaPulse {
    double weight = 1.0;
};

/// h(t) = weight * sum_{n=1..term_count} delta(t - n T) / n^(s+1).
struct Comb {
    double period = 1.0;
    double s = 1.0;
    double weight = 1.0;
    int term_count = 200;
};

/// Linear interpolation between samples, then value_L * (t_L / t)^tail_exponent.
struct Tabulated {
    std::vector<double> times;
    std::vector<double> values;
    double tail_exponent = 2.0;
};

using KernelTerm = std::variant<PowerLaw, Exponential, DeltaPulse, Comb, Tabulated>;

enum class Convention {
    OneSided,    // H(w) = int_0^inf h(t) exp(-i w t) dt
    Conjugated,  // complex conjugate of the above, e^{-i w t0} E_{s+1}(i w t0) form
};

/// Causal feedback response, a sum of one or more terms. Immutable after
/// construction; the constructor validates every term.
class FeedbackKernel {
public:
    FeedbackKernel(KernelTerm term);  // NOLINT(google-explicit-constructor)
    explicit FeedbackKernel(std::vector<KernelTerm> terms);

    std::span<const KernelTerm> terms() const noexcept { return terms_; }

    /// The single PowerLaw term, or nullptr for any other shape.
    const PowerLaw* as_power_law() const noexcept;

    /// True when any term is a distribution (DeltaPulse or Comb).
    bool has_impulses() const noexcept;

    /// Longest intrinsic time scale: t0, 1/rate, comb span, or last sample.
    double time_scale() const noexcept;

private:
    std::vector<KernelTerm> terms_;
};

struct TransformValue {
    std::complex<double> value;
    double error = 0.0;
};

struct SlopeEstimate {
    /// Exponent p of the non-analytic part a*w^p of Im H(w).
    double exponent = 0.0;
    /// Plain least-squares slope of log|Im H| against log w.
    double loglog_slope = 0.0;
    double power_coefficient = 0.0;
    double linear_coefficient = 0.0;
    /// RMS relative residual of the two-component model.
    double residual = 0.0;
};

double eval_h(const FeedbackKernel& kernel, double t);

std::complex<double> eval_H(const FeedbackKernel& kernel, double omega,
                            Convention convention = Convention::OneSided);

/// eval_H together with its quadrature error estimate. Throws
/// QuadratureNonConvergence when the requested tolerance is not reached.
TransformValue transform(const FeedbackKernel& kernel, double omega, double rel_tol = 1e-10);

/// int_0^inf h(t) dt from closed forms (no quadrature).
double zero_frequency_weight(const FeedbackKernel& kernel);

/// int_0^inf h(t) exp(-lambda t) dt for lambda >= 0: the transform continued to
/// the growing-mode half of the imaginary frequency axis.
double laplace_transform(const FeedbackKernel& kernel, double lambda);

/// Low-frequency exponent of Im H(w) for a PowerLaw kernel, on a geometric
/// grid over [omega_lo, omega_hi] spanning at least one decade.
SlopeEstimate small_omega_im_slope(const FeedbackKernel& kernel, double omega_lo, double omega_hi,
                                   int points = 25);

}  // namespace fpt
