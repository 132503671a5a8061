#pragma once

#include <vector>

#include "fpt/kernels.hpp"

namespace fpt {

/// h(t) ~ sum_k weights[k] exp(-rates[k] t).
struct ExponentialSum {
    std::vector<double> rates;
    std::vector<double> weights;

    double operator()(double t) const;
    /// sum_k w_k / lambda_k, the zero-frequency weight of the approximation.
    double integral() const;
};

/// Trapezoid discretization in u = log x of
///   (1 + t/t0)^-nu = Gamma(nu)^-1 int exp(nu u - e^u (1 + t/t0)) du,
/// accurate for 0 <= t <= cover_time. The slowest weight is adjusted so the
/// integral equals h0 t0 / s exactly. log_step = 0 picks min(0.4, 0.9/sqrt(s+1)).
ExponentialSum power_law_exponential_sum(const PowerLaw& p, double cover_time, double log_step = 0.0);

/// How a sampled signal is continued between grid points.
enum class SignalShape {
    PiecewiseLinear,    // samples x(t_n); trajectories such as X(t)
    PiecewiseConstant,  // one value per step on (t_n, t_{n+1}]; white-noise increments / dt
};

/// Running causal convolution (h * x)(t_n) on a uniform grid for any kernel.
/// Exponential and PowerLaw terms become recursive modes, Comb terms delay
/// taps on the stored history, Tabulated terms a history trapezoid truncated
/// at `memory_horizon`. DeltaPulse terms are left to the caller through
/// instantaneous_weight(), since only the caller knows the current value.
class KernelConvolver {
public:
    KernelConvolver(const FeedbackKernel& kernel, double dt, double cover_time, double memory_horizon,
                    SignalShape shape);

    /// PiecewiseLinear only: the sample at t = 0.
    void start(double x0);

    /// Smooth part of (h*x)(t_{n+1}) if the next sample/value were x_next.
    double peek(double x_next) const;

    /// Commit x_next and advance one step.
    void push(double x_next);

    /// Smooth part of (h*x) at the current time.
    double value() const { return current_; }

    double instantaneous_weight() const { return instantaneous_; }
    std::size_t mode_count() const { return modes_.size(); }

private:
    struct Mode {
        double decay;   // exp(-lambda dt)
        double c_old;   // weight * dt * (phi0 - phi1): coefficient of x_n
        double c_new;   // weight * dt * phi1: coefficient of x_{n+1}
        double c_const; // weight * dt * phi0
        double state = 0.0;
    };
    struct Tap {
        double delay;
        double weight;
    };

    double taps_at(std::size_t step, double x_next) const;
    double direct_at(std::size_t step, double x_next) const;
    double sample(std::size_t index, std::size_t step, double x_next) const;

    double dt_;
    SignalShape shape_;
    std::vector<Mode> modes_;
    std::vector<Tap> taps_;
    std::vector<double> direct_;  // h(j dt), j = 0..M
    double instantaneous_ = 0.0;
    std::vector<double> history_;
    double current_ = 0.0;
};

}  // namespace fpt
