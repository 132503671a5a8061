#include "fpt/memory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpt/error.hpp"

namespace fpt {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// (1 - e^-z)/z and (z - 1 + e^-z)/z^2, with series near z = 0.
double phi0(double z) { return std::abs(z) < 1e-4 ? 1.0 - z / 2.0 + z * z / 6.0 : -std::expm1(-z) / z; }
double phi1(double z) {
    return std::abs(z) < 1e-3 ? 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0 : (z + std::expm1(-z)) / (z * z);
}

}  // namespace

double ExponentialSum::operator()(double t) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) sum += weights[k] * std::exp(-rates[k] * t);
    return sum;
}

double ExponentialSum::integral() const {
    double sum = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) sum += weights[k] / rates[k];
    return sum;
}

ExponentialSum power_law_exponential_sum(const PowerLaw& p, double cover_time, double log_step) {
    require(cover_time > 0.0 && log_step >= 0.0, Errc::InvalidParameter, "cover_time > 0 and log_step >= 0 required");
    const double nu = p.s + 1.0;
    // The integrand is roughly Gaussian in u with width 1/sqrt(nu); the
    // trapezoid error is ~exp(-2 pi^2 / (nu h^2)), capped by the strip limit
    // exp(-pi^2 / h).
    if (log_step == 0.0) log_step = std::min(0.4, 0.9 / std::sqrt(nu));
    // The integrand peaks at e^u = nu / (1 + t/t0); keep ~30/nu e-folds below
    // the peak for t = cover_time and well past it for t = 0.
    const double u_lo = std::log(nu / (1.0 + cover_time / p.t0)) - 30.0 / nu - 2.0;
    const double u_hi = std::log(nu + 10.0 * std::sqrt(nu) + 40.0);
    const double scale = p.h0 * log_step / std::tgamma(nu);

    ExponentialSum out;
    for (double u = u_hi; u >= u_lo; u -= log_step) {
        out.rates.push_back(std::exp(u) / p.t0);
        out.weights.push_back(scale * std::exp(nu * u - std::exp(u)));
    }
    const double target = p.h0 * p.t0 / p.s;
    const double missing = target - out.integral();
    out.weights.back() += missing * out.rates.back();
    return out;
}

KernelConvolver::KernelConvolver(const FeedbackKernel& kernel, double dt, double cover_time, double memory_horizon,
                                 SignalShape shape)
    : dt_(dt), shape_(shape) {
    require(dt > 0.0, Errc::InvalidParameter, "dt must be > 0");
    auto add_mode = [&](double rate, double weight) {
        const double z = rate * dt;
        const double p0 = phi0(z), p1 = phi1(z);
        modes_.push_back({std::exp(-z), weight * dt * (p0 - p1), weight * dt * p1, weight * dt * p0});
    };
    std::vector<const Tabulated*> tables;
    for (const auto& term : kernel.terms()) {
        std::visit(overloaded{
                       [&](const PowerLaw& k) {
                           const auto soe = power_law_exponential_sum(k, std::max(cover_time, k.t0));
                           for (std::size_t i = 0; i < soe.rates.size(); ++i) add_mode(soe.rates[i], soe.weights[i]);
                       },
                       [&](const Exponential& k) { add_mode(k.rate, k.amplitude); },
                       [&](const DeltaPulse& k) { instantaneous_ += k.weight; },
                       [&](const Comb& k) {
                           for (int n = 1; n <= k.term_count; ++n)
                               taps_.push_back({n * k.period, k.weight / std::pow(n, k.s + 1.0)});
                       },
                       [&](const Tabulated& k) { tables.push_back(&k); },
                   },
                   term);
    }
    if (!tables.empty()) {
        require(memory_horizon > 0.0, Errc::InvalidParameter, "memory_horizon must be > 0 for tabulated kernels");
        const auto m = static_cast<std::size_t>(std::ceil(memory_horizon / dt));
        direct_.assign(m + 1, 0.0);
        for (const auto* table : tables) {
            const FeedbackKernel single(*table);
            for (std::size_t j = 0; j <= m; ++j) direct_[j] += eval_h(single, dt * static_cast<double>(j));
        }
    }
}

void KernelConvolver::start(double x0) {
    require(shape_ == SignalShape::PiecewiseLinear, Errc::InvalidParameter, "start() applies to sampled signals");
    history_.assign(1, x0);
    current_ = 0.0;
    for (auto& m : modes_) m.state = 0.0;
}

// Signal value at grid index `index` (linear) or on step `index` (constant),
// where `step` is the index of the point being evaluated and x_next the
// not-yet-committed newest entry.
double KernelConvolver::sample(std::size_t index, std::size_t step, double x_next) const {
    const std::size_t newest = shape_ == SignalShape::PiecewiseLinear ? step : step - 1;
    return index == newest ? x_next : history_[index];
}

double KernelConvolver::taps_at(std::size_t step, double x_next) const {
    const double t = dt_ * static_cast<double>(step);
    double sum = 0.0;
    for (const auto& tap : taps_) {
        const double back = t - tap.delay;
        if (back < 0.0) continue;
        const double pos = back / dt_;
        if (shape_ == SignalShape::PiecewiseLinear) {
            const auto i = std::min(static_cast<std::size_t>(pos), step);
            const double frac = pos - static_cast<double>(i);
            const double a = sample(i, step, x_next);
            const double b = i < step ? sample(i + 1, step, x_next) : a;
            sum += tap.weight * (a + frac * (b - a));
        } else {
            // Left limit: value on the step ending at or after `back`.
            const double up = std::ceil(pos - 1e-9);
            if (up < 1.0) continue;
            sum += tap.weight * sample(static_cast<std::size_t>(up) - 1, step, x_next);
        }
    }
    return sum;
}

double KernelConvolver::direct_at(std::size_t step, double x_next) const {
    if (direct_.empty()) return 0.0;
    const std::size_t m = direct_.size() - 1;
    double sum = 0.0;
    if (shape_ == SignalShape::PiecewiseLinear) {
        const std::size_t last = std::min(m, step);
        for (std::size_t j = 0; j <= last; ++j) {
            const double w = (j == 0 || j == last) ? 0.5 : 1.0;
            sum += w * direct_[j] * sample(step - j, step, x_next);
        }
    } else {
        const std::size_t count = std::min(m, step);
        for (std::size_t j = 0; j < count; ++j)
            sum += 0.5 * (direct_[j] + direct_[j + 1]) * sample(step - 1 - j, step, x_next);
    }
    return sum * dt_;
}

double KernelConvolver::peek(double x_next) const {
    const std::size_t step = shape_ == SignalShape::PiecewiseLinear ? history_.size() : history_.size() + 1;
    require(shape_ == SignalShape::PiecewiseConstant || !history_.empty(), Errc::InvalidParameter,
            "start() must precede peek() for sampled signals");
    double sum = 0.0;
    if (shape_ == SignalShape::PiecewiseLinear) {
        const double x_old = history_.back();
        for (const auto& m : modes_) sum += m.decay * m.state + m.c_old * x_old + m.c_new * x_next;
    } else {
        for (const auto& m : modes_) sum += m.decay * m.state + m.c_const * x_next;
    }
    return sum + taps_at(step, x_next) + direct_at(step, x_next);
}

void KernelConvolver::push(double x_next) {
    current_ = peek(x_next);
    if (shape_ == SignalShape::PiecewiseLinear) {
        const double x_old = history_.back();
        for (auto& m : modes_) m.state = m.decay * m.state + m.c_old * x_old + m.c_new * x_next;
    } else {
        for (auto& m : modes_) m.state = m.decay * m.state + m.c_const * x_next;
    }
    if (!taps_.empty() || !direct_.empty() || shape_ == SignalShape::PiecewiseLinear) history_.push_back(x_next);
}

}  // namespace fpt
