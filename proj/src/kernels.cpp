#include "fpt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fpt/error.hpp"
#include "fpt/power_fit.hpp"
#include "fpt/quadrature.hpp"

namespace fpt {
namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void validate(const KernelTerm& term) {
    std::visit(
        overloaded{
            [](const PowerLaw& k) {
                require(k.t0 > 0.0 && std::isfinite(k.t0), Errc::InvalidParameter, "PowerLaw t0 must be > 0");
                require(k.s > 0.0 && std::isfinite(k.s), Errc::InvalidParameter, "PowerLaw s must be > 0");
                require(std::isfinite(k.h0), Errc::InvalidParameter, "PowerLaw h0 must be finite");
            },
            [](const Exponential& k) {
                require(k.rate > 0.0 && std::isfinite(k.rate), Errc::InvalidParameter,
                        "Exponential rate must be > 0");
                require(std::isfinite(k.amplitude), Errc::InvalidParameter, "Exponential amplitude must be finite");
            },
            [](const DeltaPulse& k) {
                require(std::isfinite(k.weight), Errc::InvalidParameter, "DeltaPulse weight must be finite");
            },
            [](const Comb& k) {
                require(k.period > 0.0, Errc::InvalidParameter, "Comb period must be > 0");
                require(k.s > 0.0, Errc::InvalidParameter, "Comb s must be > 0");
                require(k.term_count >= 1, Errc::InvalidParameter, "Comb term_count must be >= 1");
            },
            [](const Tabulated& k) {
                require(k.times.size() >= 2 && k.times.size() == k.values.size(), Errc::InvalidParameter,
                        "Tabulated needs >= 2 matched samples");
                require(k.times.front() == 0.0, Errc::InvalidParameter, "Tabulated samples must start at t = 0");
                for (std::size_t i = 1; i < k.times.size(); ++i)
                    require(k.times[i] > k.times[i - 1], Errc::InvalidParameter,
                            "Tabulated times must increase strictly");
                require(k.tail_exponent > 1.0, Errc::InvalidParameter,
                        "Tabulated tail_exponent must exceed 1 for a finite H(0)");
            },
        },
        term);
}

// f(t) = amplitude * (reference / (t + shift))^exponent on t >= start.
struct PowerTail {
    double amplitude;
    double reference;
    double shift;
    double exponent;

    double operator()(double t) const { return amplitude * std::pow(reference / (t + shift), exponent); }
    // int_T^inf f(t) dt
    double integral_from(double t) const { return (*this)(t) * (t + shift) / (exponent - 1.0); }
};

// int_start^inf f(t) exp(-(lambda + i omega) t) dt with either lambda or omega zero.
TransformValue power_tail_transform(const PowerTail& f, double start, double omega, double lambda,
                                    double rel_tol) {
    const double u0 = start + f.shift;
    const double f0 = std::abs(f(start));
    if (f0 == 0.0) return {};

    quad::Tolerance tol;
    tol.relative = rel_tol;

    if (omega == 0.0) {
        // Non-oscillatory: geometric panels in (t + shift) and an analytic or
        // bounded remainder beyond the last panel.
        std::vector<double> points{start};
        double u = std::max(u0, 1e-300);
        const double decay_end = lambda > 0.0 ? 50.0 / lambda : 0.0;
        for (int k = 0; k < 200; ++k) {
            u *= 2.0;
            const double t = u - f.shift;
            points.push_back(t);
            if (lambda > 0.0 ? t >= decay_end : u >= 1e4 * u0) break;
        }
        const double end = points.back();
        tol.absolute = 1e-3 * rel_tol * f0 * std::min(u0, lambda > 0 ? 1.0 / lambda : u0);
        auto integrand = [&](double t) { return f(t) * std::exp(-lambda * (t - start)); };
        auto r = quad::integrate(integrand, std::span<const double>(points), tol);
        if (!r.converged)
            throw Error(Errc::QuadratureNonConvergence, "power-law tail transform", r.error);
        double value = r.value;
        double error = r.error;
        if (lambda == 0.0) {
            value += f.integral_from(end);
        } else {
            error += f.integral_from(end) * std::exp(-lambda * (end - start));
        }
        return {cplx(value * std::exp(-lambda * start), 0.0), error};
    }

    const double w = std::abs(omega);
    const double p = f.exponent;
    const double scale = f0 * std::min(u0, 1.0 / w);
    tol.absolute = 0.1 * rel_tol * scale;

    // Cut-off T: integration by parts to order K leaves a remainder bounded by
    // |f^(K)(T)| / w^(K+1), with f^(k) = (-1)^k p (p+1)...(p+k-1) f / u^k.
    constexpr int K = 6;
    auto derivative = [&](int k, double u) {
        double d = f(u - f.shift);
        for (int j = 0; j < k; ++j) d *= -(p + j) / u;
        return d;
    };
    auto remainder = [&](double u) { return std::abs(derivative(K, u)) / std::pow(w, K + 1); };
    double u_end = u0;
    if (remainder(u0) > 0.1 * tol.absolute) {
        u_end = std::max(2.0 * u0, 4.0 * (p + K) / w);
        while (remainder(u_end) > 0.1 * tol.absolute) u_end *= 1.25;
    }
    const double t_end = u_end - f.shift;

    const double half_period = std::numbers::pi / w;
    std::vector<double> points{start};
    double u = u0;
    while (u < u_end) {
        const double step = std::min(u, half_period);
        u = std::min(u + step, u_end);
        points.push_back(u - f.shift);
    }
    // Many half-period panels: do not ask for less than their summed roundoff.
    tol.absolute = std::max(tol.absolute, 64.0 * std::numeric_limits<double>::epsilon() * f0 *
                                              std::min(u0, half_period) * static_cast<double>(points.size()));

    quad::Result<cplx> r;
    auto integrand = [&](double t) { return f(t) * std::exp(-I * (omega * (t - start))); };
    if (points.size() > 1) r = quad::integrate(integrand, std::span<const double>(points), tol);
    if (!r.converged) throw Error(Errc::QuadratureNonConvergence, "oscillatory power-law transform", r.error);

    const cplx iw = I * omega;
    cplx series = 0.0, power = iw;
    for (int k = 0; k < K; ++k, power *= iw) series += derivative(k, u_end) / power;
    const cplx tail = std::exp(-I * (omega * (t_end - start))) * series;
    return {(r.value + tail) * std::exp(-I * (omega * start)), r.error + remainder(u_end)};
}

// phi0(z) = int_0^1 exp(-z u) du, phi1(z) = int_0^1 u exp(-z u) du.
std::pair<cplx, cplx> linear_phi(cplx z) {
    if (std::abs(z) < 1e-3) {
        cplx phi0 = 0.0, phi1 = 0.0, term = 1.0;
        for (int k = 0; k < 8; ++k) {
            phi0 += term / static_cast<double>(k + 1);
            phi1 += term / static_cast<double>(k + 2);
            term *= -z / static_cast<double>(k + 1);
        }
        return {phi0, phi1};
    }
    const cplx e = std::exp(-z);
    return {(1.0 - e) / z, (1.0 - e * (1.0 + z)) / (z * z)};
}

// Exact integral of the piecewise-linear interpolant against exp(-p t).
cplx tabulated_body(const Tabulated& k, cplx p) {
    cplx sum = 0.0;
    for (std::size_t i = 0; i + 1 < k.times.size(); ++i) {
        const double a = k.times[i];
        const double width = k.times[i + 1] - a;
        const auto [phi0, phi1] = linear_phi(p * width);
        sum += std::exp(-p * a) * width * (k.values[i] * phi0 + (k.values[i + 1] - k.values[i]) * phi1);
    }
    return sum;
}

PowerTail tabulated_tail(const Tabulated& k) {
    return {k.values.back(), k.times.back(), 0.0, k.tail_exponent};
}

double comb_remainder(const Comb& k) {
    // Midpoint integral-test estimate of sum_{n > N} n^-(s+1).
    return std::pow(k.term_count + 0.5, -k.s) / k.s;
}

TransformValue term_transform(const KernelTerm& term, double omega, double lambda, double rel_tol) {
    return std::visit(
        overloaded{
            [&](const PowerLaw& k) -> TransformValue {
                const PowerTail f{k.h0, k.t0, k.t0, k.s + 1.0};
                return power_tail_transform(f, 0.0, omega, lambda, rel_tol);
            },
            [&](const Exponential& k) -> TransformValue {
                return {k.amplitude / (cplx(lambda, omega) + k.rate), 0.0};
            },
            [&](const DeltaPulse& k) -> TransformValue { return {k.weight, 0.0}; },
            [&](const Comb& k) -> TransformValue {
                cplx sum = 0.0;
                const cplx p(lambda, omega);
                for (int n = k.term_count; n >= 1; --n)
                    sum += std::exp(-p * (n * k.period)) / std::pow(static_cast<double>(n), k.s + 1.0);
                if (omega == 0.0 && lambda == 0.0) sum += comb_remainder(k);
                return {k.weight * sum, 0.0};
            },
            [&](const Tabulated& k) -> TransformValue {
                const cplx body = tabulated_body(k, cplx(lambda, omega));
                auto tail = power_tail_transform(tabulated_tail(k), k.times.back(), omega, lambda, rel_tol);
                return {body + tail.value, tail.error};
            },
        },
        term);
}

}  // namespace

FeedbackKernel::FeedbackKernel(KernelTerm term) : terms_{std::move(term)} { validate(terms_.front()); }

FeedbackKernel::FeedbackKernel(std::vector<KernelTerm> terms) : terms_(std::move(terms)) {
    require(!terms_.empty(), Errc::InvalidParameter, "kernel needs at least one term");
    for (const auto& t : terms_) validate(t);
}

const PowerLaw* FeedbackKernel::as_power_law() const noexcept {
    if (terms_.size() != 1) return nullptr;
    return std::get_if<PowerLaw>(&terms_.front());
}

bool FeedbackKernel::has_impulses() const noexcept {
    return std::any_of(terms_.begin(), terms_.end(), [](const KernelTerm& t) {
        return std::holds_alternative<DeltaPulse>(t) || std::holds_alternative<Comb>(t);
    });
}

double FeedbackKernel::time_scale() const noexcept {
    double scale = 0.0;
    for (const auto& term : terms_) {
        scale = std::max(scale, std::visit(overloaded{
                                               [](const PowerLaw& k) { return k.t0; },
                                               [](const Exponential& k) { return 1.0 / k.rate; },
                                               [](const DeltaPulse&) { return 0.0; },
                                               [](const Comb& k) { return k.period * k.term_count; },
                                               [](const Tabulated& k) { return k.times.back(); },
                                           },
                                           term));
    }
    return scale;
}

double eval_h(const FeedbackKernel& kernel, double t) {
    if (t < 0.0) throw Error(Errc::NegativeTime, "h(t) is causal; t = " + std::to_string(t));
    double sum = 0.0;
    for (const auto& term : kernel.terms()) {
        sum += std::visit(
            overloaded{
                [&](const PowerLaw& k) { return k.h0 * std::pow(k.t0 / (t + k.t0), k.s + 1.0); },
                [&](const Exponential& k) { return k.amplitude * std::exp(-k.rate * t); },
                [&](const DeltaPulse&) -> double {
                    throw Error(Errc::PointwiseDeltaEvaluation, "DeltaPulse has no pointwise value");
                },
                [&](const Comb&) -> double {
                    throw Error(Errc::PointwiseDeltaEvaluation, "Comb is an impulse train");
                },
                [&](const Tabulated& k) {
                    if (t >= k.times.back()) return tabulated_tail(k)(t);
                    const auto it = std::upper_bound(k.times.begin(), k.times.end(), t);
                    const auto i = static_cast<std::size_t>(it - k.times.begin()) - 1;
                    const double x = (t - k.times[i]) / (k.times[i + 1] - k.times[i]);
                    return k.values[i] + x * (k.values[i + 1] - k.values[i]);
                },
            },
            term);
    }
    return sum;
}

TransformValue transform(const FeedbackKernel& kernel, double omega, double rel_tol) {
    TransformValue total;
    for (const auto& term : kernel.terms()) {
        const auto part = term_transform(term, omega, 0.0, rel_tol);
        total.value += part.value;
        total.error += part.error;
    }
    return total;
}

std::complex<double> eval_H(const FeedbackKernel& kernel, double omega, Convention convention) {
    const auto h = transform(kernel, omega).value;
    return convention == Convention::Conjugated ? std::conj(h) : h;
}

double zero_frequency_weight(const FeedbackKernel& kernel) {
    double sum = 0.0;
    for (const auto& term : kernel.terms()) {
        sum += std::visit(overloaded{
                              [](const PowerLaw& k) { return k.h0 * k.t0 / k.s; },
                              [](const Exponential& k) { return k.amplitude / k.rate; },
                              [](const DeltaPulse& k) { return k.weight; },
                              [](const Comb& k) {
                                  double s = comb_remainder(k);
                                  for (int n = k.term_count; n >= 1; --n)
                                      s += std::pow(static_cast<double>(n), -(k.s + 1.0));
                                  return k.weight * s;
                              },
                              [](const Tabulated& k) {
                                  double s = 0.0;
                                  for (std::size_t i = 0; i + 1 < k.times.size(); ++i)
                                      s += 0.5 * (k.values[i] + k.values[i + 1]) * (k.times[i + 1] - k.times[i]);
                                  return s + tabulated_tail(k).integral_from(k.times.back());
                              },
                          },
                          term);
    }
    return sum;
}

double laplace_transform(const FeedbackKernel& kernel, double lambda) {
    require(lambda >= 0.0, Errc::InvalidParameter, "laplace_transform needs lambda >= 0");
    double sum = 0.0;
    for (const auto& term : kernel.terms()) sum += term_transform(term, 0.0, lambda, 1e-10).value.real();
    return sum;
}

SlopeEstimate small_omega_im_slope(const FeedbackKernel& kernel, double omega_lo, double omega_hi, int points) {
    if (kernel.as_power_law() == nullptr)
        throw Error(Errc::NonPowerLawKernel, "slope estimate needs a single PowerLaw kernel");
    require(omega_lo > 0.0 && omega_hi > omega_lo, Errc::InvalidParameter, "need 0 < omega_lo < omega_hi");
    if (omega_hi / omega_lo < 10.0 * (1.0 - 1e-12))
        throw Error(Errc::RangeTooNarrow, "frequency range spans less than one decade");
    require(points >= 5, Errc::InvalidParameter, "need at least five grid points");

    std::vector<double> w(static_cast<std::size_t>(points));
    std::vector<double> im(w.size());
    const double ratio = std::log(omega_hi / omega_lo) / (points - 1);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = omega_lo * std::exp(ratio * static_cast<double>(i));
        im[i] = transform(kernel, w[i], 1e-11).value.imag();
    }

    SlopeEstimate out;
    out.loglog_slope = loglog_slope(w, im);
    const auto fit = fit_power_plus_linear(w, im);
    out.exponent = fit.exponent;
    out.power_coefficient = fit.power_coefficient;
    out.linear_coefficient = fit.linear_coefficient;
    out.residual = fit.residual;
    return out;
}

}  // namespace fpt
