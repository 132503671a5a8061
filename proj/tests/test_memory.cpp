#include <doctest.h>

#include <cmath>

#include "fpt/memory.hpp"
#include "oracles.hpp"

using namespace fpt;

namespace {

// (h * x)(T) for x = sin by the oracle trapezoid, h given pointwise.
template <class H>
double sine_convolution(H&& h, double T) {
    return oracle::richardson_trapezoid([&](double tau) { return h(T - tau) * std::sin(tau); }, 0.0, T, 20000);
}

double run_sine(KernelConvolver& conv, double dt, long steps) {
    conv.start(0.0);
    for (long n = 1; n <= steps; ++n) conv.push(std::sin(dt * static_cast<double>(n)));
    return conv.value();
}

}  // namespace

TEST_SUITE("memory") {
    TEST_CASE("sum of exponentials reproduces the power law") {
        for (double s : {0.3, 1.0, 5.0, 20.0}) {
            const PowerLaw pl{s, 1.0, s};
            const double cover = 500.0;
            const auto soe = power_law_exponential_sum(pl, cover);
            CAPTURE(s);
            CHECK(soe.integral() == doctest::Approx(pl.h0 * pl.t0 / s).epsilon(1e-12));
            double worst = 0.0;
            for (double t = 0.0; t <= cover; t += (t < 5.0 ? 0.01 : 0.5)) {
                const double exact = pl.h0 * std::pow(pl.t0 / (t + pl.t0), s + 1.0);
                worst = std::max(worst, std::abs(soe(t) - exact));
            }
            CHECK(worst < 1e-6 * pl.h0);
        }
    }

    TEST_CASE("coarser log step is less accurate") {
        const PowerLaw pl{20.0, 1.0, 20.0};
        const auto fine = power_law_exponential_sum(pl, 100.0);
        const auto coarse = power_law_exponential_sum(pl, 100.0, 0.4);
        const double exact0 = pl.h0;
        CHECK(std::abs(fine(0.0) - exact0) < 1e-6 * exact0);
        CHECK(std::abs(coarse(0.0) - exact0) > std::abs(fine(0.0) - exact0));
    }

    TEST_CASE("exponential kernel against the closed form") {
        const double a = 2.0, r = 1.5, dt = 0.01;
        const long steps = 1000;
        const double T = dt * steps;
        KernelConvolver conv(FeedbackKernel(Exponential{a, r}), dt, T, T, SignalShape::PiecewiseLinear);
        CHECK(conv.mode_count() == 1);
        const double exact = a * (r * std::sin(T) - std::cos(T) + std::exp(-r * T)) / (1.0 + r * r);
        CHECK(run_sine(conv, dt, steps) == doctest::Approx(exact).epsilon(1e-4));
    }

    TEST_CASE("power-law convolution converges at second order") {
        const PowerLaw pl{1.0, 1.0, 1.0};
        auto h = [&](double t) { return std::pow(1.0 / (t + 1.0), 2.0); };
        const double T = 20.0;
        const double exact = sine_convolution(h, T);
        double previous = 0.0;
        for (double dt : {0.04, 0.02, 0.01}) {
            KernelConvolver conv(FeedbackKernel(pl), dt, T, T, SignalShape::PiecewiseLinear);
            const double err = std::abs(run_sine(conv, dt, std::lround(T / dt)) - exact);
            CAPTURE(dt);
            CHECK(err < 0.05 * dt * dt);
            if (previous > 0.0) CHECK(err < 0.3 * previous);
            previous = err;
        }
    }

    TEST_CASE("piecewise-constant input integrates the kernel exactly per step") {
        // x = 1 on every step: (h * 1)(T) = int_0^T h.
        const double dt = 0.05, T = 10.0;
        const long steps = std::lround(T / dt);
        KernelConvolver conv(FeedbackKernel(Exponential{1.0, 0.5}), dt, T, T, SignalShape::PiecewiseConstant);
        for (long n = 0; n < steps; ++n) conv.push(1.0);
        CHECK(conv.value() == doctest::Approx((1.0 - std::exp(-0.5 * T)) / 0.5).epsilon(1e-12));
    }

    TEST_CASE("comb kernel acts as delay taps") {
        const double dt = 0.01, T = 6.0;
        const Comb comb{1.0, 1.0, 1.0, 3};
        KernelConvolver conv(FeedbackKernel(comb), dt, T, T, SignalShape::PiecewiseLinear);
        const double got = run_sine(conv, dt, std::lround(T / dt));
        double exact = 0.0;
        for (int n = 1; n <= 3; ++n) exact += std::sin(T - n) / std::pow(n, 2.0);
        CHECK(got == doctest::Approx(exact).epsilon(1e-9));
    }

    TEST_CASE("tabulated kernel follows the history trapezoid") {
        Tabulated tab;
        for (int i = 0; i <= 400; ++i) {
            tab.times.push_back(0.01 * i);
            tab.values.push_back(std::exp(-tab.times.back()));
        }
        const double dt = 0.01, T = 4.0;
        KernelConvolver conv(FeedbackKernel(tab), dt, T, T, SignalShape::PiecewiseLinear);
        const double got = run_sine(conv, dt, std::lround(T / dt));
        const double exact = (std::sin(T) - std::cos(T) + std::exp(-T)) / 2.0;
        CHECK(got == doctest::Approx(exact).epsilon(1e-4));
    }

    TEST_CASE("peek does not commit") {
        const double dt = 0.02;
        KernelConvolver conv(FeedbackKernel(PowerLaw{1.0, 1.0, 1.0}), dt, 10.0, 10.0, SignalShape::PiecewiseLinear);
        conv.start(0.3);
        for (int n = 0; n < 50; ++n) conv.push(std::cos(0.1 * n));
        const double before = conv.value();
        const double guess = conv.peek(0.7);
        CHECK(conv.value() == before);
        conv.push(0.7);
        CHECK(conv.value() == guess);
    }

    TEST_CASE("delta pulse is left to the caller") {
        KernelConvolver conv(FeedbackKernel(std::vector<KernelTerm>{DeltaPulse{0.25}, Exponential{1.0, 1.0}}), 0.01,
                             1.0, 1.0, SignalShape::PiecewiseConstant);
        CHECK(conv.instantaneous_weight() == 0.25);
        conv.push(4.0);
        CHECK(conv.value() == doctest::Approx(4.0 * (1.0 - std::exp(-0.01))).epsilon(1e-12));
    }
}
