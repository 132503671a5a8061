#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fpt/bath.hpp"
#include "fpt/error.hpp"
#include "fpt/power_fit.hpp"

using namespace fpt;
using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

namespace {

template <class F>
Errc code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::IoError;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Exponential cutoff closed forms:
//   int_0^inf v^s e^{-v/c} e^{ivt} dv = Gamma(s+1) (1/c - it)^-(s+1).
double beta_exp_closed(const BathSpec& b, double t) {
    return b.kappa_R / (pi * std::pow(b.omega_c, b.s)) * std::tgamma(b.s + 1.0) *
           std::pow(cplx(1.0 / b.omega_c, -t), -(b.s + 1.0)).imag();
}

double gamma_exp_closed(const BathSpec& b, double t) {
    return 2.0 / pi * b.kappa_R / std::pow(b.omega_c, b.s) * std::tgamma(b.s) *
           std::pow(cplx(1.0 / b.omega_c, -t), -b.s).real();
}

// Midpoint sum with n panels over [0, W].
template <class F>
double riemann(F&& f, double W, long n) {
    const double h = W / static_cast<double>(n);
    double sum = 0.0;
    for (long i = 0; i < n; ++i) sum += f((static_cast<double>(i) + 0.5) * h);
    return sum * h;
}

// The feedback kernel h = beta sampled finely, so that H(w) approximates B(w).
// Interpolation and the power tail leave a few 1e-6 relative.
const FeedbackKernel& sampled_beta_kernel(const BathSpec& b) {
    static const FeedbackKernel kernel = [&] {
        Tabulated tab;
        tab.tail_exponent = b.s + 1.0;
        double t = 0.0;
        while (t < 20.0) {
            tab.times.push_back(t);
            t += 0.002;
        }
        while (t < 4000.0) {
            tab.times.push_back(t);
            t *= 1.0005;
        }
        for (double x : tab.times) tab.values.push_back(beta_kernel(b, x));
        return FeedbackKernel(tab);
    }();
    return kernel;
}

const BathSpec kSubOhmic{0.5, 0.1, 1.0, Cutoff::Exponential};

}  // namespace

TEST_SUITE("bath") {
    TEST_CASE("spectral function") {
        const BathSpec ohmic{1.0, 0.3, 2.0, Cutoff::Hard};
        CHECK(spectral_function(ohmic, 0.0) == 0.0);
        CHECK(rel(spectral_function(ohmic, 1.0), 0.15) < 1e-15);
        CHECK(spectral_function(ohmic, 2.5) == 0.0);
        const BathSpec sub{0.5, 0.3, 2.0, Cutoff::Exponential};
        CHECK(rel(spectral_function(sub, 2.0), 0.3 * std::exp(-1.0)) < 1e-15);
        CHECK(code_of([&] { spectral_function(sub, -0.1); }) == Errc::NegativeFrequency);
        CHECK(code_of([&] { spectral_function(BathSpec{1.0, 0.1, 0.0}, 1.0); }) == Errc::InvalidParameter);
        CHECK(code_of([&] { spectral_function(BathSpec{1.0, -0.1, 1.0}, 1.0); }) == Errc::InvalidParameter);
        for (double w = 0.0; w < 10.0; w += 0.37) {
            CHECK(spectral_function(sub, w) >= 0.0);
            CHECK(bath_noise_spectrum(1.0, sub, w) >= 0.0);
        }
    }

    TEST_CASE("ohmic hard-cutoff beta against the closed form") {
        const BathSpec b{1.0, 0.3, 2.0, Cutoff::Hard};
        CHECK(beta_kernel(b, 0.0) == 0.0);
        for (double t = 0.05; t < 60.0; t *= 1.3) {
            const double c = b.omega_c;
            const double exact = b.kappa_R / (pi * c) * (std::sin(c * t) / (t * t) - c * std::cos(c * t) / t);
            CAPTURE(t);
            CHECK(std::abs(beta_kernel(b, t) - exact) <= 1e-8 * std::abs(exact));
        }
    }

    TEST_CASE("exponential cutoff kernels against closed forms") {
        for (double s : {0.5, 1.0, 2.0}) {
            const BathSpec b{s, 0.3, 2.0, Cutoff::Exponential};
            for (double t : {1e-3, 0.2, 3.0, 40.0, 900.0}) {
                CAPTURE(s);
                CAPTURE(t);
                CHECK(rel(beta_kernel(b, t), beta_exp_closed(b, t)) < 1e-10);
                CHECK(rel(gamma_kernel(b, t), gamma_exp_closed(b, t)) < 1e-10);
            }
        }
    }

    TEST_CASE("kernels agree with brute-force sums") {
        const BathSpec smooth{1.5, 0.3, 2.0, Cutoff::Exponential};
        const BathSpec ohmic{1.0, 0.3, 2.0, Cutoff::Exponential};
        const double W = 40.0 * smooth.omega_c;
        for (double t : {0.3, 2.0, 7.0}) {
            const double b_sum =
                riemann([&](double v) { return spectral_function(smooth, v) * std::sin(v * t); }, W, 1000000) / pi;
            const double g_sum =
                2.0 / pi * riemann([&](double v) { return spectral_function(ohmic, v) / v * std::cos(v * t); }, W, 1000000);
            CAPTURE(t);
            CHECK(rel(beta_kernel(smooth, t), b_sum) < 1e-6);
            CHECK(rel(gamma_kernel(ohmic, t), g_sum) < 1e-6);
        }
    }

    TEST_CASE("sub-ohmic beta decays as t^-(s+1)") {
        std::vector<double> t, beta;
        for (double x = 100.0; x <= 1000.0; x *= 1.2) {
            t.push_back(x);
            beta.push_back(beta_kernel(kSubOhmic, x));
        }
        CHECK(std::abs(loglog_slope(t, beta) + 1.5) < 0.05);
    }

    TEST_CASE("gamma is the antiderivative of -2 beta") {
        for (const BathSpec& b : {kSubOhmic, BathSpec{1.0, 0.3, 2.0, Cutoff::Hard}, BathSpec{2.0, 0.2, 0.5}}) {
            for (double t : {0.1, 0.8, 3.0, 25.0}) {
                const double h = 1e-4 * t;
                const double slope = (gamma_kernel(b, t + h) - gamma_kernel(b, t - h)) / (2.0 * h);
                CAPTURE(t);
                CHECK(std::abs(slope + 2.0 * beta_kernel(b, t)) <= 1e-4 * std::abs(2.0 * beta_kernel(b, t)));
            }
        }
        CHECK(gamma_kernel(BathSpec{1.0, 0.0, 1.0}, 0.5) == 0.0);
    }

    TEST_CASE("ohmic gamma narrows toward a delta as the cutoff grows") {
        // gamma(t) = (2 kappa_R / pi) / (1 + omega_c^2 t^2): width 1/omega_c, area kappa_R / omega_c.
        for (double c : {1.0, 10.0, 100.0}) {
            const BathSpec b{1.0, 0.5 * c, c, Cutoff::Exponential};
            CHECK(rel(gamma_kernel(b, 0.0), 2.0 * b.kappa_R / pi) < 1e-10);
            CHECK(rel(gamma_kernel(b, 1.0 / c), b.kappa_R / pi) < 1e-10);
            CHECK(rel(gamma_kernel(b, 10.0 / c), 2.0 * b.kappa_R / pi / 101.0) < 1e-10);
        }
    }

    TEST_CASE("bath transform structure") {
        const BathSpec none{1.0, 0.0, 1.0};
        CHECK(bath_char_poly(1.0, none, 0.7) == cplx(0.49 - 1.0, 0.0));
        for (double w : {0.2, 0.9, 3.0}) {
            const cplx B = bath_transform(kSubOhmic, w);
            CHECK(B.imag() == -0.5 * spectral_function(kSubOhmic, w));
            CHECK(bath_transform(kSubOhmic, -w) == std::conj(B));
        }
        CHECK(bath_transform(kSubOhmic, 0.0).real() == bath_laplace_transform(kSubOhmic, 0.0));
        // B(0) = (1/pi) int J/v dv = kappa_R Gamma(s) / pi for omega_c = 1.
        CHECK(rel(bath_laplace_transform(kSubOhmic, 0.0), 0.1 * std::tgamma(0.5) / pi) < 1e-10);
    }

    TEST_CASE("bath transform matches the transform of the sampled beta") {
        const auto& k = sampled_beta_kernel(kSubOhmic);
        for (double w : {0.0, 0.3, 0.9, 2.0}) {
            const cplx B = bath_transform(kSubOhmic, w);
            const cplx H = transform(k, w, 1e-11).value;
            CAPTURE(w);
            CHECK(std::abs(B - H) < 1e-5 * std::abs(B));
        }
        for (double l : {0.1, 1.0})
            CHECK(rel(laplace_transform(k, l), bath_laplace_transform(kSubOhmic, l)) < 1e-5);
    }

    TEST_CASE("matched feedback kernel reproduces the bath roots") {
        // delta = 0, theta = pi/2, g = G = 1: the feedback term is exactly 4 omega_R H.
        ModelParams p;
        p.delta = 0.0;
        p.g = 1.0;
        p.G = 1.0;
        CHECK(reduced_coefficients(p).feedback == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(reduced_coefficients(p).omega2 == 1.0);
        const auto feedback = stability_roots(p, sampled_beta_kernel(kSubOhmic));
        const auto bath = bath_stability_roots(1.0, kSubOhmic);
        REQUIRE(feedback.soft_mode_frequency);
        REQUIRE(bath.soft_mode_frequency);
        CHECK(std::abs(*feedback.soft_mode_frequency - *bath.soft_mode_frequency) < 1e-6);
    }

    TEST_CASE("coupling softens the mode and eventually destabilizes it") {
        double previous = 1.0;
        for (double k : {0.01, 0.05, 0.1}) {
            const auto r = bath_stability_roots(1.0, BathSpec{1.0, k, 1.0, Cutoff::Exponential});
            REQUIRE(r.soft_mode_frequency);
            CHECK(*r.soft_mode_frequency < previous);
            previous = *r.soft_mode_frequency;
        }
        // 4 B(0) = 4 kappa_R / pi > omega_R: the real axis root is gone.
        const BathSpec strong{1.0, 1.0, 1.0, Cutoff::Exponential};
        const auto r = bath_stability_roots(1.0, strong);
        REQUIRE(r.growth_rate);
        const double l = *r.growth_rate;
        CHECK(std::abs(-l * l - 1.0 + 4.0 * bath_laplace_transform(strong, l)) < 1e-7);
    }

    TEST_CASE("bath noise spectrum") {
        const BathSpec ohmic{1.0, 0.3, 2.0, Cutoff::Hard};
        CHECK(rel(bath_noise_spectrum(1.5, ohmic, 1.0), 2.0 * pi * 2.25 * 0.3) < 1e-15);
        CHECK(bath_noise_spectrum(1.0, ohmic, -1.0) == 0.0);
        CHECK(bath_noise_spectrum(1.0, BathSpec{1.0, 0.0, 1.0}, 0.5) == 0.0);
    }

    TEST_CASE("feedback kernels map onto sub-ohmic baths") {
        ModelParams p;
        p.G = 0.1;
        for (double s : {0.3, 0.5, 0.9}) {
            const auto m = kernel_bath_map(FeedbackKernel(PowerLaw{s, 1.0, s}), p);
            CAPTURE(s);
            CHECK(std::abs(m.exponent - s) < 0.05);
            CHECK(m.bath.s == m.exponent);
            CHECK(m.bath.kappa_R > 0.0);
            CHECK(m.residual < 1e-3);
        }
        CHECK(code_of([&] { kernel_bath_map(FeedbackKernel(Exponential{1.0, 1.0}), p); }) == Errc::PoorFit);
        p.G = 0.0;
        CHECK(code_of([&] { kernel_bath_map(FeedbackKernel(PowerLaw{0.5, 1.0, 0.5}), p); }) == Errc::InvalidParameter);
    }
}
