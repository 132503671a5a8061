#include "fpt/bath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fpt/error.hpp"
#include "fpt/power_fit.hpp"
#include "fpt/quadrature.hpp"
#include "roots.hpp"

namespace fpt {
namespace {

constexpr double kPi = std::numbers::pi;

// Exponential cutoff: J(W) / kappa_R ~ 60^s e^-60 is far below any tolerance used here.
double support_end(const BathSpec& b) { return b.cutoff == Cutoff::Hard ? b.omega_c : 60.0 * b.omega_c; }

double J(const BathSpec& b, double w) {
    if (w <= 0.0) return 0.0;
    const double x = w / b.omega_c;
    if (b.cutoff == Cutoff::Hard) return x <= 1.0 ? b.kappa_R * std::pow(x, b.s) : 0.0;
    return b.kappa_R * std::pow(x, b.s) * std::exp(-x);
}

// Breakpoints on [0, W]: a geometric ladder toward the w^s corner at zero,
// optional refinement around `focus`, and one panel per half period of
// the oscillation e^{iwt}.
std::vector<double> breakpoints(const BathSpec& b, double t, double focus = -1.0) {
    const double W = support_end(b);
    std::vector<double> pts{0.0, W};
    for (double x = 0.5 * b.omega_c; x > 1e-14 * b.omega_c; x *= 0.25) pts.push_back(x);
    if (b.cutoff == Cutoff::Exponential)
        for (double x = b.omega_c; x < W; x += b.omega_c) pts.push_back(x);
    if (t > 0.0) {
        const double half = kPi / t;
        const double n = std::min(W / half, 4e5);
        const double step = W / std::ceil(n);
        for (double x = step; x < W; x += step) pts.push_back(x);
    }
    if (focus > 0.0 && focus < W)
        for (double d = 0.5 * focus; d > 1e-6 * focus; d *= 0.25) {
            pts.push_back(focus - d);
            if (focus + d < W) pts.push_back(focus + d);
        }
    if (focus > 0.0 && focus < W) pts.push_back(focus);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

template <class F>
double integrate_checked(F&& f, const std::vector<double>& pts, double rel_tol, double scale, const char* what) {
    quad::Tolerance tol;
    tol.relative = rel_tol;
    tol.absolute = 1e-16 * scale;
    tol.max_subdivisions = 200000;
    const auto r = quad::integrate(f, std::span<const double>(pts), tol);
    if (!r.converged) throw Error(Errc::QuadratureNonConvergence, what, r.error);
    return r.value;
}

using cplx = std::complex<double>;

// J continued off the real axis (principal branch of z^s).
cplx J_analytic(const BathSpec& b, cplx z) {
    const cplx x = z / b.omega_c;
    const cplx base = b.kappa_R * std::pow(x, b.s);
    return b.cutoff == Cutoff::Hard ? base : base * std::exp(-x);
}

// F(t) = int_0^inf J(v) v^-m e^{ivt} dv, m = 0 or 1.
// Small t: directly on the real axis. Large t: the real-axis integrand
// oscillates and the result is tiny, so the contour is rotated onto v = iy
// (plus v = omega_c + iy for the hard edge), where it decays as e^{-yt}.
cplx fourier_of_J(const BathSpec& b, double t, int m, double rel_tol) {
    quad::Tolerance tol;
    tol.relative = rel_tol;
    tol.absolute = 1e-300;
    tol.max_subdivisions = 200000;
    auto run = [&](auto&& f, const std::vector<double>& pts) {
        const auto r = quad::integrate(f, std::span<const double>(pts), tol);
        if (!r.converged) throw Error(Errc::QuadratureNonConvergence, "bath kernel quadrature", r.error);
        return r.value;
    };

    if (t * b.omega_c < 10.0) {
        const auto f = [&](double v) -> cplx {
            if (v <= 0.0) return 0.0;
            return J(b, v) * std::pow(v, -m) * std::polar(1.0, v * t);
        };
        return run(f, breakpoints(b, t));
    }

    const double Y = 80.0 / t;
    std::vector<double> pts{0.0, Y};
    for (double y = 0.5 * Y; y > 1e-14 * Y; y *= 0.25) pts.push_back(y);
    for (int k = 1; k < 64; ++k) pts.push_back(Y * k / 64.0);
    std::sort(pts.begin(), pts.end());
    const cplx i(0.0, 1.0);
    const auto up = [&](double y) -> cplx {
        if (y <= 0.0) return 0.0;
        const cplx z = i * y;
        return i * J_analytic(b, z) * std::pow(z, -m) * std::exp(-y * t);
    };
    cplx sum = run(up, pts);
    if (b.cutoff == Cutoff::Hard) {
        const auto edge = [&](double y) -> cplx {
            const cplx z(b.omega_c, y);
            return i * J_analytic(b, z) * std::pow(z, -m) * std::exp(i * z * t);
        };
        sum -= run(edge, pts);
    }
    return sum;
}

}  // namespace

void validate(const BathSpec& b) {
    require(std::isfinite(b.s) && std::isfinite(b.kappa_R) && std::isfinite(b.omega_c), Errc::InvalidParameter,
            "bath parameters must be finite");
    require(b.omega_c > 0.0, Errc::InvalidParameter, "omega_c must be > 0");
    require(b.kappa_R >= 0.0, Errc::InvalidParameter, "kappa_R must be >= 0");
    require(b.s > 0.0, Errc::InvalidParameter, "bath exponent s must be > 0");
}

double spectral_function(const BathSpec& bath, double omega) {
    validate(bath);
    if (omega < 0.0) throw Error(Errc::NegativeFrequency, "J(w) is defined for w >= 0");
    return J(bath, omega);
}

double beta_kernel(const BathSpec& bath, double t, double rel_tol) {
    validate(bath);
    if (t < 0.0) throw Error(Errc::NegativeTime, "beta(t) is causal");
    if (t == 0.0 || bath.kappa_R == 0.0) return 0.0;
    return fourier_of_J(bath, t, 0, rel_tol).imag() / kPi;
}

double gamma_kernel(const BathSpec& bath, double t, double rel_tol) {
    validate(bath);
    if (t < 0.0) throw Error(Errc::NegativeTime, "gamma(t) is causal");
    if (bath.kappa_R == 0.0) return 0.0;
    return 2.0 / kPi * fourier_of_J(bath, t, 1, rel_tol).real();
}

std::complex<double> bath_transform(const BathSpec& bath, double omega, double rel_tol) {
    validate(bath);
    if (bath.kappa_R == 0.0) return 0.0;
    const double w = std::abs(omega);
    if (w == 0.0) return bath_laplace_transform(bath, 0.0, rel_tol);

    const double W = support_end(bath);
    double re = 0.0;
    if (w < W) {
        // PV by subtraction: f(v) = J(v) v / (v + w) is regular at v = w.
        const auto f = [&](double v) { return J(bath, v) * v / (v + w); };
        const double fw = f(w);
        // w is a breakpoint and Kronrod nodes are interior, so v == w is never sampled.
        const auto g = [&](double v) { return (f(v) - fw) / (v - w); };
        re = integrate_checked(g, breakpoints(bath, 0.0, w), rel_tol, bath.kappa_R, "B(w) principal value") +
             fw * std::log((W - w) / w);
    } else {
        const auto g = [&](double v) { return J(bath, v) * v / (v * v - w * w); };
        re = integrate_checked(g, breakpoints(bath, 0.0), rel_tol, bath.kappa_R, "B(w) quadrature");
    }
    const std::complex<double> B(re / kPi, -0.5 * J(bath, w));
    return omega < 0.0 ? std::conj(B) : B;
}

double bath_laplace_transform(const BathSpec& bath, double lambda, double rel_tol) {
    validate(bath);
    require(lambda >= 0.0, Errc::InvalidParameter, "Laplace variable must be >= 0");
    if (bath.kappa_R == 0.0) return 0.0;
    const auto f = [&](double v) { return v > 0.0 ? J(bath, v) * v / (v * v + lambda * lambda) : 0.0; };
    return integrate_checked(f, breakpoints(bath, 0.0), rel_tol, bath.kappa_R, "bath Laplace transform") / kPi;
}

std::complex<double> bath_char_poly(double omega_R, const BathSpec& bath, double omega) {
    require(omega_R > 0.0, Errc::InvalidParameter, "omega_R must be > 0");
    return omega * omega - omega_R * omega_R + 4.0 * omega_R * bath_transform(bath, omega);
}

StabilityRoots bath_stability_roots(double omega_R, const BathSpec& bath, double scan_max, int scan_points) {
    require(scan_max > 0.0 && scan_points >= 2, Errc::InvalidParameter, "scan window must be non-empty");
    StabilityRoots out;
    const double d0 = bath_char_poly(omega_R, bath, 0.0).real();
    if (d0 == 0.0) {
        out.soft_mode_frequency = 0.0;
        return out;
    }
    if (d0 < 0.0) {
        out.soft_mode_frequency = detail::first_root(
            [&](double w) { return bath_char_poly(omega_R, bath, w).real(); }, d0, scan_max, scan_points);
        if (!out.soft_mode_frequency) throw Error(Errc::NoBracket, "Re D(w) has no sign change on the scan window");
        return out;
    }
    out.growth_rate = detail::first_root(
        [&](double l) { return -l * l - omega_R * omega_R + 4.0 * omega_R * bath_laplace_transform(bath, l); }, d0,
        scan_max, scan_points);
    if (!out.growth_rate) throw Error(Errc::NoBracket, "D(-i lambda) has no sign change on the scan window");
    return out;
}

double bath_noise_spectrum(double omega_R, const BathSpec& bath, double omega) {
    validate(bath);
    return 4.0 * kPi * omega_R * omega_R * J(bath, omega);
}

BathMapping kernel_bath_map(const FeedbackKernel& kernel, const ModelParams& params, double omega_lo,
                            double omega_hi, int points) {
    validate(params);
    require(omega_lo > 0.0 && omega_hi > omega_lo && points >= 5, Errc::InvalidParameter,
            "need 0 < omega_lo < omega_hi and >= 5 points");
    const double scale = kernel.time_scale();
    require(scale > 0.0, Errc::InvalidParameter, "kernel has no intrinsic time scale");
    const double feedback = reduced_coefficients(params).feedback;
    require(feedback != 0.0, Errc::InvalidParameter, "no feedback: the map needs G, g and C_theta nonzero");

    std::vector<double> w(static_cast<std::size_t>(points)), Jeff(w.size());
    const double ratio = std::log(omega_hi / omega_lo) / (points - 1);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = omega_lo / scale * std::exp(ratio * static_cast<double>(i));
        Jeff[i] = -feedback * transform(kernel, w[i], 1e-11).value.imag() / (2.0 * params.omega_R);
    }
    const auto fit = fit_power_plus_linear(w, Jeff);

    BathMapping out;
    out.exponent = fit.exponent;
    out.residual = fit.residual;
    out.ohmic_background = fit.linear_coefficient;
    out.bath.s = fit.exponent;
    out.bath.omega_c = 1.0 / scale;
    out.bath.kappa_R = fit.power_coefficient * std::pow(out.bath.omega_c, fit.exponent);
    out.bath.cutoff = Cutoff::Exponential;

    // The power term must carry a visible share of J at the low end of the grid.
    const double power_share = std::abs(fit.power_coefficient * std::pow(w.front(), fit.exponent)) /
                               std::max(std::abs(Jeff.front()), 1e-300);
    if (fit.residual > 1e-3 || fit.exponent > 0.95 || power_share < 0.1 || fit.power_coefficient <= 0.0)
        throw Error(Errc::PoorFit, "dissipative part is not a sub-Ohmic power law on this grid", fit.residual);
    return out;
}

}  // namespace fpt
