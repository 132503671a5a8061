#include "fpt/spectral.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpt/error.hpp"
#include "fpt/quadrature.hpp"
#include "roots.hpp"

namespace fpt {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Transform accuracy used inside the spectral functions. Near threshold D is
// a small difference, so H is requested tighter than the final results.
constexpr double kTransformTol = 1e-10;

cplx H_of(const FeedbackKernel& kernel, double omega) { return transform(kernel, omega, kTransformTol).value; }

double spectrum_from_H(const ModelParams& p, const ReducedCoefficients& c, cplx H) {
    const cplx phase = std::polar(1.0, -p.theta);
    const cplx amp = 2.0 * p.g + c.effective_gain * cplx(p.kappa, -p.delta) * phase * H;
    return kPi * p.omega_R * p.omega_R * p.kappa / c.K * std::norm(amp);
}

}  // namespace

void validate(const ModelParams& p) {
    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(p.delta) && finite(p.omega_R) && finite(p.g) && finite(p.kappa) && finite(p.G) &&
                finite(p.theta) && finite(p.eta),
            Errc::InvalidParameter, "model parameters must be finite");
    require(p.kappa > 0.0, Errc::InvalidParameter, "kappa must be > 0");
    require(p.omega_R > 0.0, Errc::InvalidParameter, "omega_R must be > 0");
    require(p.g >= 0.0, Errc::InvalidParameter, "g must be >= 0");
    require(p.eta > 0.0 && p.eta <= 1.0, Errc::InvalidParameter, "eta must lie in (0, 1]");
    require(p.N >= 1, Errc::InvalidParameter, "N must be >= 1");
}

ReducedCoefficients reduced_coefficients(const ModelParams& p) {
    validate(p);
    ReducedCoefficients c;
    c.K = p.kappa * p.kappa + p.delta * p.delta;
    c.C_theta = p.delta * std::cos(p.theta) + p.kappa * std::sin(p.theta);
    c.effective_gain = std::sqrt(p.eta) * p.G;
    c.omega2 = p.omega_R * p.omega_R - 4.0 * p.omega_R * p.g * p.g * p.delta / c.K;
    c.feedback = 4.0 * p.omega_R * c.effective_gain * p.g * p.kappa * c.C_theta / c.K;
    return c;
}

cplx char_poly(const ModelParams& p, const FeedbackKernel& kernel, double omega) {
    const auto c = reduced_coefficients(p);
    const cplx fb = c.feedback == 0.0 ? cplx{} : c.feedback * H_of(kernel, omega);
    return omega * omega - c.omega2 + fb;
}

double char_poly_growth(const ModelParams& p, const FeedbackKernel& kernel, double lambda) {
    const auto c = reduced_coefficients(p);
    const double fb = c.feedback == 0.0 ? 0.0 : c.feedback * laplace_transform(kernel, lambda);
    return -lambda * lambda - c.omega2 + fb;
}

double noise_spectrum(const ModelParams& p, const FeedbackKernel& kernel, double omega) {
    const auto c = reduced_coefficients(p);
    const cplx H = c.effective_gain == 0.0 ? cplx{} : H_of(kernel, omega);
    return spectrum_from_H(p, c, H);
}

double symmetrized_noise_spectrum(const ModelParams& p, const FeedbackKernel& kernel, double omega) {
    const auto c = reduced_coefficients(p);
    const cplx H = c.effective_gain == 0.0 ? cplx{} : H_of(kernel, omega);
    return 0.5 * (spectrum_from_H(p, c, H) + spectrum_from_H(p, c, std::conj(H)));
}

double critical_gain(const ModelParams& p, const FeedbackKernel& kernel) {
    const auto c = reduced_coefficients(p);
    const double H0 = zero_frequency_weight(kernel);
    const double denom = 4.0 * p.g * p.kappa * c.C_theta * H0 * std::sqrt(p.eta);
    // C_theta below rounding level counts as zero: the homodyne angle is orthogonal.
    const bool orthogonal = std::abs(c.C_theta) <= 1e-13 * std::sqrt(c.K);
    require(denom != 0.0 && !orthogonal, Errc::DegenerateGeometry, "g * C_theta * H(0) vanishes: no finite critical gain");
    return (p.omega_R * c.K - 4.0 * p.g * p.g * p.delta) / denom;
}

StabilityRoots stability_roots(const ModelParams& p, const FeedbackKernel& kernel, double scan_max,
                               int scan_points) {
    require(scan_max > 0.0 && scan_points >= 2, Errc::InvalidParameter, "scan window must be non-empty");
    StabilityRoots out;
    const double d0 = char_poly(p, kernel, 0.0).real();
    if (d0 == 0.0) {
        out.soft_mode_frequency = 0.0;
        return out;
    }
    if (d0 < 0.0) {
        out.soft_mode_frequency =
            detail::first_root([&](double w) { return char_poly(p, kernel, w).real(); }, d0, scan_max, scan_points);
        if (!out.soft_mode_frequency)
            throw Error(Errc::NoBracket, "Re D(w) has no sign change on the real scan window");
        return out;
    }
    out.growth_rate =
        detail::first_root([&](double l) { return char_poly_growth(p, kernel, l); }, d0, scan_max, scan_points);
    if (!out.growth_rate) throw Error(Errc::NoBracket, "D(-i lambda) has no sign change on the growth scan window");
    return out;
}

VarianceValue quadrature_variance(const ModelParams& p, const FeedbackKernel& kernel) {
    const auto c = reduced_coefficients(p);
    if (p.g == 0.0 && c.effective_gain == 0.0) return {};  // no noise enters at all

    const auto roots = stability_roots(p, kernel);
    if (!roots.soft_mode_frequency)
        throw Error(Errc::UnstableRegime, "gain at or above threshold: fluctuations grow without bound");
    const double w_star = *roots.soft_mode_frequency;
    if (w_star == 0.0) throw Error(Errc::UnstableRegime, "soft mode at zero frequency: critical point");

    // Damping of the soft mode. Without it D has a real zero and the
    // integral diverges; with the wrong sign the mode grows.
    const double im_d = c.feedback * H_of(kernel, w_star).imag();
    if (!(im_d < 0.0))
        throw Error(Errc::UnstableRegime, "soft mode is undamped or anti-damped; variance is not stationary");
    const double width = -im_d / (2.0 * w_star);

    auto integrand = [&](double w) {
        const cplx H = c.feedback == 0.0 && c.effective_gain == 0.0 ? cplx{} : H_of(kernel, w);
        const cplx d_pos = w * w - c.omega2 + c.feedback * H;
        const cplx d_neg = w * w - c.omega2 + c.feedback * std::conj(H);
        return spectrum_from_H(p, c, H) / std::norm(d_pos) + spectrum_from_H(p, c, std::conj(H)) / std::norm(d_neg);
    };

    // Panels resolve the Lorentzian-like peak at the soft mode and the slow
    // non-analytic structure of H near w = 0 on a logarithmic ladder.
    const double upper = std::max(50.0 * p.omega_R, 20.0 * w_star);
    std::vector<double> pts{0.0, upper};
    for (double k : {-20.0, -5.0, -2.0, -1.0, -0.3, 0.0, 0.3, 1.0, 2.0, 5.0, 20.0}) {
        const double w = w_star + k * width;
        if (w > 0.0 && w < upper) pts.push_back(w);
    }
    for (double w = 1e-6 * w_star; w < upper; w *= 4.0) pts.push_back(w);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    quad::Tolerance tol;
    tol.absolute = 0.0;
    tol.relative = 1e-7;
    tol.max_subdivisions = 4000;
    const auto body = quad::integrate(integrand, std::span<const double>(pts), tol);

    // Beyond `upper` |D| ~ w^2 and S is nearly flat: int_W^inf S/w^4 = S/(3 W^3) per side.
    const double tail = integrand(upper) * upper / 3.0;

    VarianceValue out;
    out.value = (body.value + tail) / (4.0 * kPi * kPi);
    out.error = (body.error + 0.05 * tail) / (4.0 * kPi * kPi);
    if (!body.converged || out.error > 1e-4 * out.value)
        throw Error(Errc::QuadratureNonConvergence, "variance integral did not reach 1e-4 relative",
                    out.error / out.value);
    return out;
}

SpectralResult analyze(const ModelParams& p, const FeedbackKernel& kernel, std::span<const double> omegas) {
    SpectralResult r;
    r.omega.assign(omegas.begin(), omegas.end());
    for (double w : omegas) {
        r.D_values.push_back(char_poly(p, kernel, w));
        r.S_values.push_back(noise_spectrum(p, kernel, w));
    }
    try {
        r.G_crit = critical_gain(p, kernel);
    } catch (const Error& e) {
        if (e.code() != Errc::DegenerateGeometry) throw;
    }
    try {
        const auto roots = stability_roots(p, kernel);
        r.soft_mode_frequency = roots.soft_mode_frequency;
        r.growth_rate = roots.growth_rate;
    } catch (const Error& e) {
        if (e.code() != Errc::NoBracket) throw;
    }
    try {
        r.variance = quadrature_variance(p, kernel);
    } catch (const Error& e) {
        if (e.code() != Errc::UnstableRegime && e.code() != Errc::NoBracket) throw;
    }
    return r;
}

namespace {

// Relative residuals (y - m) / m of m = A u^-alpha + B, u = 1 - G/G_crit.
// Parameters: x = (log A, alpha[, B]).
struct CriticalResiduals {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const Eigen::VectorXd& u;
    const Eigen::VectorXd& y;
    bool free_offset;

    int inputs() const { return free_offset ? 3 : 2; }
    int values() const { return static_cast<int>(u.size()); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        const double B = free_offset ? x(2) : 0.0;
        const Eigen::ArrayXd m = std::exp(x(0)) * u.array().pow(-x(1)) + B;
        r = (y.array() / m - 1.0).matrix();
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
        const double B = free_offset ? x(2) : 0.0;
        const Eigen::ArrayXd power = std::exp(x(0)) * u.array().pow(-x(1));
        const Eigen::ArrayXd m = power + B;
        const Eigen::ArrayXd scale = -y.array() / (m * m);
        J.resize(values(), inputs());
        J.col(0) = (scale * power).matrix();
        J.col(1) = (scale * -power * u.array().log()).matrix();
        if (free_offset) J.col(2) = scale.matrix();
        return 0;
    }
};

struct LmOutcome {
    Eigen::VectorXd x;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    bool ok = false;
};

LmOutcome run_lm(CriticalResiduals f, Eigen::VectorXd x) {
    Eigen::LevenbergMarquardt<CriticalResiduals> lm(f);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    const auto status = lm.minimize(x);
    LmOutcome out;
    out.x = x;
    out.r.resize(f.values());
    f(x, out.r);
    f.df(x, out.J);
    using S = Eigen::LevenbergMarquardtSpace::Status;
    out.ok = status == S::RelativeReductionTooSmall || status == S::RelativeErrorTooSmall ||
             status == S::RelativeErrorAndReductionTooSmall || status == S::CosinusTooSmall ||
             status == S::XtolTooSmall || status == S::FtolTooSmall || status == S::GtolTooSmall;
    out.ok = out.ok && out.r.allFinite();
    return out;
}

}  // namespace

CriticalFit fit_critical_exponent(std::span<const double> G, std::span<const double> variance, double G_crit) {
    require(G.size() == variance.size(), Errc::InvalidParameter, "G and variance must have equal length");
    require(G_crit > 0.0, Errc::InvalidParameter, "G_crit must be > 0");
    const auto n = static_cast<Eigen::Index>(G.size());
    if (n < 8) throw Error(Errc::DegenerateData, "need at least 8 points");

    Eigen::VectorXd u(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        u(i) = std::abs(1.0 - G[i] / G_crit);
        y(i) = variance[i];
        if (!(u(i) > 0.0) || !(y(i) > 0.0) || !std::isfinite(y(i)))
            throw Error(Errc::DegenerateData, "points must lie off the critical gain with positive variance");
    }
    const double spread = y.maxCoeff() - y.minCoeff();
    if (!(spread > 1e-12 * y.cwiseAbs().maxCoeff()))
        throw Error(Errc::DegenerateData, "flat curve: no divergent component");

    // Starting point from finite differences: dy/du ~ -alpha A u^-(alpha+1).
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return u(a) < u(b); });
    Eigen::MatrixXd design(n - 1, 2);
    Eigen::VectorXd rhs(n - 1);
    Eigen::Index rows = 0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const auto i = order[k], j = order[k + 1];
        const double du = u(j) - u(i);
        const double dy = y(i) - y(j);
        if (du <= 0.0 || dy <= 0.0) continue;
        design(rows, 0) = 1.0;
        design(rows, 1) = std::log(std::sqrt(u(i) * u(j)));
        rhs(rows) = std::log(dy / du);
        ++rows;
    }
    double alpha0 = 1.0, logA0 = std::log(y.maxCoeff() * std::pow(u.minCoeff(), alpha0));
    if (rows >= 2) {
        const Eigen::VectorXd coef =
            design.topRows(rows).colPivHouseholderQr().solve(rhs.head(rows));
        alpha0 = std::clamp(-coef(1) - 1.0, 0.05, 5.0);
        logA0 = coef(0) - std::log(alpha0);
    }
    const double B0 = std::max(0.0, (y.array() - std::exp(logA0) * u.array().pow(-alpha0)).minCoeff());

    CriticalResiduals free_f{u, y, true};
    Eigen::VectorXd x0(3);
    x0 << logA0, alpha0, B0;
    auto fit = run_lm(free_f, x0);
    bool offset_free = true;
    if (!fit.ok || fit.x(2) < 0.0) {
        // Offset hits its bound: refit with B pinned at zero.
        CriticalResiduals pinned{u, y, false};
        fit = run_lm(pinned, x0.head(2));
        offset_free = false;
    }
    if (!fit.ok) throw Error(Errc::NonConvergence, "critical-exponent fit did not converge");

    CriticalFit out;
    out.A = std::exp(fit.x(0));
    out.alpha = fit.x(1);
    out.B = offset_free ? fit.x(2) : 0.0;
    out.G_crit_used = G_crit;
    out.residual = std::sqrt(fit.r.squaredNorm() / static_cast<double>(n));
    if (!(out.A > 0.0) || !std::isfinite(out.alpha))
        throw Error(Errc::DegenerateData, "fit collapsed to a vanishing amplitude");

    const auto dof = static_cast<double>(n - fit.x.size());
    const double sigma2 = dof > 0.0 ? fit.r.squaredNorm() / dof : 0.0;
    const Eigen::MatrixXd JtJ = fit.J.transpose() * fit.J;
    const Eigen::MatrixXd cov = JtJ.completeOrthogonalDecomposition().pseudoInverse() * sigma2;
    out.alpha_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
    return out;
}

}  // namespace fpt
