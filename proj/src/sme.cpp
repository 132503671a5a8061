#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <random>

#include "fpt/memory.hpp"
#include "fpt/trajectory.hpp"

namespace fpt {
namespace {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Spin-1/2 (index 0 = up, 1 = down) tensor cavity Fock space.
struct Operators {
    Mat a, n, Sx, Sy, Sz, identity, top;
};

Operators build_operators(int fock_dim) {
    Mat a_c = Mat::Zero(fock_dim, fock_dim);
    for (int k = 1; k < fock_dim; ++k) a_c(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Mat id_c = Mat::Identity(fock_dim, fock_dim);
    const Mat id_s = Mat::Identity(2, 2);
    Mat sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0.0, 0.5, 0.5, 0.0;
    sy << 0.0, cplx(0.0, -0.5), cplx(0.0, 0.5), 0.0;
    sz << 0.5, 0.0, 0.0, -0.5;
    Mat top_c = Mat::Zero(fock_dim, fock_dim);
    top_c(fock_dim - 1, fock_dim - 1) = 1.0;

    Operators op;
    op.a = Eigen::kroneckerProduct(id_s, a_c).eval();
    op.n = op.a.adjoint() * op.a;
    op.Sx = Eigen::kroneckerProduct(sx, id_c).eval();
    op.Sy = Eigen::kroneckerProduct(sy, id_c).eval();
    op.Sz = Eigen::kroneckerProduct(sz, id_c).eval();
    op.identity = Mat::Identity(2 * fock_dim, 2 * fock_dim);
    op.top = Eigen::kroneckerProduct(id_s, top_c).eval();
    return op;
}

Mat static_hamiltonian(const ModelParams& p, const Operators& op) {
    return p.delta * op.n + p.omega_R * op.Sz + 2.0 * p.g * op.Sx * (op.a + op.a.adjoint());
}

Mat initial_density(const TrajectoryConfig& cfg, int fock_dim) {
    double phi = 0.0;
    if (const auto* tilt = std::get_if<CoherentTilt>(&cfg.initial_state)) {
        require(std::abs(tilt->epsilon) <= 0.5, Errc::InvalidParameter, "spin tilt needs |epsilon| <= 1/2");
        phi = std::asin(2.0 * tilt->epsilon);
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(2 * fock_dim);
    psi(0) = std::sin(phi / 2.0);         // |up, 0>
    psi(fock_dim) = std::cos(phi / 2.0);  // |down, 0>
    return psi * psi.adjoint();
}

double expect(const Mat& op, const Mat& rho) { return (op * rho).trace().real(); }

void check_config(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg) {
    require(p.N == 1, Errc::InvalidParameter, "the full SME engine handles a single spin (N = 1)");
    require(cfg.fock_dim >= 2, Errc::InvalidParameter, "fock_dim must be >= 2");
    require(cfg.dt > 0.0 && cfg.dt * p.kappa < 0.1, Errc::InvalidParameter, "dt * kappa must be < 0.1");
    require(cfg.t_max > 0.0 && cfg.record_stride >= 1, Errc::InvalidParameter, "t_max > 0, record_stride >= 1");
    require(!kernel.has_impulses() || [&] {
        for (const auto& t : kernel.terms())
            if (std::holds_alternative<DeltaPulse>(t)) return false;
        return true;
    }(), Errc::InvalidParameter, "a DeltaPulse term would feed back the current measurement instantaneously");
}

}  // namespace

TrajectoryRecord run_full_sme(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg) {
    validate(p);
    check_config(p, kernel, cfg);
    const auto op = build_operators(cfg.fock_dim);
    const Mat H0 = static_hamiltonian(p, op);
    const double dt = cfg.dt;
    const auto steps = static_cast<long>(std::llround(cfg.t_max / dt));

    const Mat c = std::sqrt(2.0 * p.kappa * p.eta) * std::polar(1.0, -p.theta) * op.a;
    const Mat c2 = c * c;
    const Mat x_c = c + c.adjoint();
    const Mat a_lost = std::sqrt(2.0 * p.kappa * (1.0 - p.eta) * dt) * op.a;
    const Mat drift = op.identity - p.kappa * dt * op.n;  // anti-Hermitian part added per step
    const double loop_gain = std::sqrt(2.0 * p.kappa) / 2.0;

    KernelConvolver hJ(kernel, dt, cfg.t_max, cfg.memory_horizon, SignalShape::PiecewiseConstant);
    Mat rho = initial_density(cfg, cfg.fock_dim);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    const double sqdt = cfg.measurement_noise ? std::sqrt(dt) : 0.0;

    TrajectoryRecord rec;
    rec.seed = cfg.seed;
    auto& diag = rec.diagnostics;
    const double pos_shift = 1e-8;

    for (long n = 0; n <= steps; ++n) {
        const double I = loop_gain * hJ.value();
        const double signal = expect(x_c, rho);
        const double dW = sqdt * normal(rng);
        const double dY = signal * dt + dW;

        if (n % cfg.record_stride == 0) {
            rec.times.push_back(dt * static_cast<double>(n));
            rec.Sx_c.push_back(expect(op.Sx, rho));
            rec.Sy_c.push_back(expect(op.Sy, rho));
            rec.Sz_c.push_back(expect(op.Sz, rho));
            rec.photocurrent.push_back(dY / dt);
            rec.I_c.push_back(I);
        }
        if (n == steps) break;

        const Mat H = H0 + (2.0 * p.G * I) * op.Sx;
        const Mat M = drift - cplx(0.0, dt) * H + dY * c + 0.5 * (dY * dY - dt) * c2;
        Mat next = M * rho * M.adjoint();
        if (p.eta < 1.0) next += a_lost * rho * a_lost.adjoint();
        const cplx tr = next.trace();
        if (!std::isfinite(tr.real()) || !(tr.real() > 0.0))
            throw Error(Errc::NonPhysicalState, "trace collapsed; reduce dt");
        rho = next / tr.real();

        if (cfg.check_invariants) {
            diag.max_trace_error = std::max(diag.max_trace_error, std::abs(rho.trace() - 1.0));
            diag.max_hermiticity_error =
                std::max(diag.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
            // Cholesky of rho + shift succeeds iff every eigenvalue exceeds -shift.
            Eigen::LLT<Mat> llt(rho + pos_shift * op.identity);
            if (llt.info() != Eigen::Success) {
                const double lowest = Eigen::SelfAdjointEigenSolver<Mat>(rho, Eigen::EigenvaluesOnly).eigenvalues()(0);
                diag.min_eigenvalue = std::min(diag.min_eigenvalue, lowest);
                throw Error(Errc::NonPhysicalState, "density matrix lost positivity; reduce dt", lowest);
            }
            if (n % cfg.record_stride == 0) {
                const double lowest = Eigen::SelfAdjointEigenSolver<Mat>(rho, Eigen::EigenvaluesOnly).eigenvalues()(0);
                diag.min_eigenvalue = std::min(diag.min_eigenvalue, lowest);
                diag.max_purity = std::max(diag.max_purity, (rho * rho).trace().real());
                const Mat casimir = op.Sx * op.Sx + op.Sy * op.Sy + op.Sz * op.Sz;
                diag.max_spin_casimir_error = std::max(diag.max_spin_casimir_error, std::abs(expect(casimir, rho) - 0.75));
            }
        }
        const double leak = expect(op.top, rho);
        diag.max_top_fock_population = std::max(diag.max_top_fock_population, leak);
        if (leak > cfg.fock_leakage_limit)
            throw Error(Errc::TruncationOverflow, "top Fock level population exceeds the limit; raise fock_dim", leak);

        hJ.push(dY / dt);
    }
    return rec;
}

SpinExpectations master_equation_expectations(const ModelParams& p, const TrajectoryConfig& cfg,
                                              std::span<const double> times) {
    validate(p);
    require(cfg.fock_dim >= 2 && cfg.dt > 0.0, Errc::InvalidParameter, "fock_dim >= 2 and dt > 0 required");
    const auto op = build_operators(cfg.fock_dim);
    const Mat H = static_hamiltonian(p, op);
    const Mat L = std::sqrt(2.0 * p.kappa) * op.a;
    const Mat LdL = L.adjoint() * L;
    auto lindblad = [&](const Mat& r) -> Mat {
        const Mat comm = H * r - r * H;
        return cplx(0.0, -1.0) * comm + L * r * L.adjoint() - 0.5 * (LdL * r + r * LdL);
    };

    Mat rho = initial_density(cfg, cfg.fock_dim);
    SpinExpectations out;
    double t = 0.0;
    for (double target : times) {
        require(target >= t, Errc::InvalidParameter, "times must be nondecreasing and >= 0");
        const auto sub = static_cast<long>(std::ceil((target - t) / cfg.dt - 1e-9));
        const double h = sub > 0 ? (target - t) / static_cast<double>(sub) : 0.0;
        for (long k = 0; k < sub; ++k) {
            const Mat k1 = lindblad(rho);
            const Mat k2 = lindblad(rho + 0.5 * h * k1);
            const Mat k3 = lindblad(rho + 0.5 * h * k2);
            const Mat k4 = lindblad(rho + h * k3);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        t = target;
        out.times.push_back(t);
        out.Sx.push_back(expect(op.Sx, rho));
        out.Sy.push_back(expect(op.Sy, rho));
        out.Sz.push_back(expect(op.Sz, rho));
    }
    return out;
}

}  // namespace fpt
