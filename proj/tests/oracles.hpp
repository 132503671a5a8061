#pragma once
// Independent reference computations used only by the test suites. Nothing
// here calls into the library's quadrature or transform code.

#include <cmath>
#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace fpt::oracle {

// Composite trapezoid on [a, b] with n panels, one Richardson step (n vs 2n).
template <class F>
auto richardson_trapezoid(F&& f, double a, double b, long n) {
    using T = decltype(f(a));
    auto trap = [&](long m) {
        const double h = (b - a) / static_cast<double>(m);
        T sum = 0.5 * (f(a) + f(b));
        for (long i = 1; i < m; ++i) sum += f(a + h * static_cast<double>(i));
        return sum * h;
    };
    const T coarse = trap(n);
    const T fine = trap(2 * n);
    return fine + (fine - coarse) / 3.0;
}

// Brute-force one-sided transform of h0 (t0/(t+t0))^(s+1) by graded trapezoid
// panels over [0, 1e4 t0], extended when w t0 is small, plus the leading
// integration-by-parts terms at the far end.
inline std::complex<double> power_law_transform_bruteforce(double h0, double t0, double s, double w) {
    using cplx = std::complex<double>;
    auto h = [&](double t) { return h0 * std::pow(t0 / (t + t0), s + 1.0); };
    auto f = [&](double t) { return h(t) * std::exp(cplx(0.0, -w * t)); };
    const double aw = std::abs(w);
    auto panels = [&](double a, double b, double dt_cap) {
        const double dt = std::min(dt_cap * t0, 0.05 / aw);
        const long n = std::max(2L, static_cast<long>(std::ceil((b - a) / dt)));
        return richardson_trapezoid(f, a, b, n);
    };
    cplx sum = panels(0.0, 1.0 * t0, 1e-3) + panels(1.0 * t0, 100.0 * t0, 1e-2) + panels(100.0 * t0, 1e4 * t0, 1.0);
    double end = 1e4 * t0;
    if (aw * end < 1e4) {
        const double far = 1e4 / aw;
        sum += panels(end, far, 100.0);
        end = far;
    }
    const cplx iw(0.0, w);
    const double hp = -(s + 1.0) * h(end) / (end + t0);
    sum += std::exp(cplx(0.0, -w * end)) * (h(end) / iw + hp / (iw * iw));
    return sum;
}

// Stationary <X^2> of the reduced matter equation when h(t) = a e^{-r t}. The
// memory integrals y = h*X and w = h*xi_m become extra Markov states, so the
// covariance solves the Lyapunov equation A P + P A^T + B B^T = 0.
//   dX = V dt
//   dV = (-omega2 X + fb y - c w) dt - n_m dW_m - n_o dW_o
//   dy = (-r y + a X) dt
//   dw = -r w dt + a dW_m
inline double lyapunov_variance(double omega2, double fb, double a, double r, double c, double n_m, double n_o) {
    Eigen::Matrix4d A;
    A << 0, 1, 0, 0,
         -omega2, 0, fb, -c,
         a, 0, -r, 0,
         0, 0, 0, -r;
    Eigen::Matrix<double, 4, 2> B;
    B << 0, 0,
         -n_m, -n_o,
         0, 0,
         a, 0;
    const Eigen::Matrix4d Q = B * B.transpose();
    const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
    // vec(A P + P A^T) = (I (x) A + A (x) I) vec(P)
    Eigen::Matrix<double, 16, 16> L;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) L.block<4, 4>(4 * j, 4 * i) = I(j, i) * A + A(j, i) * I;
    Eigen::Matrix<double, 16, 1> q = -Eigen::Map<const Eigen::Matrix<double, 16, 1>>(Q.data());
    const Eigen::Matrix<double, 16, 1> vecP = L.fullPivLu().solve(q);
    return vecP(0);
}

}  // namespace fpt::oracle
