#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <span>
#include <vector>

namespace fpt::quad {

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    long evaluations = 0;
    bool converged = true;
};

struct Tolerance {
    double absolute = 1e-12;
    double relative = 1e-10;
    int max_subdivisions = 20000;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1] (positive half).
inline constexpr std::array<double, 8> kronrod_nodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
    double a, b;
    T value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class T, class F>
Panel<T> kronrod15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const T fc = f(center);
    T kronrod = fc * kronrod_weights[7];
    T gauss = fc * gauss_weights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const T f1 = f(center - dx);
        const T f2 = f(center + dx);
        kronrod += (f1 + f2) * kronrod_weights[j];
        if (j % 2 == 1) gauss += (f1 + f2) * gauss_weights[j / 2];
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod over consecutive panels [p0,p1], [p1,p2], ...
// The panel with the largest error estimate is bisected until the summed
// estimate meets max(absolute, relative*|I|).
template <class F>
auto integrate(F&& f, std::span<const double> breakpoints, const Tolerance& tol = {})
    -> Result<decltype(f(0.0))> {
    using T = decltype(f(0.0));
    Result<T> out;
    if (breakpoints.size() < 2) return out;

    std::priority_queue<detail::Panel<T>> queue;
    T total{};
    double total_error = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (breakpoints[i + 1] == breakpoints[i]) continue;
        auto panel = detail::kronrod15<T>(f, breakpoints[i], breakpoints[i + 1]);
        out.evaluations += 15;
        total += panel.value;
        total_error += panel.error;
        queue.push(panel);
    }

    int subdivisions = 0;
    while (total_error > std::max(tol.absolute, tol.relative * std::abs(total))) {
        if (subdivisions++ >= tol.max_subdivisions || queue.empty()) {
            out.converged = false;
            break;
        }
        const auto worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Panel cannot be split further in floating point; accept it.
            out.converged = false;
            break;
        }
        auto left = detail::kronrod15<T>(f, worst.a, mid);
        auto right = detail::kronrod15<T>(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }

    // Re-sum to shed the drift accumulated by incremental updates.
    T resummed{};
    double resummed_error = 0.0;
    while (!queue.empty()) {
        resummed += queue.top().value;
        resummed_error += queue.top().error;
        queue.pop();
    }
    out.value = resummed;
    out.error = resummed_error;
    return out;
}

template <class F>
auto integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
    const std::array<double, 2> points{a, b};
    return integrate(std::forward<F>(f), std::span<const double>(points), tol);
}

}  // namespace fpt::quad
