#include "fpt/power_fit.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "fpt/error.hpp"

namespace fpt {
namespace {

struct Projection {
    double cost;
    double a;
    double b;
};

Projection project(std::span<const double> x, std::span<const double> y, double p) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = std::pow(x[i], p) / y[i];
        design(i, 1) = x[i] / y[i];
    }
    const Eigen::Vector2d c = design.colPivHouseholderQr().solve(rhs);
    const double cost = (design * c - rhs).squaredNorm();
    return {cost, c(0), c(1)};
}

}  // namespace

PowerPlusLinear fit_power_plus_linear(std::span<const double> x, std::span<const double> y,
                                      double p_lo, double p_hi) {
    require(x.size() == y.size() && x.size() >= 4, Errc::InvalidParameter,
            "power fit needs at least four matched points");
    for (std::size_t i = 0; i < x.size(); ++i)
        require(x[i] > 0.0 && y[i] != 0.0 && std::isfinite(y[i]), Errc::InvalidParameter,
                "power fit needs positive abscissae and nonzero finite ordinates");

    constexpr int scan = 200;
    double best_p = p_lo;
    double best_cost = project(x, y, p_lo).cost;
    for (int k = 1; k <= scan; ++k) {
        const double p = p_lo + (p_hi - p_lo) * k / scan;
        const double c = project(x, y, p).cost;
        if (c < best_cost) {
            best_cost = c;
            best_p = p;
        }
    }

    const double step = (p_hi - p_lo) / scan;
    double lo = std::max(p_lo, best_p - step);
    double hi = std::min(p_hi, best_p + step);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = hi - ratio * (hi - lo);
    double m2 = lo + ratio * (hi - lo);
    double c1 = project(x, y, m1).cost;
    double c2 = project(x, y, m2).cost;
    while (hi - lo > 1e-12) {
        if (c1 < c2) {
            hi = m2;
            m2 = m1;
            c2 = c1;
            m1 = hi - ratio * (hi - lo);
            c1 = project(x, y, m1).cost;
        } else {
            lo = m1;
            m1 = m2;
            c1 = c2;
            m2 = lo + ratio * (hi - lo);
            c2 = project(x, y, m2).cost;
        }
    }
    const double p = 0.5 * (lo + hi);
    const auto fit = project(x, y, p);
    return {p, fit.a, fit.b, std::sqrt(fit.cost / static_cast<double>(x.size()))};
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, Errc::InvalidParameter,
            "slope needs at least two matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fpt
