#include "fpt/ensemble.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>

namespace fpt {
namespace {

// Best (a, b, offset) for fixed (w, damping); returns the residual vector.
Eigen::VectorXd project(const Eigen::ArrayXd& t, const Eigen::VectorXd& x, double w, double damping,
                        Eigen::Vector3d* coef = nullptr) {
    Eigen::MatrixXd basis(t.size(), 3);
    const Eigen::ArrayXd env = (-damping * t).exp();
    basis.col(0) = (env * (w * t).cos()).matrix();
    basis.col(1) = (env * (w * t).sin()).matrix();
    basis.col(2).setOnes();
    const Eigen::Vector3d c = basis.colPivHouseholderQr().solve(x);
    if (coef) *coef = c;
    return x - basis * c;
}

struct SinusoidResiduals {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const Eigen::ArrayXd& t;
    const Eigen::VectorXd& x;
    double scale;

    int inputs() const { return 2; }
    int values() const { return static_cast<int>(t.size()); }
    int operator()(const Eigen::VectorXd& q, Eigen::VectorXd& r) const {
        r = project(t, x, q(0), q(1)) / scale;
        return 0;
    }
};

}  // namespace

DampedSinusoid fit_damped_sinusoid(std::span<const double> t_in, std::span<const double> x_in) {
    require(t_in.size() == x_in.size() && t_in.size() >= 8, Errc::InvalidParameter, "need >= 8 matched samples");
    const auto n = static_cast<Eigen::Index>(t_in.size());
    const Eigen::ArrayXd t = Eigen::Map<const Eigen::ArrayXd>(t_in.data(), n) - t_in.front();
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x_in.data(), n);
    const double mean = x.mean();

    // Start: spacing of zero crossings of the mean-removed signal.
    std::vector<double> crossings;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double a = x(i - 1) - mean, b = x(i) - mean;
        if ((a < 0.0) != (b < 0.0) && a != b) crossings.push_back(t(i - 1) + (t(i) - t(i - 1)) * a / (a - b));
    }
    if (crossings.size() < 2) throw Error(Errc::PoorFit, "fewer than two zero crossings: not oscillatory");
    const double w0 = std::numbers::pi * static_cast<double>(crossings.size() - 1) / (crossings.back() - crossings.front());

    // Damping start from the envelope in the first and last thirds.
    const Eigen::Index third = n / 3;
    const double early = (x.head(third).array() - mean).abs().maxCoeff();
    const double late = (x.tail(third).array() - mean).abs().maxCoeff();
    const double span = t(n - 1) - t(n - third);
    const double g0 = (early > 0.0 && late > 0.0 && span > 0.0) ? std::log(early / late) / span : 0.0;

    const double scale = std::max(1e-300, (x.array() - mean).matrix().norm());
    SinusoidResiduals f{t, x, scale};
    Eigen::NumericalDiff<SinusoidResiduals> df(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<SinusoidResiduals>> lm(df);
    lm.parameters.maxfev = 400;
    Eigen::VectorXd q(2);
    q << w0, g0;
    lm.minimize(q);

    Eigen::Vector3d coef;
    const Eigen::VectorXd r = project(t, x, q(0), q(1), &coef);
    DampedSinusoid out;
    out.frequency = std::abs(q(0));
    out.damping = q(1);
    out.amplitude = std::hypot(coef(0), coef(1));
    out.offset = coef(2);
    out.residual = r.norm() / scale;
    if (!std::isfinite(out.frequency) || !std::isfinite(out.residual))
        throw Error(Errc::PoorFit, "damped-sinusoid fit diverged");
    return out;
}

GrowthEstimate fit_growth(std::span<const double> t, std::span<const double> x, double window_fraction) {
    require(t.size() == x.size() && window_fraction > 0.0 && window_fraction <= 1.0, Errc::InvalidParameter,
            "matched samples and window_fraction in (0, 1] required");
    const std::size_t first = t.size() - static_cast<std::size_t>(window_fraction * static_cast<double>(t.size()));
    std::vector<double> tt, yy;
    for (std::size_t i = first; i < t.size(); ++i)
        if (x[i] != 0.0 && std::isfinite(x[i])) {
            tt.push_back(t[i]);
            yy.push_back(std::log(std::abs(x[i])));
        }
    if (tt.size() < 3) throw Error(Errc::PoorFit, "too few usable samples for a growth fit");
    const auto m = static_cast<Eigen::Index>(tt.size());
    Eigen::MatrixXd A(m, 2);
    A.col(0).setOnes();
    A.col(1) = Eigen::Map<const Eigen::VectorXd>(tt.data(), m);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yy.data(), m);
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd r = y - A * c;
    GrowthEstimate out;
    out.rate = c(1);
    out.residual = std::sqrt(r.squaredNorm() / static_cast<double>(m));
    const double sxx = (A.col(1).array() - A.col(1).mean()).square().sum();
    out.stderr_rate = m > 2 ? std::sqrt(r.squaredNorm() / static_cast<double>(m - 2) / sxx) : 0.0;
    return out;
}

const std::vector<double>& observable_series(const TrajectoryRecord& rec, Observable which, Engine engine) {
    if (which == Observable::Auto) which = engine == Engine::Reduced ? Observable::X : Observable::Sx;
    switch (which) {
        case Observable::X: return rec.X_c;
        case Observable::Sx: return rec.Sx_c;
        case Observable::Sy: return rec.Sy_c;
        default: return rec.Sz_c;
    }
}

EnsembleSummary ensemble(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg, int n_traj,
                         Reducer reducer, const EnsembleOptions& options) {
    require(n_traj >= 2, Errc::InvalidParameter, "an ensemble needs at least two trajectories");

    struct Slot {
        std::optional<TrajectoryRecord> record;
        std::string error;
        double fitted = std::nan("");
        double damping = std::nan("");
    };
    std::vector<Slot> slots(static_cast<std::size_t>(n_traj));

    auto work = [&](std::size_t i) {
        auto local = cfg;
        local.seed = derive_seed(cfg.seed, i);
        auto& slot = slots[i];
        try {
            auto rec = run_trajectory(p, kernel, local);
            const auto& series = observable_series(rec, options.observable, cfg.engine);
            std::vector<double> tt, xx;
            for (std::size_t k = 0; k < rec.times.size(); ++k)
                if (rec.times[k] >= options.fit_from) {
                    tt.push_back(rec.times[k]);
                    xx.push_back(series[k]);
                }
            if (reducer == Reducer::FrequencyFit) {
                const auto fit = fit_damped_sinusoid(tt, xx);
                slot.fitted = fit.frequency;
                slot.damping = fit.damping;
            } else if (reducer == Reducer::GrowthFit) {
                slot.fitted = fit_growth(tt, xx, options.growth_window).rate;
            } else if (reducer == Reducer::LateAbsMean) {
                if (xx.empty()) throw Error(Errc::InvalidParameter, "no samples after fit_from");
                double acc = 0.0;
                for (double v : xx) acc += std::abs(v);
                slot.fitted = acc / static_cast<double>(xx.size());
            }
            slot.record = std::move(rec);
        } catch (const Error& e) {
            slot.error = e.what();
        }
    };

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n_traj));
    if (threads <= 1) {
        for (std::size_t i = 0; i < slots.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < threads; ++k)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < slots.size(); i = next++) work(i);
            });
    }

    EnsembleSummary out;
    out.n_traj = n_traj;
    for (const auto& slot : slots) {
        if (!slot.record) {
            ++out.failures;
            out.failure_messages.push_back(slot.error);
            continue;
        }
        if (slot.record->truncated) ++out.truncated;
        if (reducer != Reducer::MeanObservable) {
            out.fitted.push_back(slot.fitted);
            if (reducer == Reducer::FrequencyFit) out.fitted_damping.push_back(slot.damping);
        }
    }

    if (reducer == Reducer::MeanObservable) {
        std::vector<double> sum, sum2;
        for (const auto& slot : slots) {
            if (!slot.record) continue;
            const auto& rec = *slot.record;
            const auto& series = observable_series(rec, options.observable, cfg.engine);
            if (rec.times.size() > out.times.size()) {
                out.times = rec.times;
                sum.resize(rec.times.size(), 0.0);
                sum2.resize(rec.times.size(), 0.0);
                out.counts.resize(rec.times.size(), 0);
            }
            for (std::size_t k = 0; k < series.size(); ++k) {
                sum[k] += series[k];
                sum2[k] += series[k] * series[k];
                ++out.counts[k];
            }
        }
        out.mean.resize(out.times.size());
        out.stderr_mean.resize(out.times.size());
        for (std::size_t k = 0; k < out.times.size(); ++k) {
            const double c = out.counts[k];
            out.mean[k] = c > 0 ? sum[k] / c : std::nan("");
            const double var = c > 1 ? (sum2[k] - c * out.mean[k] * out.mean[k]) / (c - 1.0) : 0.0;
            out.stderr_mean[k] = c > 1 ? std::sqrt(std::max(0.0, var) / c) : std::nan("");
        }
    } else if (!out.fitted.empty()) {
        const auto m = static_cast<double>(out.fitted.size());
        double s = 0.0, s2 = 0.0;
        for (double v : out.fitted) s += v;
        out.fitted_mean = s / m;
        for (double v : out.fitted) s2 += (v - out.fitted_mean) * (v - out.fitted_mean);
        out.fitted_spread = m > 1 ? std::sqrt(s2 / (m - 1.0)) : 0.0;
    }
    return out;
}

}  // namespace fpt
