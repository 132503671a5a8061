#include <cmath>
#include <random>

#include "fpt/memory.hpp"
#include "fpt/trajectory.hpp"

namespace fpt {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

void check_common(const FeedbackKernel& kernel, const TrajectoryConfig& cfg) {
    require(cfg.dt > 0.0 && std::isfinite(cfg.dt), Errc::InvalidParameter, "dt must be > 0");
    require(cfg.t_max > 0.0, Errc::InvalidParameter, "t_max must be > 0");
    require(cfg.record_stride >= 1, Errc::InvalidParameter, "record_stride must be >= 1");
    if (const auto* pl = kernel.as_power_law())
        require(cfg.memory_horizon >= 20.0 * pl->t0, Errc::InvalidParameter,
                "memory_horizon must be at least 20 t0 for a power-law kernel");
}

}  // namespace

TrajectoryRecord run_reduced(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg) {
    check_common(kernel, cfg);
    const auto c = reduced_coefficients(p);
    const auto steps = static_cast<long>(std::llround(cfg.t_max / cfg.dt));
    const double dt = cfg.dt;

    // Homodyne signal per unit X and the cavity (vacuum) noise reaching the matter.
    const double signal_gain = 2.0 * std::sqrt(2.0 * p.kappa) * (-2.0 * p.g * c.C_theta / c.K);
    const double loop_gain = std::sqrt(2.0 * p.kappa) / 2.0;
    const double c_r = p.kappa * std::cos(p.theta) - p.delta * std::sin(p.theta);
    const double light = -p.omega_R * std::sqrt(p.kappa / 2.0) * 2.0 * p.g / c.K;
    const double force_gain = -p.omega_R * c.effective_gain;

    KernelConvolver hx(kernel, dt, cfg.t_max, cfg.memory_horizon, SignalShape::PiecewiseLinear);
    KernelConvolver hxi(kernel, dt, cfg.t_max, cfg.memory_horizon, SignalShape::PiecewiseConstant);
    const double w0 = hx.instantaneous_weight();

    double X = 0.0, V = 0.0;
    if (const auto* tilt = std::get_if<CoherentTilt>(&cfg.initial_state)) X = tilt->epsilon;
    hx.start(X);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    const double noise_scale = cfg.measurement_noise ? 1.0 / std::sqrt(dt) : 0.0;

    TrajectoryRecord rec;
    rec.seed = cfg.seed;
    const auto reserve = static_cast<std::size_t>(steps / cfg.record_stride + 2);
    for (auto* v : {&rec.times, &rec.X_c, &rec.photocurrent, &rec.I_c, &rec.noise_drive}) v->reserve(reserve);

    // I_c and the stochastic part of the force at one stage of a step.
    struct Stage {
        double I_c, F, accel;
    };
    auto stage = [&](double x, double conv_x, double conv_xi, double xi_m, double xi_o) {
        const double hxi_total = conv_xi + w0 * xi_m;
        const double I = loop_gain * (signal_gain * (conv_x + w0 * x) + hxi_total);
        const double F = light * (c_r * xi_m + c.C_theta * xi_o) + force_gain * loop_gain * hxi_total;
        const double accel = -c.omega2 * x + force_gain * I + light * (c_r * xi_m + c.C_theta * xi_o);
        return Stage{I, F, accel};
    };

    for (long n = 0; n <= steps; ++n) {
        const double xi_m = noise_scale * normal(rng);
        const double xi_o = noise_scale * normal(rng);
        const auto now = stage(X, hx.value(), hxi.value(), xi_m, xi_o);

        if (n % cfg.record_stride == 0) {
            rec.times.push_back(dt * static_cast<double>(n));
            rec.X_c.push_back(X);
            rec.photocurrent.push_back(signal_gain * X + xi_m);
            rec.I_c.push_back(now.I_c);
            rec.noise_drive.push_back(now.F);
        }
        if (n == steps) break;
        if (!(std::abs(X) <= cfg.overflow_guard)) {
            rec.truncated = Errc::BlowUp;
            break;
        }

        // Heun: Euler predictor, trapezoidal corrector; the memory of the
        // predicted sample is re-evaluated at the corrector stage.
        const double X_pred = X + dt * V;
        const double V_pred = V + dt * now.accel;
        const double conv_xi_next = hxi.peek(xi_m);
        const auto pred = stage(X_pred, hx.peek(X_pred), conv_xi_next, xi_m, xi_o);
        X += 0.5 * dt * (V + V_pred);
        V += 0.5 * dt * (now.accel + pred.accel);
        hx.push(X);
        hxi.push(xi_m);
    }
    return rec;
}

TrajectoryRecord run_trajectory(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg) {
    return cfg.engine == Engine::Reduced ? run_reduced(p, kernel, cfg) : run_full_sme(p, kernel, cfg);
}

}  // namespace fpt
