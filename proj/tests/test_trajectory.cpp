#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpt/ensemble.hpp"
#include "fpt/error.hpp"
#include "fpt/spectral.hpp"
#include "fpt/trajectory.hpp"
#include "oracles.hpp"

using namespace fpt;

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

TrajectoryConfig sme_config(double dt, double t_max) {
    TrajectoryConfig cfg;
    cfg.engine = Engine::FullSME;
    cfg.dt = dt;
    cfg.t_max = t_max;
    cfg.fock_dim = 6;
    return cfg;
}

// g = 2, kappa = 10: the spin relaxes on a time scale of order one.
ModelParams strong_spin() {
    ModelParams p;
    p.g = 2.0;
    p.kappa = 10.0;
    return p;
}

double tail_mean_square(const std::vector<double>& x, double skip_fraction) {
    const auto first = static_cast<std::size_t>(skip_fraction * static_cast<double>(x.size()));
    double s = 0.0;
    for (std::size_t i = first; i < x.size(); ++i) s += x[i] * x[i];
    return s / static_cast<double>(x.size() - first);
}

}  // namespace

TEST_SUITE("trajectory") {
    TEST_CASE("seed derivation") {
        CHECK(derive_seed(1, 0) == derive_seed(1, 0));
        CHECK(derive_seed(1, 0) != derive_seed(1, 1));
        CHECK(derive_seed(1, 5) != derive_seed(2, 5));
    }

    TEST_CASE("reduced engine is reproducible") {
        ModelParams p;
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        p.G = 0.5 * critical_gain(p, k);
        TrajectoryConfig cfg;
        cfg.t_max = 20.0;
        cfg.seed = 77;
        const auto a = run_reduced(p, k, cfg);
        const auto b = run_reduced(p, k, cfg);
        CHECK(a.X_c == b.X_c);
        CHECK(a.photocurrent == b.photocurrent);
        CHECK(a.seed == 77);
        cfg.seed = 78;
        CHECK(run_reduced(p, k, cfg).X_c != a.X_c);
    }

    TEST_CASE("free oscillation without feedback or noise") {
        ModelParams p;
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        TrajectoryConfig cfg;
        cfg.t_max = 60.0;
        cfg.measurement_noise = false;
        cfg.initial_state = CoherentTilt{1.0};
        const auto rec = run_reduced(p, k, cfg);
        const auto fit = fit_damped_sinusoid(rec.times, rec.X_c);
        const double omega = std::sqrt(1.0 - 4.0 / 10001.0);
        CHECK(fit.frequency == doctest::Approx(omega).epsilon(1e-3));
        CHECK(std::abs(fit.damping) < 1e-3);
        CHECK(rec.X_c.front() == 1.0);
    }

    TEST_CASE("noise-free feedback reproduces the soft-mode root") {
        ModelParams p;
        FeedbackKernel k(PowerLaw{20.0, 1.0, 20.0});
        const double gc = critical_gain(p, k);
        for (double r : {0.5, 0.9}) {
            p.G = r * gc;
            TrajectoryConfig cfg;
            cfg.t_max = 150.0;
            cfg.measurement_noise = false;
            cfg.initial_state = CoherentTilt{1.0};
            const auto rec = run_reduced(p, k, cfg);
            const auto roots = stability_roots(p, k);
            REQUIRE(roots.soft_mode_frequency);
            const auto fit = fit_damped_sinusoid(rec.times, rec.X_c);
            CAPTURE(r);
            CHECK(fit.frequency == doctest::Approx(*roots.soft_mode_frequency).epsilon(5e-3));
            CHECK(fit.damping > 0.0);
        }
    }

    TEST_CASE("stationary variance matches the spectral integral") {
        // The quadrature itself is checked against the Lyapunov solution in the spectral suite.
        ModelParams p;
        FeedbackKernel k(Exponential{1.5, 1.5});
        p.G = 0.5 * critical_gain(p, k);
        const double exact = quadrature_variance(p, k).value;

        TrajectoryConfig cfg;
        cfg.t_max = 20000.0;
        cfg.record_stride = 10;
        double sum = 0.0;
        for (int j = 0; j < 4; ++j) {
            cfg.seed = derive_seed(3, j);
            sum += tail_mean_square(run_reduced(p, k, cfg).X_c, 0.05);
        }
        CHECK(sum / 4.0 == doctest::Approx(exact).epsilon(0.04));
    }

    TEST_CASE("runaway above threshold is truncated") {
        ModelParams p;
        FeedbackKernel k(Exponential{1.0, 1.0});
        p.G = 3.0 * critical_gain(p, k);
        TrajectoryConfig cfg;
        cfg.t_max = 1000.0;
        cfg.overflow_guard = 1e6;
        const auto rec = run_reduced(p, k, cfg);
        REQUIRE(rec.truncated);
        CHECK(*rec.truncated == Errc::BlowUp);
        CHECK(rec.times.back() < cfg.t_max);
    }

    TEST_CASE("configuration errors") {
        ModelParams p;
        FeedbackKernel slow(PowerLaw{1.0, 10.0, 1.0});
        TrajectoryConfig cfg;
        cfg.memory_horizon = 100.0;  // < 20 t0
        CHECK(code_of([&] { run_reduced(p, slow, cfg); }) == Errc::InvalidParameter);

        ModelParams q = strong_spin();
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        auto sme = sme_config(0.02, 1.0);  // dt kappa = 0.2
        CHECK(code_of([&] { run_full_sme(q, k, sme); }) == Errc::InvalidParameter);
        sme.dt = 0.005;
        FeedbackKernel pulse(DeltaPulse{1.0});
        CHECK(code_of([&] { run_full_sme(q, pulse, sme); }) == Errc::InvalidParameter);
        q.N = 2;
        CHECK(code_of([&] { run_full_sme(q, k, sme); }) == Errc::InvalidParameter);
        q.N = 1;
        sme.initial_state = CoherentTilt{0.6};
        CHECK(code_of([&] { run_full_sme(q, k, sme); }) == Errc::InvalidParameter);
    }

    TEST_CASE("SME keeps a physical state under feedback") {
        ModelParams p;
        p.g = 0.1;
        p.kappa = 10.0;
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        p.G = 2.0 * critical_gain(p, k);
        auto cfg = sme_config(0.005, 10.0);
        cfg.fock_dim = 4;
        cfg.seed = 9;
        const auto rec = run_full_sme(p, k, cfg);
        const auto& d = rec.diagnostics;
        CHECK(d.max_trace_error < 1e-12);
        CHECK(d.max_hermiticity_error < 1e-12);
        CHECK(d.min_eigenvalue > -1e-10);
        CHECK(d.max_purity <= 1.0 + 1e-12);
        CHECK(d.max_spin_casimir_error < 1e-10);
        CHECK(d.max_top_fock_population < 1e-6);
        CHECK_FALSE(rec.truncated);
        for (std::size_t i = 0; i < rec.times.size(); ++i) {
            const double r2 = rec.Sx_c[i] * rec.Sx_c[i] + rec.Sy_c[i] * rec.Sy_c[i] + rec.Sz_c[i] * rec.Sz_c[i];
            REQUIRE(r2 <= 0.25 + 1e-12);
        }
    }

    TEST_CASE("uncoupled spin stays in its ground state") {
        ModelParams p = strong_spin();
        p.g = 0.0;
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        const auto rec = run_full_sme(p, k, sme_config(0.005, 5.0));
        for (std::size_t i = 0; i < rec.times.size(); ++i) {
            REQUIRE(rec.Sz_c[i] == doctest::Approx(-0.5).epsilon(1e-12));
            REQUIRE(std::abs(rec.Sx_c[i]) < 1e-12);
        }
    }

    TEST_CASE("Kraus step converges to the master equation at first order") {
        // eta -> 0 removes the measurement back-action: the scheme becomes a
        // deterministic Lindblad integrator.
        ModelParams p = strong_spin();
        p.eta = 1e-12;
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        double previous = 0.0;
        for (double dt : {0.005, 0.0025}) {
            auto cfg = sme_config(dt, 4.0);
            cfg.initial_state = CoherentTilt{0.3};
            cfg.record_stride = static_cast<int>(std::lround(0.2 / dt));
            const auto rec = run_full_sme(p, k, cfg);
            const auto me = master_equation_expectations(p, cfg, rec.times);
            double worst = 0.0;
            for (std::size_t i = 0; i < rec.times.size(); ++i) worst = std::max(worst, std::abs(rec.Sz_c[i] - me.Sz[i]));
            CAPTURE(dt);
            CHECK(worst < 0.25 * dt);
            if (previous > 0.0) CHECK(worst == doctest::Approx(previous / 2.0).epsilon(0.1));
            previous = worst;
        }
    }

    TEST_CASE("SME ensemble mean follows the master equation") {
        ModelParams p = strong_spin();
        FeedbackKernel k(PowerLaw{1.0, 1.0, 1.0});
        auto cfg = sme_config(0.005, 3.0);
        cfg.initial_state = CoherentTilt{0.3};
        cfg.record_stride = 60;
        cfg.seed = 21;
        EnsembleOptions opt;
        opt.observable = Observable::Sz;
        const auto sum = ensemble(p, k, cfg, 200, Reducer::MeanObservable, opt);
        REQUIRE(sum.failures == 0);
        const auto me = master_equation_expectations(p, cfg, sum.times);
        for (std::size_t i = 1; i < sum.times.size(); ++i) {
            CAPTURE(sum.times[i]);
            CHECK(std::abs(sum.mean[i] - me.Sz[i]) < 4.0 * sum.stderr_mean[i]);
        }
    }
}

TEST_SUITE("ensemble") {
    TEST_CASE("damped sinusoid fit on synthetic data") {
        std::vector<double> t, x;
        for (int i = 0; i <= 2000; ++i) {
            t.push_back(0.05 * i);
            x.push_back(std::exp(-0.03 * t.back()) * (0.8 * std::cos(1.3 * t.back()) - 0.4 * std::sin(1.3 * t.back())) +
                        0.1);
        }
        const auto fit = fit_damped_sinusoid(t, x);
        CHECK(fit.frequency == doctest::Approx(1.3).epsilon(1e-8));
        CHECK(fit.damping == doctest::Approx(0.03).epsilon(1e-6));
        CHECK(fit.offset == doctest::Approx(0.1).epsilon(1e-6));
        CHECK(fit.residual < 1e-8);
        std::vector<double> ramp(t.size());
        std::iota(ramp.begin(), ramp.end(), 0.0);
        CHECK(code_of([&] { fit_damped_sinusoid(t, ramp); }) == Errc::PoorFit);
    }

    TEST_CASE("growth fit on synthetic data") {
        std::vector<double> t, x;
        for (int i = 0; i <= 500; ++i) {
            t.push_back(0.1 * i);
            x.push_back(-2.0 * std::exp(0.37 * t.back()) * (1.0 + 0.1 * std::exp(-t.back())));
        }
        const auto fit = fit_growth(t, x);
        CHECK(fit.rate == doctest::Approx(0.37).epsilon(1e-6));
        CHECK(fit.stderr_rate < 1e-6);
    }

    TEST_CASE("thread count does not change the result") {
        ModelParams p;
        FeedbackKernel k(Exponential{1.0, 1.0});
        p.G = 0.5 * critical_gain(p, k);
        TrajectoryConfig cfg;
        cfg.t_max = 20.0;
        cfg.seed = 5;
        EnsembleOptions one, three;
        one.threads = 1;
        three.threads = 3;
        const auto a = ensemble(p, k, cfg, 7, Reducer::MeanObservable, one);
        const auto b = ensemble(p, k, cfg, 7, Reducer::MeanObservable, three);
        CHECK(a.mean == b.mean);
        CHECK(a.stderr_mean == b.stderr_mean);
        CHECK(a.n_traj == 7);
    }

    TEST_CASE("growth reducer above threshold") {
        ModelParams p;
        FeedbackKernel k(PowerLaw{20.0, 1.0, 20.0});
        p.G = 2.0 * critical_gain(p, k);
        const auto roots = stability_roots(p, k);
        REQUIRE(roots.growth_rate);
        TrajectoryConfig cfg;
        cfg.t_max = 40.0;
        cfg.seed = 3;
        cfg.initial_state = CoherentTilt{1000.0};
        cfg.overflow_guard = 1e300;
        const auto sum = ensemble(p, k, cfg, 4, Reducer::GrowthFit);
        REQUIRE(sum.fitted.size() == 4);
        CHECK(sum.fitted_mean == doctest::Approx(*roots.growth_rate).epsilon(0.01));
    }

    TEST_CASE("failed fits are counted, not thrown") {
        ModelParams p;
        FeedbackKernel k(Exponential{1.0, 1.0});
        TrajectoryConfig cfg;
        cfg.t_max = 1.0;  // far less than a period: no zero crossings
        cfg.measurement_noise = false;
        cfg.initial_state = CoherentTilt{1.0};
        const auto sum = ensemble(p, k, cfg, 3, Reducer::FrequencyFit);
        CHECK(sum.failures == 3);
        CHECK(sum.fitted.empty());
        CHECK(sum.failure_messages.size() == 3);
    }
}
