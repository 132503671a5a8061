#include "fpt/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "config_text.hpp"

namespace fpt {
namespace {

namespace fs = std::filesystem;

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One CSV table: metadata header, column names, rows of %.17e numbers.
class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void row(std::initializer_list<double> values) {
        if (values.size() != columns_.size()) throw Error(Errc::InvalidParameter, "row width mismatch");
        rows_.emplace_back(values);
    }

    fs::path write(const fs::path& file, const std::string& config_text,
                   const std::vector<std::pair<std::string, double>>& info, const RunOptions& options,
                   const std::vector<std::string>& notes = {}) const {
        std::error_code ec;
        fs::create_directories(file.parent_path().empty() ? fs::path(".") : file.parent_path(), ec);
        std::ofstream out(file);
        if (!out) throw Error(Errc::IoError, "cannot write " + file.string());
        out << "# fpt " << kVersion << '\n';
        if (options.timestamp) out << "# timestamp " << timestamp_utc() << '\n';
        for (const auto& n : notes) out << "# " << n << '\n';
        std::size_t start = 0;
        while (start < config_text.size()) {
            const auto end = config_text.find('\n', start);
            out << "# config " << config_text.substr(start, end - start) << '\n';
            start = end + 1;
        }
        for (const auto& [key, v] : info) out << "# info " << key << " = " << detail::format_number(v) << '\n';
        for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
        out << '\n';
        char buf[40];
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17e", r[i]);
                out << (i ? "," : "") << buf;
            }
            out << '\n';
        }
        out.close();
        if (!out) throw Error(Errc::IoError, "write failed for " + file.string());
        if (!options.quiet) std::cerr << "wrote " << file.string() << '\n';
        return file;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double or_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

struct Runner {
    const ExperimentConfig& cfg;
    const RunOptions& options;
    std::string config_text;
    FeedbackKernel kernel;
    RunResult result;

    Runner(const ExperimentConfig& c, const RunOptions& o, std::string text)
        : cfg(c), options(o), config_text(std::move(text)), kernel(c.kernel.build()) {}

    fs::path path(std::string_view suffix = {}) const {
        return cfg.output_dir / (cfg.label + std::string(suffix) + ".csv");
    }
    void emit(const Table& t, std::string_view suffix = {}) {
        result.files.push_back(t.write(path(suffix), config_text, result.info, options));
    }
    void info(std::string key, double v) { result.info.emplace_back(std::move(key), v); }

    void operator()(const SpectrumRun& run) {
        std::vector<double> omegas(static_cast<std::size_t>(run.points));
        for (int i = 0; i < run.points; ++i)
            omegas[i] = run.omega_min + (run.omega_max - run.omega_min) * i / (run.points - 1.0);
        const auto r = analyze(cfg.model, kernel, omegas);
        info("G_crit", or_nan(r.G_crit));
        info("soft_mode_frequency", or_nan(r.soft_mode_frequency));
        info("growth_rate", or_nan(r.growth_rate));
        info("variance", r.variance ? r.variance->value : kNaN);
        Table t({"omega", "Re_D", "Im_D", "S"});
        for (std::size_t i = 0; i < omegas.size(); ++i)
            t.row({omegas[i], r.D_values[i].real(), r.D_values[i].imag(), r.S_values[i]});
        emit(t);
    }

    void operator()(const CriticalScanRun& run) {
        const double Gc = critical_gain(cfg.model, kernel);
        info("G_crit", Gc);
        Table t({"G", "G_over_G_crit", "soft_mode_frequency", "growth_rate"});
        for (double ratio : run.ratios) {
            ModelParams p = cfg.model;
            p.G = ratio * Gc;
            StabilityRoots roots;
            try {
                roots = stability_roots(p, kernel);
            } catch (const Error& e) {
                // A root beyond the scan window is reported as missing, not as a failed run.
                if (e.code() != Errc::NoBracket) throw;
            }
            t.row({p.G, ratio, or_nan(roots.soft_mode_frequency), or_nan(roots.growth_rate)});
        }
        emit(t);
    }

    void operator()(const VarianceSweepRun& run) {
        const double Gc = critical_gain(cfg.model, kernel);
        info("G_crit", Gc);
        std::vector<double> G, var;
        Table t({"G", "variance", "quad_error"});
        for (double ratio : run.ratios) {
            ModelParams p = cfg.model;
            p.G = ratio * Gc;
            const auto v = quadrature_variance(p, kernel);
            G.push_back(p.G);
            var.push_back(v.value);
            t.row({p.G, v.value, v.error});
        }
        if (run.fit) {
            const auto fit = fit_critical_exponent(G, var, Gc);
            info("alpha", fit.alpha);
            info("alpha_stderr", fit.alpha_stderr);
            Table f({"A", "B", "alpha", "G_crit", "residual", "alpha_stderr"});
            f.row({fit.A, fit.B, fit.alpha, fit.G_crit_used, fit.residual, fit.alpha_stderr});
            emit(t);
            emit(f, "_fit");
        } else {
            emit(t);
        }
    }

    TrajectoryConfig seeded(TrajectoryConfig t) const {
        if (options.seed) t.seed = *options.seed;
        return t;
    }

    void operator()(const TrajectoryRun& run) {
        const auto tc = seeded(run.traj);
        const auto rec = run_trajectory(cfg.model, kernel, tc);
        info("seed", static_cast<double>(rec.seed));
        info("truncated", rec.truncated ? 1.0 : 0.0);
        if (tc.engine == Engine::FullSME) {
            info("min_eigenvalue", rec.diagnostics.min_eigenvalue);
            info("max_trace_error", rec.diagnostics.max_trace_error);
            info("max_top_fock_population", rec.diagnostics.max_top_fock_population);
            Table t({"t", "Sx_c", "Sy_c", "Sz_c"});
            for (std::size_t k = 0; k < rec.times.size(); ++k)
                t.row({rec.times[k], rec.Sx_c[k], rec.Sy_c[k], rec.Sz_c[k]});
            emit(t);
        } else {
            Table t({"t", "X_c"});
            for (std::size_t k = 0; k < rec.times.size(); ++k) t.row({rec.times[k], rec.X_c[k]});
            emit(t);
        }
        if (run.signal_file) {
            Table s({"t", "photocurrent", "I_c"});
            for (std::size_t k = 0; k < rec.times.size(); ++k) s.row({rec.times[k], rec.photocurrent[k], rec.I_c[k]});
            emit(s, "_signal");
        }
    }

    void operator()(const EnsembleRun& run) {
        const auto tc = seeded(run.traj);
        const auto sum = ensemble(cfg.model, kernel, tc, run.n_traj, run.reducer, run.options);
        info("n_traj", sum.n_traj);
        info("failures", sum.failures);
        info("truncated", sum.truncated);
        if (run.reducer == Reducer::MeanObservable) {
            Table t({"t", "mean", "stderr", "count"});
            for (std::size_t k = 0; k < sum.times.size(); ++k)
                t.row({sum.times[k], sum.mean[k], sum.stderr_mean[k], static_cast<double>(sum.counts[k])});
            emit(t);
            return;
        }
        const double m = static_cast<double>(sum.fitted.size());
        info("fitted_mean", sum.fitted_mean);
        info("fitted_spread", sum.fitted_spread);
        info("fitted_stderr", m > 1 ? sum.fitted_spread / std::sqrt(m) : kNaN);
        if (run.reducer == Reducer::FrequencyFit) {
            Table t({"index", "frequency", "damping"});
            for (std::size_t i = 0; i < sum.fitted.size(); ++i)
                t.row({static_cast<double>(i), sum.fitted[i], sum.fitted_damping[i]});
            emit(t);
        } else {
            Table t({"index", run.reducer == Reducer::GrowthFit ? "growth_rate" : "late_abs_mean"});
            for (std::size_t i = 0; i < sum.fitted.size(); ++i) t.row({static_cast<double>(i), sum.fitted[i]});
            emit(t);
        }
    }

    void operator()(const BathCompareRun& run) {
        BathSpec bath = run.bath;
        double ohmic = 0.0;
        if (run.map_from_kernel) {
            const auto map = kernel_bath_map(kernel, cfg.model);
            bath = map.bath;
            ohmic = map.ohmic_background;
            info("map_residual", map.residual);
        }
        info("bath_s", bath.s);
        info("bath_kappa_R", bath.kappa_R);
        info("bath_omega_c", bath.omega_c);
        info("ohmic_background", ohmic);
        const double Kfb = reduced_coefficients(cfg.model).feedback;
        const double wR = cfg.model.omega_R;
        Table t({"omega", "feedback_Re", "feedback_Im", "bath_Re", "bath_Im", "S_feedback", "S_bath"});
        for (int i = 0; i < run.points; ++i) {
            const double w = run.omega_min + (run.omega_max - run.omega_min) * i / (run.points - 1.0);
            const auto fb = Kfb * eval_H(kernel, w);
            const auto bt = 4.0 * wR * bath_transform(bath, w);
            const double Sb = w >= 0.0 ? bath_noise_spectrum(wR, bath, w) : 0.0;
            t.row({w, fb.real(), fb.imag(), bt.real(), bt.imag(), noise_spectrum(cfg.model, kernel, w), Sb});
        }
        emit(t);
    }
};

}  // namespace

std::optional<double> RunResult::find(std::string_view key) const {
    for (const auto& [k, v] : info)
        if (k == key) return v;
    return std::nullopt;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    ExperimentConfig echoed = cfg;
    // The echo records the seed actually used.
    if (options.seed) {
        if (auto* t = std::get_if<TrajectoryRun>(&echoed.run)) t->traj.seed = *options.seed;
        if (auto* e = std::get_if<EnsembleRun>(&echoed.run)) e->traj.seed = *options.seed;
    }
    Runner runner(cfg, options, to_config_text(echoed));
    std::visit(runner, cfg.run);
    return std::move(runner.result);
}

std::string error_record(const Error& e, std::string_view context) {
    nlohmann::json j;
    j["status"] = "error";
    j["code"] = std::string(to_string(e.code()));
    j["message"] = e.what();
    j["estimate"] = e.estimate();
    j["context"] = std::string(context);
    return j.dump();
}

namespace {

ModelParams fig2_model() {
    ModelParams m;
    m.delta = 1.0;
    m.omega_R = 1.0;
    m.g = 1.0;
    m.kappa = 100.0;
    return m;
}

// h(0) = s with t0 = 1 puts H(0) = 1 for every s.
KernelSpec unit_weight_power_law(double s) { return KernelSpec{PowerLaw{s, 1.0, s}, 0.0}; }

std::string ratio_label(std::string_view stem, double r) {
    return std::string(stem) + "_G" + detail::format_number(r);
}

std::vector<ExperimentConfig> fig2_trajectories(std::string_view stem, double s, double t_max) {
    std::vector<ExperimentConfig> out;
    for (double ratio : {0.5, 1.5}) {
        ExperimentConfig c;
        c.model = fig2_model();
        c.kernel = unit_weight_power_law(s);
        c.model.G = ratio * critical_gain(c.model, c.kernel.build());
        TrajectoryRun run;
        run.traj.dt = 0.01;
        run.traj.t_max = t_max;
        run.traj.memory_horizon = t_max;
        run.traj.seed = 2;
        c.run = run;
        c.label = ratio_label(stem, ratio);
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::vector<ExperimentConfig> preset(std::string_view name) {
    if (name == "fig2a") return fig2_trajectories("fig2a", 0.5, 200.0);
    if (name == "fig2b") return fig2_trajectories("fig2b", 20.0, 60.0);
    if (name == "fig3") {
        std::vector<ExperimentConfig> out;
        for (double s : {0.5, 1.0, 2.0, 5.0, 20.0}) {
            ExperimentConfig c;
            c.model = fig2_model();
            c.kernel = unit_weight_power_law(s);
            c.run = VarianceSweepRun{default_sweep_ratios(), true};
            c.label = "fig3_s" + detail::format_number(s);
            out.push_back(c);
        }
        return out;
    }
    if (name == "figS2") {
        std::vector<ExperimentConfig> out;
        ModelParams m;
        m.delta = 1.0;
        m.omega_R = 1.0;
        m.g = 0.1;
        m.kappa = 10.0;
        const KernelSpec k{PowerLaw{1.0, 1.0, 1.0}, 0.0};
        const double Gc = critical_gain(m, k.build());
        for (double ratio : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            ExperimentConfig c;
            c.model = m;
            c.model.G = ratio * Gc;
            c.kernel = k;
            EnsembleRun run;
            run.traj.engine = Engine::FullSME;
            run.traj.dt = 0.005;
            run.traj.t_max = 40.0;
            run.traj.memory_horizon = 40.0;
            run.traj.seed = 7;
            run.traj.record_stride = 10;
            run.n_traj = 100;
            run.reducer = Reducer::LateAbsMean;
            run.options.observable = Observable::Sx;
            run.options.fit_from = 20.0;
            c.run = run;
            c.label = ratio_label("figS2", ratio);
            out.push_back(c);
        }
        return out;
    }
    throw Error(Errc::ConfigError, "unknown preset '" + std::string(name) + "' (fig2a, fig2b, fig3, figS2)");
}

RunResult run_preset(std::string_view name, const fs::path& output_dir, const RunOptions& options) {
    auto configs = preset(name);
    RunResult all;
    Table summary(name == "fig3" ? std::vector<std::string>{"s", "alpha", "alpha_stderr", "G_crit"}
                                 : std::vector<std::string>{"G", "G_over_G_crit", "mean_abs_Sx", "stderr"});
    std::vector<std::string> notes{"preset " + std::string(name)};
    for (auto& c : configs) {
        c.output_dir = output_dir;
        const auto r = run_experiment(c, options);
        all.files.insert(all.files.end(), r.files.begin(), r.files.end());
        if (name == "fig3") {
            const auto& pl = std::get<PowerLaw>(c.kernel.term);
            summary.row({pl.s, *r.find("alpha"), *r.find("alpha_stderr"), *r.find("G_crit")});
        } else if (name == "figS2") {
            const double Gc = critical_gain(c.model, c.kernel.build());
            summary.row({c.model.G, c.model.G / Gc, *r.find("fitted_mean"), *r.find("fitted_stderr")});
        }
        notes.push_back("member " + c.label);
    }
    if (name == "fig3" || name == "figS2") {
        // No config echo here: each member file carries its own, and the summary is
        // reproduced by rerunning the preset.
        all.files.push_back(summary.write(output_dir / (std::string(name) + "_summary.csv"), "", {}, options, notes));
    }
    return all;
}

}  // namespace fpt
