#pragma once

#include <span>
#include <string>
#include <vector>

#include "fpt/trajectory.hpp"

namespace fpt {

/// x(t) ~ e^{-damping t} (a cos wt + b sin wt) + offset.
struct DampedSinusoid {
    double frequency = 0.0;
    double damping = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double residual = 0.0;  // RMS residual over RMS signal
};

/// Variable projection: (a, b, offset) by linear least squares for each
/// (w, damping), which are refined by Levenberg-Marquardt from a zero-crossing
/// start. Throws PoorFit when fewer than two zero crossings are present.
DampedSinusoid fit_damped_sinusoid(std::span<const double> t, std::span<const double> x);

struct GrowthEstimate {
    double rate = 0.0;
    double stderr_rate = 0.0;
    double residual = 0.0;
};

/// Least-squares slope of log|x| over the last `window_fraction` of the samples.
GrowthEstimate fit_growth(std::span<const double> t, std::span<const double> x, double window_fraction = 0.5);

// LateAbsMean: per-trajectory time average of |observable| over t >= fit_from,
// an order parameter that survives the +-symmetry of the ensemble.
enum class Reducer { MeanObservable, FrequencyFit, GrowthFit, LateAbsMean };
enum class Observable { Auto, X, Sx, Sy, Sz };

struct EnsembleOptions {
    Observable observable = Observable::Auto;  // X for Reduced, Sx for FullSME
    double fit_from = 0.0;                     // ignore samples before this time in fits
    double growth_window = 0.5;
    unsigned threads = 0;                      // 0: hardware concurrency
};

struct EnsembleSummary {
    int n_traj = 0;
    int failures = 0;
    std::vector<std::string> failure_messages;
    int truncated = 0;

    // MeanObservable
    std::vector<double> times, mean, stderr_mean;
    std::vector<int> counts;

    // FrequencyFit / GrowthFit / LateAbsMean: one entry per successful trajectory
    std::vector<double> fitted;
    std::vector<double> fitted_damping;  // FrequencyFit only
    double fitted_mean = 0.0;
    double fitted_spread = 0.0;  // sample standard deviation
};

/// Runs n_traj trajectories with seeds derive_seed(cfg.seed, i) and reduces
/// them. Per-trajectory engine errors are counted, not rethrown. The result
/// does not depend on the thread count.
EnsembleSummary ensemble(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg, int n_traj,
                         Reducer reducer, const EnsembleOptions& options = {});

/// The observable series of a record.
const std::vector<double>& observable_series(const TrajectoryRecord& rec, Observable which, Engine engine);

}  // namespace fpt
