#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fpt/bath.hpp"
#include "fpt/ensemble.hpp"
#include "fpt/kernels.hpp"
#include "fpt/spectral.hpp"
#include "fpt/trajectory.hpp"

namespace fpt {

inline constexpr std::string_view kVersion = "0.1.0";

struct SpectrumRun {
    double omega_min = 0.0;
    double omega_max = 3.0;
    int points = 301;
};

/// Stability roots on a grid of G / G_crit.
struct CriticalScanRun {
    std::vector<double> ratios;
};

/// quadrature_variance on a grid of G / G_crit, optionally with the critical fit.
struct VarianceSweepRun {
    std::vector<double> ratios;
    bool fit = true;
};

struct TrajectoryRun {
    TrajectoryConfig traj;
    bool signal_file = true;  // side file with photocurrent and I_c
};

struct EnsembleRun {
    TrajectoryConfig traj;
    int n_traj = 100;
    Reducer reducer = Reducer::MeanObservable;
    EnsembleOptions options;
};

/// Feedback term K_fb H(w) next to the bath term 4 omega_R B(w). With
/// `map_from_kernel` the bath comes from kernel_bath_map and `bath` is ignored.
struct BathCompareRun {
    BathSpec bath;
    bool map_from_kernel = false;
    double omega_min = 0.01;
    double omega_max = 3.0;
    int points = 300;
};

using RunSpec = std::variant<SpectrumRun, CriticalScanRun, VarianceSweepRun, TrajectoryRun, EnsembleRun, BathCompareRun>;

/// Single-term kernels plus an optional instantaneous DeltaPulse.
struct KernelSpec {
    KernelTerm term = PowerLaw{};
    double delta_weight = 0.0;

    FeedbackKernel build() const;
};

struct ExperimentConfig {
    ModelParams model;
    KernelSpec kernel;
    RunSpec run = SpectrumRun{};
    std::filesystem::path output_dir = ".";
    std::string label = "run";
};

/// Flat `key = value [unit]` text, '#' comments. Frequencies carry the unit
/// omega_R, times 1/omega_R, angles rad; model.G also accepts G_crit, which is
/// resolved against the configured model and kernel. Lists are comma separated.
/// Unknown keys, keys of another run or kernel type, missing or wrong units and
/// malformed values throw ConfigError. `run` (spectrum, critical, variance-sweep,
/// traj, ensemble, bath-compare) stands in for a missing `run` key and must
/// agree with it when both are given.
ExperimentConfig parse_config(std::string_view text, std::string_view run = {});
ExperimentConfig load_config(const std::filesystem::path& file, std::string_view run = {});

/// Canonical text that parse_config maps back to the same configuration.
/// Every number is written with 17 significant digits.
std::string to_config_text(const ExperimentConfig& cfg);

/// The configuration echoed in the '# config' lines of an emitted CSV.
ExperimentConfig config_from_csv_header(std::istream& csv);

std::string_view run_name(const RunSpec& run);

struct RunOptions {
    bool quiet = true;
    bool timestamp = true;
    std::optional<std::uint64_t> seed;  // overrides traj.seed
};

struct RunResult {
    std::vector<std::filesystem::path> files;
    std::vector<std::pair<std::string, double>> info;  // also written as '# info' lines

    std::optional<double> find(std::string_view key) const;
};

/// Dispatches the configured run and writes <output_dir>/<label>.csv plus
/// side files. Throws fpt::Error (IoError for unwritable outputs).
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Machine-readable failure record (one JSON object).
std::string error_record(const Error& e, std::string_view context);

/// fig2a, fig2b, fig3, figS2.
std::vector<ExperimentConfig> preset(std::string_view name);

/// Runs every configuration of a preset into `output_dir`, then writes the
/// preset summary file where there is one (fig3: alpha(s); figS2: order parameter vs G).
RunResult run_preset(std::string_view name, const std::filesystem::path& output_dir, const RunOptions& options = {});

/// Condensate parameters in laboratory units. Frequencies are cyclic kHz
/// (an angular frequency w enters as w / 2pi / 1 kHz), k_1 is in 1/um and
/// m_a in atomic mass units, so that omega_R = hbar k_1^2 / (2 m_a) is
/// converted once, here. kappa is the cavity decay rate in the same units.
struct BecParams {
    double omega_1 = 0.0;
    double omega_pump = 0.0;
    double g_1 = 0.0;
    double Delta_a = 0.0;
    double Omega_pump = 0.0;
    long N_atoms = 1;
    double k_1 = 0.0;
    double m_a = 0.0;
    double V0_scale = 0.0;
    double kappa = 0.0;
};

struct BecMapping {
    ModelParams model;         // dimensionless, omega_R = 1
    double omega_R_kHz = 0.0;  // the unit of every model frequency
    double feedback_scale = 0.0;  // sqrt(N/8): G I(t) = feedback_scale V0(t)
};

/// delta = omega_1 - omega_pump + N g_1^2 / (2 Delta_a), omega_R = k_1^2 / (2 m_a),
/// g = Omega_pump g_1 sqrt(N/2) / Delta_a and G = sqrt(N/8) V0_scale, all divided
/// by omega_R. A negative g (red atomic detuning) is returned as |g| with G
/// negated, the same model after a -> -a. Throws ZeroDetuning for Delta_a = 0.
BecMapping bec_to_model(const BecParams& bec);

/// `bec.<field> = value unit` lines with the units of BecParams.
BecParams parse_bec_config(std::string_view text);

}  // namespace fpt
