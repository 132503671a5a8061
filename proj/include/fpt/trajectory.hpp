#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fpt/error.hpp"
#include "fpt/kernels.hpp"
#include "fpt/spectral.hpp"

namespace fpt {

enum class Engine { Reduced, FullSME };

struct GroundState {};

/// Reduced engine: X(0) = epsilon. FullSME: spin tilted toward +x so that
/// <S_x>(0) = epsilon (|epsilon| <= 1/2).
struct CoherentTilt {
    double epsilon = 0.0;
};

using InitialState = std::variant<GroundState, CoherentTilt>;

struct TrajectoryConfig {
    Engine engine = Engine::Reduced;
    double dt = 0.01;
    double t_max = 100.0;
    std::uint64_t seed = 1;
    int fock_dim = 6;
    double memory_horizon = 100.0;
    InitialState initial_state = GroundState{};
    bool measurement_noise = true;
    int record_stride = 1;
    double overflow_guard = 1e12;
    double fock_leakage_limit = 1e-6;
    bool check_invariants = true;  // FullSME: trace, hermiticity, positivity every step
};

/// Worst-case FullSME state diagnostics over the run.
struct StateDiagnostics {
    double max_trace_error = 0.0;        // |Tr rho - 1| after normalization
    double max_hermiticity_error = 0.0;  // max |rho - rho^dagger|
    double min_eigenvalue = 1.0;
    double max_purity = 0.0;
    double max_spin_casimir_error = 0.0;  // |<Sx^2 + Sy^2 + Sz^2> - 3/4|
    double max_top_fock_population = 0.0;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> X_c;  // Reduced
    std::vector<double> Sx_c, Sy_c, Sz_c;  // FullSME
    std::vector<double> photocurrent;
    std::vector<double> I_c;
    std::vector<double> noise_drive;  // Reduced: total stochastic force F(t)
    std::uint64_t seed = 0;
    /// Set when the run stopped before t_max (BlowUp above threshold).
    std::optional<Errc> truncated;
    StateDiagnostics diagnostics;
};

/// Seed of trajectory `index` in an ensemble with base seed `base` (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Conditional mean dynamics of the adiabatically eliminated matter quadrature
///   X'' = -Omega^2 X - omega_R G' I_c + (light noise),
///   J = 2 sqrt(2 kappa) <x_theta>_c + xi,  <x_theta>_c = -2 g C_theta X / K,
///   I_c = (sqrt(2 kappa)/2) (h * J).
/// Stochastic Heun with the white noise held constant over each step.
TrajectoryRecord run_reduced(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg);

/// Homodyne stochastic master equation for one spin-1/2 and a truncated cavity,
/// H = delta a^dag a + omega_R S_z + 2 S_x [g (a + a^dag) + G I_c(t)].
/// Positivity-preserving Kraus step with normalization.
TrajectoryRecord run_full_sme(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg);

/// Dispatch on cfg.engine.
TrajectoryRecord run_trajectory(const ModelParams& p, const FeedbackKernel& kernel, const TrajectoryConfig& cfg);

struct SpinExpectations {
    std::vector<double> times, Sx, Sy, Sz;
};

/// Unconditional Lindblad evolution (RK4) of the same spin-cavity model
/// without feedback, sampled at `times`. Serves as the ensemble reference.
SpinExpectations master_equation_expectations(const ModelParams& p, const TrajectoryConfig& cfg,
                                              std::span<const double> times);

}  // namespace fpt
