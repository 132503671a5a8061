#include <climits>
#include <cmath>
#include <numbers>

#include "config_text.hpp"
#include "fpt/error.hpp"
#include "fpt/harness.hpp"

namespace fpt {

BecMapping bec_to_model(const BecParams& bec) {
    if (bec.Delta_a == 0.0) throw Error(Errc::ZeroDetuning, "atomic detuning Delta_a must be nonzero");
    require(bec.N_atoms >= 1 && bec.N_atoms <= INT_MAX, Errc::InvalidParameter, "N_atoms must be in [1, INT_MAX]");
    require(bec.k_1 > 0.0 && bec.m_a > 0.0, Errc::InvalidParameter, "k_1 and m_a must be > 0");
    require(bec.kappa > 0.0, Errc::InvalidParameter, "kappa must be > 0");

    // hbar k^2 / 2m in rad/s, then cyclic kHz.
    constexpr double hbar = 1.054571817e-34;
    constexpr double amu = 1.66053906660e-27;
    const double k = bec.k_1 * 1e6;
    const double omega_R_kHz = hbar * k * k / (2.0 * bec.m_a * amu) / (2.0 * std::numbers::pi * 1e3);

    const double N = static_cast<double>(bec.N_atoms);
    BecMapping out;
    out.omega_R_kHz = omega_R_kHz;
    out.feedback_scale = std::sqrt(N / 8.0);
    auto& m = out.model;
    m.omega_R = 1.0;
    m.delta = (bec.omega_1 - bec.omega_pump + N * bec.g_1 * bec.g_1 / (2.0 * bec.Delta_a)) / omega_R_kHz;
    m.g = bec.Omega_pump * bec.g_1 * std::sqrt(N / 2.0) / bec.Delta_a / omega_R_kHz;
    m.G = out.feedback_scale * bec.V0_scale / omega_R_kHz;
    // a -> -a flips g together with the measured quadrature, hence the sign of G.
    if (m.g < 0.0) {
        m.g = -m.g;
        m.G = -m.G;
    }
    m.kappa = bec.kappa / omega_R_kHz;
    m.N = static_cast<int>(bec.N_atoms);
    return out;
}

BecParams parse_bec_config(std::string_view text) {
    detail::Reader r(detail::tokenize(text));
    BecParams b;
    constexpr std::string_view kHz = "kHz";
    b.omega_1 = r.number("bec.omega_1", b.omega_1, kHz);
    b.omega_pump = r.number("bec.omega_pump", b.omega_pump, kHz);
    b.g_1 = r.number("bec.g_1", b.g_1, kHz);
    b.Delta_a = r.number("bec.Delta_a", b.Delta_a, kHz);
    b.Omega_pump = r.number("bec.Omega_pump", b.Omega_pump, kHz);
    b.N_atoms = r.integer("bec.N_atoms", b.N_atoms);
    b.k_1 = r.number("bec.k_1", b.k_1, "1/um");
    b.m_a = r.number("bec.m_a", b.m_a, "amu");
    b.V0_scale = r.number("bec.V0_scale", b.V0_scale, kHz);
    b.kappa = r.number("bec.kappa", b.kappa, kHz);
    r.finish([](const std::string& key) { return "unknown key " + key; });
    return b;
}

}  // namespace fpt
