#include "fpt/error.hpp"

namespace fpt {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidParameter: return "InvalidParameter";
        case Errc::NegativeTime: return "NegativeTime";
        case Errc::PointwiseDeltaEvaluation: return "PointwiseDeltaEvaluation";
        case Errc::QuadratureNonConvergence: return "QuadratureNonConvergence";
        case Errc::RangeTooNarrow: return "RangeTooNarrow";
        case Errc::NonPowerLawKernel: return "NonPowerLawKernel";
        case Errc::DegenerateGeometry: return "DegenerateGeometry";
        case Errc::NoBracket: return "NoBracket";
        case Errc::UnstableRegime: return "UnstableRegime";
        case Errc::DegenerateData: return "DegenerateData";
        case Errc::NonConvergence: return "NonConvergence";
        case Errc::BlowUp: return "BlowUp";
        case Errc::TruncationOverflow: return "TruncationOverflow";
        case Errc::NonPhysicalState: return "NonPhysicalState";
        case Errc::NegativeFrequency: return "NegativeFrequency";
        case Errc::PoorFit: return "PoorFit";
        case Errc::ZeroDetuning: return "ZeroDetuning";
        case Errc::ConfigError: return "ConfigError";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace fpt
