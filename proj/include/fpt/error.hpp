#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpt {

enum class Errc {
    InvalidParameter,
    NegativeTime,
    PointwiseDeltaEvaluation,
    QuadratureNonConvergence,
    RangeTooNarrow,
    NonPowerLawKernel,
    DegenerateGeometry,
    NoBracket,
    UnstableRegime,
    DegenerateData,
    NonConvergence,
    BlowUp,
    TruncationOverflow,
    NonPhysicalState,
    NegativeFrequency,
    PoorFit,
    ZeroDetuning,
    ConfigError,
    IoError,
};

std::string_view to_string(Errc code) noexcept;

// Every failure in the library surfaces as an fpt::Error. `estimate` carries a
// numeric diagnostic where one exists (achieved quadrature error, residual).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, double estimate = 0.0)
        : std::runtime_error(std::string(to_string(code)) + ": " + what),
          code_(code), estimate_(estimate) {}

    Errc code() const noexcept { return code_; }
    double estimate() const noexcept { return estimate_; }

private:
    Errc code_;
    double estimate_;
};

inline void require(bool condition, Errc code, const std::string& what) {
    if (!condition) throw Error(code, what);
}

}  // namespace fpt
