#pragma once

#include <stdexcept>
#include <string>

namespace fdkit {

// Base class for all toolkit errors. Everything thrown by the library
// derives from this, so CLI code can catch one type and exit cleanly.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- signal ingestion -------------------------------------------------------
struct MalformedHeader : Error {
    explicit MalformedHeader(const std::string& msg) : Error("malformed header: " + msg) {}
};
struct NonUniformGrid : Error {
    explicit NonUniformGrid(const std::string& msg) : Error("non-uniform grid: " + msg) {}
};
struct NonFiniteValue : Error {
    explicit NonFiniteValue(const std::string& msg) : Error("non-finite value: " + msg) {}
};

// --- simulation -------------------------------------------------------------
struct IntegrationDiverged : Error {
    explicit IntegrationDiverged(const std::string& msg) : Error("integration diverged: " + msg) {}
};
struct GridMismatch : Error {
    explicit GridMismatch(const std::string& msg) : Error("grid mismatch: " + msg) {}
};

// --- factorization ----------------------------------------------------------
struct SingularV : Error {
    explicit SingularV(const std::string& msg) : Error("singular pre-filter V: " + msg) {}
};
struct SingularW : Error {
    explicit SingularW(const std::string& msg) : Error("singular post-filter W: " + msg) {}
};
struct HjeResidualTooLarge : Error {
    double max_residual;
    HjeResidualTooLarge(double r, const std::string& msg)
        : Error("storage equation residual too large: " + msg), max_residual(r) {}
};
struct GainConditionViolated : Error {
    explicit GainConditionViolated(const std::string& msg) : Error("gain condition violated: " + msg) {}
};
struct NotNormalized : Error {
    explicit NotNormalized(const std::string& msg) : Error("realization not normalized: " + msg) {}
};
struct RiccatiNoStabilizingSolution : Error {
    explicit RiccatiNoStabilizingSolution(const std::string& msg)
        : Error("no stabilizing Riccati solution: " + msg) {}
};
struct RiccatiNotConverged : Error {
    explicit RiccatiNotConverged(const std::string& msg) : Error("Riccati iteration did not converge: " + msg) {}
};

// --- evaluation -------------------------------------------------------------
struct LengthMismatch : Error {
    explicit LengthMismatch(const std::string& msg) : Error("length mismatch: " + msg) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};
struct EmptyWindow : Error {
    explicit EmptyWindow(const std::string& msg) : Error("empty window: " + msg) {}
};
struct GammaOutOfRange : Error {
    explicit GammaOutOfRange(const std::string& msg) : Error("gamma out of range: " + msg) {}
};
struct AlphaOutOfRange : Error {
    explicit AlphaOutOfRange(const std::string& msg) : Error("alpha out of range: " + msg) {}
};
struct FormulaDisagreement : Error {
    explicit FormulaDisagreement(const std::string& msg) : Error("divergence formulas disagree: " + msg) {}
};
struct MinimalityViolated : Error {
    explicit MinimalityViolated(const std::string& msg) : Error("minimality violated: " + msg) {}
};

// --- estimation -------------------------------------------------------------
struct UnstablePerturbedGain : Error {
    explicit UnstablePerturbedGain(const std::string& msg) : Error("perturbed gain unstable: " + msg) {}
};
struct OptimalityViolated : Error {
    explicit OptimalityViolated(const std::string& msg) : Error("optimality violated: " + msg) {}
};

// --- configuration ----------------------------------------------------------
struct ConfigInvalid : Error {
    explicit ConfigInvalid(const std::string& msg) : Error("invalid config: " + msg) {}
};

} // namespace fdkit
