#pragma once

#include <stdexcept>
#include <string>

namespace focklab {

struct LabError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteSample : LabError {
    using LabError::LabError;
};
struct ConfigError : LabError {
    using LabError::LabError;
};
struct ConvergenceFailure : LabError {
    using LabError::LabError;
};
struct DimMismatch : LabError {
    using LabError::LabError;
};
struct NormDiverged : LabError {
    using LabError::LabError;
};
struct UnboundedOperator : LabError {
    using LabError::LabError;
};
struct QuadratureDiverged : LabError {
    using LabError::LabError;
};
struct UnknownExperiment : LabError {
    using LabError::LabError;
};
struct SpecError : LabError {
    using LabError::LabError;
};

}  // namespace focklab
