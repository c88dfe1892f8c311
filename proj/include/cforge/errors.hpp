#pragma once

#include <stdexcept>
#include <string>

namespace cforge {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct DegenerateNetwork : Error { using Error::Error; };
struct BlockNotNegativeDefinite : Error { using Error::Error; };
struct InfeasibleError : Error { using Error::Error; };
struct CertificateRejected : Error { using Error::Error; };
struct LiftRejected : Error { using Error::Error; };
struct MissingInitialState : Error { using Error::Error; };
struct UnsupportedOperator : Error { using Error::Error; };
struct SpecHashMismatch : Error { using Error::Error; };

struct NumericalBlowup : Error {
    double time_of_divergence;

    NumericalBlowup(const std::string& what, double t)
        : Error(what), time_of_divergence(t) {}
};

// Carries the JSON-pointer-style path of the offending field.
struct ConfigError : Error {
    std::string field_path;

    ConfigError(std::string path, const std::string& what)
        : Error(path + ": " + what), field_path(std::move(path)) {}
};

}  // namespace cforge
