#pragma once

#include <stdexcept>
#include <string>

namespace imfphd {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Covariance could not be factorized even after diagonal jitter.
struct SingularCovarianceError : Error {
    explicit SingularCovarianceError(const std::string& what) : Error(what) {}
};

// Innovation covariance S = H P H^T + R is not positive definite.
struct SingularInnovationError : Error {
    explicit SingularInnovationError(const std::string& what) : Error(what) {}
};

struct InputError : Error {
    explicit InputError(const std::string& what) : Error(what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace imfphd
