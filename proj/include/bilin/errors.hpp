#pragma once

#include <stdexcept>
#include <string>

namespace bilin {

// Shape or size mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A matrix that must be symmetric / positive definite is not, or a gain
// violates the bounds a certificate depends on.
class CertificateError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values or blow-up during evaluation / integration.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bilin
