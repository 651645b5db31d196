// errors.hpp - Error categories shared by every module

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvdyn {

enum class ErrorKind {
    kDomain,            // argument outside the mathematical domain
    kDimension,         // matrix/vector size mismatch
    kNumericalFailure,  // eigen-solve or quadrature did not converge
    kInvalidState,      // covariance matrix violates the uncertainty principle
    kSpecConflict,      // overlapping squeeze assignments
    kInstability,       // oscillator parameters give an imaginary frequency
    kUnstableRegime,    // |beta_u| <= |beta_s|
    kStiffness,         // ODE step size underflow
    kConsistency,       // integrated state drifted out of the physical set
    kConfigParse,
    kConfigValidation,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline bool is_config_error(ErrorKind k) {
    return k == ErrorKind::kConfigParse || k == ErrorKind::kConfigValidation;
}

}  // namespace cvdyn
