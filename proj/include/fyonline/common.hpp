#ifndef FYONLINE_COMMON_HPP
#define FYONLINE_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fyo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain arguments (non-finite scores, dimension
/// mismatches, points outside the hull).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid problem configuration, e.g. a triple violating λ > 4γ/ν.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Vertex enumeration would exceed the enumeration cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// An iterative solver stopped before reaching its tolerance. Carries the
/// final residual (duality gap, marginal deviation, ...).
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

enum class Norm { L1, L2 };

inline const char* to_string(Norm norm) { return norm == Norm::L1 ? "l1" : "l2"; }

inline double norm_of(const Vector& v, Norm norm) {
    return norm == Norm::L1 ? v.lpNorm<1>() : v.norm();
}

inline double distance(const Vector& a, const Vector& b, Norm norm) { return norm_of(a - b, norm); }

inline void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw InputError(std::string(what) + " has non-finite entries");
    }
}

inline void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
    if (v.size() != dim) {
        throw InputError(std::string(what) + " has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(dim));
    }
}

/// Tolerance on ℓ1 constraint violation for hull membership.
inline constexpr double hull_tolerance = 1e-8;

/// Duality-gap tolerance of the Frank–Wolfe solvers.
inline constexpr double fw_tolerance = 1e-9;

/// Sinkhorn marginal-deviation tolerance.
inline constexpr double sinkhorn_tolerance = 1e-10;

inline constexpr std::size_t enumeration_cap = 100000;

}  // namespace fyo

#endif
