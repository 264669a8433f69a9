#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <string_view>

namespace anisostokes {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Coordinates are always stored in 3-vectors; 2D meshes keep z = 0.
using Point = Eigen::Vector3d;

/// Subdomain tag: `plus` is the bounded inclusion, `minus` the truncated exterior.
enum class Side : int { plus = 0, minus = 1 };

inline constexpr int side_index(Side s) noexcept { return static_cast<int>(s); }
inline constexpr double side_sign(Side s) noexcept { return s == Side::plus ? 1.0 : -1.0; }
inline constexpr std::string_view side_name(Side s) noexcept { return s == Side::plus ? "plus" : "minus"; }

/// Error categories surfaced by the CLI as a single machine-parsable token.
enum class ErrorCategory { invalid_argument, geometry, resource, solver, convergence, io, config };

inline constexpr std::string_view category_name(ErrorCategory c) noexcept
{
    switch (c) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::resource: return "resource";
    case ErrorCategory::solver: return "solver";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::io: return "io";
    case ErrorCategory::config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category)
    {
    }

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define ANISO_REQUIRE(cond, category, msg)                                        \
    do {                                                                          \
        if (!(cond)) {                                                            \
            throw ::anisostokes::Error(::anisostokes::ErrorCategory::category, msg); \
        }                                                                         \
    } while (false)

} // namespace anisostokes
