#pragma once

#include "anisostokes/spaces.hpp"
#include "anisostokes/tensor.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace anisostokes {

enum class LoadSource { volume, convection, boundary, residual, composite };

/// A functional on the velocity space stored by its moments m_I = <f, phi_I>.
struct LoadFunctional {
    Vec moments;
    LoadSource source = LoadSource::volume;
};

/// a(u, v) over all cells, or over the cells of one subdomain.
/// Coefficients are sampled once per cell at the centroid.
[[nodiscard]] SpMat assemble_a(const FunctionSpaces& sp, const CoeffTensor& t, std::optional<Side> side = std::nullopt);

/// b(v, q) = -(div v, q); rows are pressure DOFs.
[[nodiscard]] SpMat assemble_b(const FunctionSpaces& sp, std::optional<Side> side = std::nullopt);

/// (grad u, grad v) for vector fields.
[[nodiscard]] SpMat assemble_gradient_stiffness(const FunctionSpaces& sp, std::optional<Side> side = std::nullopt);

/// (rho^-2 u, v) when `rho_weighted`, else (u, v).
[[nodiscard]] SpMat assemble_velocity_mass(const FunctionSpaces& sp, bool rho_weighted,
                                           std::optional<Side> side = std::nullopt, int points = 5);

/// Gradient stiffness plus (weighted) mass.
[[nodiscard]] SpMat assemble_velocity_h1(const FunctionSpaces& sp, bool rho_weighted,
                                         std::optional<Side> side = std::nullopt);

[[nodiscard]] SpMat assemble_pressure_mass(const FunctionSpaces& sp, std::optional<Side> side = std::nullopt);

/// <f, phi_I> for a pointwise force.
[[nodiscard]] LoadFunctional assemble_volume_load(const FunctionSpaces& sp,
                                                  const std::function<Point(const Point&, Side)>& f,
                                                  std::optional<Side> side = std::nullopt, int points = 5);

/// Exact gradient of a smooth velocity: G(j, beta) = d_beta u_j.
using GradientField = std::function<Mat(const Point&, Side)>;
using PressureField = std::function<double(const Point&, Side)>;

/// v -> a(u, v) + b(v, pi) for a smooth pair given through its gradient and pressure.
[[nodiscard]] LoadFunctional assemble_weak_residual(const FunctionSpaces& sp, const CoeffTensor& t,
                                                    const GradientField& grad_u, const PressureField& pi,
                                                    std::optional<Side> side = std::nullopt, int points = 5);

/// int_{Omega_+} lambda (v . grad) v . phi_I; zero outside Omega_+.
[[nodiscard]] LoadFunctional assemble_convection(const FunctionSpaces& sp, const std::function<double(const Point&)>& lambda,
                                                 const Vec& v, int points = 5);
/// Cellwise lambda; nonzero values on Omega_- cells are rejected.
[[nodiscard]] LoadFunctional assemble_convection(const FunctionSpaces& sp, const Vec& lambda_per_cell, const Vec& v,
                                                 int points = 5);

/// <psi, gamma phi_I>: the density moments placed on interface vertex DOFs.
[[nodiscard]] LoadFunctional boundary_pairing(const TraceDensity& psi, const FunctionSpaces& sp);

enum class OuterBc { traction_free, dirichlet };

[[nodiscard]] OuterBc parse_outer_bc(const std::string& name);

/// Discrete Stokes operator on the truncated domain with its side splits and constraints.
///
/// KKT unknown layout: [u (num_velocity), pi (num_pressure), velocity multipliers, pressure multipliers].
/// Traction-free closes the constant-velocity kernel with zero-mean outer velocity rows `C`;
/// Dirichlet eliminates the outer vertex DOFs and fixes the pressure mean with `Cp`.
struct SaddleSystem {
    std::shared_ptr<const FunctionSpaces> spaces;
    SpMat A;
    SpMat B;
    std::array<SpMat, 2> A_side;
    std::array<SpMat, 2> B_side;
    Vec F;
    Vec G;
    OuterBc outer_bc = OuterBc::traction_free;
    bool equal_order = false;
    SpMat C;
    SpMat Cp;
    std::vector<char> fixed; ///< eliminated velocity DOFs (value zero)

    [[nodiscard]] int num_velocity() const { return static_cast<int>(A.rows()); }
    [[nodiscard]] int num_pressure() const { return static_cast<int>(B.rows()); }
    [[nodiscard]] int num_multipliers() const { return static_cast<int>(C.rows() + Cp.rows()); }
    [[nodiscard]] int kkt_size() const { return num_velocity() + num_pressure() + num_multipliers(); }

    /// Assembled KKT matrix over all unknowns (fixed DOFs included; the solver drops them).
    [[nodiscard]] SpMat kkt_matrix() const;
    /// Stacks velocity and pressure right-hand sides with zero constraint values.
    [[nodiscard]] Vec kkt_rhs(const Vec& F, const Vec& G) const;
};

/// Builds A, B, their side splits and the outer constraints. `equal_order` removes the
/// bubbles (P1/P1 validation mode).
[[nodiscard]] SaddleSystem assemble_saddle_system(std::shared_ptr<const FunctionSpaces> sp, const CoeffTensor& t,
                                                  OuterBc bc = OuterBc::traction_free, bool equal_order = false);

/// Variational conormal derivative on one side:
/// +-<T, gamma w> = a_side(u, w) + b_side(w, pi) + <f, w>, read off at interface DOFs.
[[nodiscard]] TraceDensity conormal_derivative(const FunctionSpaces& sp, const SpMat& A_side, const SpMat& B_side,
                                               const Vec& u_side, const Vec& pi, const Vec& f_side, Side side);
[[nodiscard]] TraceDensity conormal_derivative(const SaddleSystem& sys, const FieldPair& f, const Vec& f_side, Side side);

} // namespace anisostokes
