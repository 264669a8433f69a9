#pragma once

#include "anisostokes/saddle.hpp"

#include <memory>
#include <optional>

namespace anisostokes {

/// Shared state for potential solves: one assembled system and its factorization.
/// The adjoint view solves with the transposed KKT matrix, which is exactly the
/// system of the adjoint tensor.
class PotentialContext {
public:
    PotentialContext(std::shared_ptr<const FunctionSpaces> sp, const CoeffTensor& t, OuterBc bc = OuterBc::traction_free,
                     int threads = 1);

    [[nodiscard]] const FunctionSpaces& spaces() const noexcept { return *spaces_; }
    [[nodiscard]] const std::shared_ptr<const FunctionSpaces>& spaces_ptr() const noexcept { return spaces_; }
    [[nodiscard]] const SaddleSystem& system() const noexcept { return *system_; }
    [[nodiscard]] const KktFactorization& factorization() const noexcept { return *factorization_; }
    [[nodiscard]] bool is_adjoint() const noexcept { return adjoint_; }
    [[nodiscard]] int threads() const noexcept { return threads_; }
    void set_threads(int threads) { threads_ = std::max(1, threads); }

    /// Side form matrix of this view (transposed in the adjoint view).
    [[nodiscard]] const SpMat& a_side(Side s) const;
    [[nodiscard]] const SpMat& b_side(Side s) const;

    /// Solves a(u, v) + b(v, pi) = <F, v>, b(u, q) = <G, q> with the outer constraints.
    [[nodiscard]] FieldPair solve(const Vec& F, const Vec& G, Vec* multipliers = nullptr) const;

    [[nodiscard]] PotentialContext adjoint_view() const;

private:
    PotentialContext() = default;

    std::shared_ptr<const FunctionSpaces> spaces_;
    std::shared_ptr<const SaddleSystem> system_;
    std::shared_ptr<const KktFactorization> factorization_;
    std::shared_ptr<const std::array<SpMat, 2>> a_side_transposed_;
    bool adjoint_ = false;
    int threads_ = 1;
};

enum class PotentialKind { newtonian, single_layer, double_layer };

/// A potential with its side traces and conormal derivatives.
struct PotentialPair {
    PotentialKind kind = PotentialKind::newtonian;
    FieldPair field;
    Vec multipliers;
    TraceField gamma_plus;
    TraceField gamma_minus;
    std::optional<TraceDensity> T_plus;
    std::optional<TraceDensity> T_minus;
};

/// Newtonian potential of f = f_plus + f_minus: L(u, pi) = f, i.e. a(u,v) + b(v,pi) = -<f, v>.
/// The conormal caches use f_plus on Omega_+ and f_minus on Omega_-.
[[nodiscard]] PotentialPair newtonian(const PotentialContext& ctx, const LoadFunctional& f_plus,
                                      const LoadFunctional& f_minus);
/// Single-datum form; conormal caches are left empty.
[[nodiscard]] PotentialPair newtonian(const PotentialContext& ctx, const LoadFunctional& f);

/// a(u,v) + b(v,pi) = <psi, gamma v>, b(u,q) = 0, continuous velocity.
[[nodiscard]] PotentialPair single_layer(const PotentialContext& ctx, const TraceDensity& psi);

/// Discrete flux sum(B_+ E phi) of a velocity jump; must vanish for the Dirichlet outer condition.
[[nodiscard]] double trace_flux(const SaddleSystem& sys, const TraceField& phi);
/// Removes the flux direction from phi.
[[nodiscard]] TraceField remove_trace_flux(const SaddleSystem& sys, const TraceField& phi);

/// Velocity jump -phi through the nodal lifting on the first Omega_+ cell layer, zero conormal jump.
[[nodiscard]] PotentialPair double_layer(const PotentialContext& ctx, const TraceField& phi);

struct SingleLayerTraces {
    TraceField V;       ///< gamma of the single layer velocity
    TraceDensity K;     ///< average of the two conormal derivatives
    double jump_residual = 0.0; ///< relative |T+ - T- - psi| on moments
};

struct DoubleLayerTraces {
    TraceField K;        ///< average of the two traces
    TraceDensity D;      ///< T+
    double conormal_discrepancy = 0.0; ///< relative |T+ - T-|
    double jump_residual = 0.0;        ///< |gamma+ - gamma- + phi| (nodal, max)
};

[[nodiscard]] SingleLayerTraces single_layer_boundary_ops(const PotentialContext& ctx, const PotentialPair& pot,
                                                          const TraceDensity& psi);
[[nodiscard]] DoubleLayerTraces double_layer_boundary_ops(const PotentialContext& ctx, const PotentialPair& pot,
                                                          const TraceField& phi);

/// Single layer of the adjoint system with its boundary operators.
struct AdjointSingleLayer {
    PotentialPair potential;
    SingleLayerTraces ops;
};
[[nodiscard]] AdjointSingleLayer adjoint_single_layer(const PotentialContext& ctx, const TraceDensity& psi_star);

/// Dense boundary operators, one column per trace basis function.
/// V, Kss act on density moments (V -> nodal, Kss -> moments); K, D act on nodal values
/// (K -> nodal, D -> moments).
struct BoundaryOperators {
    Mat V;
    Mat Kss;
    Mat K;
    Mat D;
    Mat V_adjoint;
    Mat Kss_adjoint;
    double seconds = 0.0;
};

struct MaterializeOptions {
    bool single = true;
    bool dbl = true;
    bool adjoint = false;
};

[[nodiscard]] BoundaryOperators materialize_boundary_operators(const PotentialContext& ctx,
                                                               const MaterializeOptions& opt = {});

/// Singular values of V are taken from the trace norms (|V psi|_{1/2} / |psi|_{-1/2}),
/// eigenvalues of -sym(D) relative to the 1/2 Gram matrix.
struct KernelCoercivityReport {
    double V_norm = 0.0;
    double V_nu = 0.0;              ///< |V nu|_{1/2}
    double V_sigma_min = 0.0;
    double V_sigma_second = 0.0;
    double V_sigma_complement = 0.0;///< smallest singular value on the nu-complement
    double D_norm = 0.0;
    Vec D_small;                    ///< n smallest eigenvalues of -sym(D)
    double D_next = 0.0;            ///< (n+1)-th eigenvalue
    double D_constant_alignment = 0.0; ///< min over the n eigenvectors of their projection on constants
    double D_constants = 0.0;       ///< max |D c| over unit constants
    double V_rayleigh_min = 0.0;    ///< min <psi, V psi> / |psi|^2_{-1/2} on the nu-complement
    double D_rayleigh_min = 0.0;    ///< min <-D phi, phi> / |phi|^2_{1/2} on mean-zero phi
    TraceNormKind norm_kind = TraceNormKind::interpolation;
};

[[nodiscard]] KernelCoercivityReport kernel_and_coercivity_report(const FunctionSpaces& sp, const BoundaryOperators& ops,
                                                                  const TraceNorms& norms);

/// Runs `body(j)` for j in [0, n) on `threads` workers; results must be written by index.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

} // namespace anisostokes
