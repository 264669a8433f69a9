#pragma once

#include "anisostokes/potentials.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace anisostokes {

/// Data of the linear transmission problem: loads on each subdomain, the velocity
/// jump h = gamma_+ u_+ - gamma_- u_- and the conormal jump g = T+ - T-.
struct TransmissionData {
    LoadFunctional f_plus;
    LoadFunctional f_minus;
    TraceField h;
    TraceDensity g;

    [[nodiscard]] static TransmissionData zero(const FunctionSpaces& sp);
};

enum class TransmissionBackend { monolithic, representation };

[[nodiscard]] TransmissionBackend parse_transmission_backend(const std::string& name);
[[nodiscard]] std::string backend_name(TransmissionBackend b);

/// Relative residuals of the four transmission equations.
struct TransmissionResiduals {
    double interior_plus = 0.0;
    double interior_minus = 0.0;
    double divergence = 0.0;
    double trace_jump = 0.0;
    double conormal_jump = 0.0;

    [[nodiscard]] double max() const;
};

struct TransmissionSolution {
    FieldPair field; ///< u_+ = field.u + E field.jump, u_- = field.u
    Vec multipliers;
    TraceDensity T_plus;
    TraceDensity T_minus;
    TransmissionResiduals residuals;
    TransmissionBackend backend = TransmissionBackend::monolithic;
    double seconds = 0.0;
};

/// Factorized system plus the norms used by the data and solution spaces:
/// unweighted H1 on Omega_+, weighted H1 on Omega_-, the pressure mass and the trace norms.
class TransmissionContext {
public:
    TransmissionContext(std::shared_ptr<const FunctionSpaces> sp, const CoeffTensor& t, OuterBc bc = OuterBc::traction_free,
                        TraceNormKind trace_kind = TraceNormKind::interpolation, int threads = 1);

    [[nodiscard]] const PotentialContext& potentials() const noexcept { return potentials_; }
    [[nodiscard]] const FunctionSpaces& spaces() const noexcept { return potentials_.spaces(); }
    [[nodiscard]] const SaddleSystem& system() const noexcept { return potentials_.system(); }
    [[nodiscard]] const TraceNorms& trace_norms() const noexcept { return *trace_norms_; }
    [[nodiscard]] const SpMat& h1(Side s) const { return h1_[static_cast<std::size_t>(side_index(s))]; }
    [[nodiscard]] const SpMat& pressure_mass() const noexcept { return pressure_mass_; }

    /// Zeroes the entries outside the velocity DOFs of one side.
    [[nodiscard]] Vec restrict_to_side(const Vec& velocity, Side s) const;
    /// X_s^{-1} applied to moments of a functional on one side.
    [[nodiscard]] Vec riesz(const Vec& moments, Side s) const;
    [[nodiscard]] double dual_norm(const Vec& moments, Side s) const;
    [[nodiscard]] double h1_norm(const Vec& velocity, Side s) const;
    /// |grad v| on one side.
    [[nodiscard]] double gradient_norm(const Vec& velocity, Side s) const;

    /// sqrt of the sum of squares of the four data norms.
    [[nodiscard]] double data_norm(const TransmissionData& d) const;
    /// sqrt(|u_+|^2_{X+} + |u_-|^2_{X-} + |pi|^2_M).
    [[nodiscard]] double solution_norm(const FieldPair& f) const;
    [[nodiscard]] double velocity_norm(const FieldPair& f) const;

private:
    PotentialContext potentials_;
    std::shared_ptr<const TraceNorms> trace_norms_;
    std::array<SpMat, 2> h1_;
    std::array<SpMat, 2> gradient_;
    std::array<std::vector<char>, 2> outside_;
    std::array<std::shared_ptr<const CondensedSolver>, 2> riesz_;
    SpMat pressure_mass_;
};

/// Solves the transmission problem. Dirichlet mode rejects h with nonzero discrete flux.
[[nodiscard]] TransmissionSolution solve_linear_transmission(const TransmissionContext& ctx, const TransmissionData& d,
                                                             TransmissionBackend backend = TransmissionBackend::monolithic);

/// Residuals of the four equations for a candidate solution; also fills the conormal derivatives.
[[nodiscard]] TransmissionResiduals transmission_residuals(const TransmissionContext& ctx, const TransmissionData& d,
                                                           const FieldPair& f, const Vec& multipliers,
                                                           TraceDensity* T_plus = nullptr, TraceDensity* T_minus = nullptr);

/// Relative H1 distance of two broken fields (velocity only).
[[nodiscard]] double relative_h1_distance(const TransmissionContext& ctx, const FieldPair& a, const FieldPair& b);

/// Convection functional v -> lambda (v . grad) v on Omega_+.
[[nodiscard]] LoadFunctional convection_load(const FunctionSpaces& sp, double lambda, const Vec& u_plus);

struct TransmissionConstants {
    double lambda = 0.0;
    double c1 = 0.0;
    double c_star = 0.0;
    double eta = 0.0;
    double zeta = 0.0;
    bool unconditional = false; ///< lambda = 0: eta and zeta are infinite
    int c_star_iterations = 0;
    bool c_star_converged = false;
};

/// c1 from `probe_count` random and smooth probes, c* by power iteration on the
/// linear solution map, eta = 1/(4 c1 c*), zeta = 3 eta / (4 c*).
[[nodiscard]] TransmissionConstants compute_constants(const TransmissionContext& ctx, double lambda, int probe_count = 16,
                                                      std::uint64_t rng_seed = 1);

/// Operator norm of the linear solution map alone.
[[nodiscard]] OperatorNormReport solution_map_norm(const TransmissionContext& ctx, std::uint64_t seed = 11,
                                                   int max_iter = 200, double rel_tol = 1e-5);

struct PicardOptions {
    double lambda = 0.0;
    int max_iter = 25;
    double tol = 1e-8;
    std::optional<Vec> initial; ///< u_+ of the first iterate, zero by default
    TransmissionBackend backend = TransmissionBackend::monolithic;
    bool check_backends = false; ///< cross-check each step against the other backend
};

struct PicardState {
    Vec u_plus;
    TransmissionConstants constants;
    std::vector<double> diff_history; ///< |u^{k+1} - u^k|_{H1(Omega_+)}
    std::vector<double> ratios;       ///< diff_k / diff_{k-1}, from the second step on
    bool converged = false;
    bool blew_up = false;
    int iterations = 0;
    double data_norm = 0.0;
    double iterate_norm = 0.0;
    double fixed_point_residual = 0.0; ///< |U(u*) - u*|_{H1(Omega_+)}
    double nonlinear_residual = 0.0;   ///< transmission residuals with the convected load
    double backend_discrepancy = 0.0;
    std::vector<std::string> warnings;
};

struct NavierStokesResult {
    TransmissionSolution solution;
    PicardState state;
};

/// Picard iteration u^{k+1} = U(u^k): each step is one linear transmission solve with
/// the convection of u^k added to f_+.
[[nodiscard]] NavierStokesResult solve_navier_stokes(const TransmissionContext& ctx, const TransmissionData& d,
                                                     const TransmissionConstants& constants, const PicardOptions& options);

} // namespace anisostokes
