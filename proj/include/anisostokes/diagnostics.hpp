#pragma once

#include "anisostokes/config.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace anisostokes {

struct ErrorNorms {
    double l2 = 0.0;      ///< |u - u_h|_{L2}
    double h1_semi = 0.0; ///< |grad(u - u_h)|_{L2}
};

/// Quadrature error of a discrete velocity against a smooth field over the whole mesh.
[[nodiscard]] ErrorNorms velocity_error(const FunctionSpaces& sp, const Vec& velocity,
                                        const std::function<Point(const Point&)>& exact,
                                        const std::function<Mat(const Point&)>& exact_gradient, int points = 5);

/// Compactly supported divergence-free pair u = curl(B e_3), pi = B with the
/// bump B = (1 - |x - c|^2 / s^2)^4 on |x - c| < s.
struct ManufacturedSolution {
    std::function<Point(const Point&)> u;
    std::function<Mat(const Point&)> grad_u; ///< (j, beta) = d_beta u_j
    std::function<double(const Point&)> pi;
};

[[nodiscard]] ManufacturedSolution compact_bump_solution(int dim, const Point& center, double support);

struct ManufacturedRun {
    std::shared_ptr<const FunctionSpaces> spaces;
    SaddleReport report;
    ErrorNorms error;
    double h = 0.0;
};

/// Solves the discrete problem whose load is the weak residual of the bump pair centred
/// in Omega_+ with radius stokes.support, and measures the velocity error.
[[nodiscard]] ManufacturedRun run_manufactured_stokes(const RunConfig& cfg);

/// Least-squares slope of log(err) against log(h).
[[nodiscard]] double convergence_rate(const std::vector<double>& h, const std::vector<double>& err);

/// |||v|||^2 = |grad v|^2 over both subdomains + |int_Gamma [gamma v]|^2.
[[nodiscard]] double triple_norm(const FunctionSpaces& sp, const FieldPair& v);

struct NormEquivalenceReport {
    int samples = 0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double constant_inside_ratio = 0.0; ///< ratio of the field equal to e_1 on Omega_+, 0 on Omega_-
    double smooth_ratio = 0.0;
    int definiteness_failures = 0;      ///< nonzero fields with vanishing triple norm
    bool zero_field_zero = true;
};

/// |||v||| / |v|_{weighted H1} over random broken fields satisfying the outer mean constraint.
[[nodiscard]] NormEquivalenceReport norm_equivalence_probe(const FunctionSpaces& sp, int sample_count,
                                                           std::uint64_t rng_seed);

/// Projects a velocity onto zero outer mean (the traction-free constraint rows).
[[nodiscard]] Vec project_outer_mean(const FunctionSpaces& sp, const Vec& velocity);

/// +-<T+-, gamma w> against a_+-(u, w) + b_+-(w, pi) + <f, w>, relative. `w` is masked to the side
/// and, on Omega_-, to vanish on the outer boundary.
[[nodiscard]] double green_identity_residual(const TransmissionContext& ctx, const TransmissionData& d,
                                             const TransmissionSolution& sol, const Vec& w, Side side);

/// <[T], gamma w> against the sum of both sides' forms for a continuous w.
[[nodiscard]] double conormal_jump_formula_residual(const TransmissionContext& ctx, const TransmissionData& d,
                                                    const TransmissionSolution& sol, const Vec& w);

/// Relative discrete divergence |B_+ u_+ + B_- u_-| / (|B_+||u_+| + |B_-||u_-|).
[[nodiscard]] double divergence_residual(const SaddleSystem& sys, const FieldPair& f);

enum class CheckStatus { pass, fail, error, skipped };

[[nodiscard]] std::string status_name(CheckStatus s);

struct Check {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    CheckStatus status = CheckStatus::skipped;
    std::string detail;
};

struct VerificationReport {
    std::string fingerprint;
    std::vector<Check> checks;

    [[nodiscard]] bool pass() const;
    void write_csv(std::ostream& os) const;
    void write_table(std::ostream& os) const;
};

/// Runs every invariant at the configured mesh and seed. Checks are sorted by name.
[[nodiscard]] VerificationReport run_invariant_suite(const RunConfig& cfg);

} // namespace anisostokes
