#pragma once

#include "anisostokes/assembly.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace anisostokes {

/// LU factorization of a square sparse matrix (UMFPACK), with transpose solves.
class SparseLu {
public:
    explicit SparseLu(const SpMat& K);
    ~SparseLu();
    SparseLu(const SparseLu&) = delete;
    SparseLu& operator=(const SparseLu&) = delete;

    [[nodiscard]] Vec solve(const Vec& b, bool transpose = false) const;
    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] double factor_nonzeros() const noexcept { return lu_nonzeros_; }
    [[nodiscard]] double reciprocal_condition() const noexcept { return rcond_; }

private:
    int n_ = 0;
    std::vector<int> Ap_;
    std::vector<int> Ai_;
    std::vector<double> Ax_;
    void* numeric_ = nullptr;
    double lu_nonzeros_ = 0.0;
    double rcond_ = 0.0;
};

/// Direct solver for K x = r that drops `eliminated` unknowns (x = 0 there) and
/// statically condenses the cell bubbles: unknowns [bubble_begin, bubble_end) in
/// consecutive groups of `bubble_block`, which must couple only within their group.
class CondensedSolver {
public:
    CondensedSolver(const SpMat& K, const std::vector<char>& eliminated, int bubble_begin, int bubble_end,
                    int bubble_block);

    /// Full-length right-hand side and solution. Rows of eliminated unknowns are ignored.
    [[nodiscard]] Vec solve(const Vec& rhs, bool transpose = false) const;

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] int condensed_size() const noexcept { return static_cast<int>(reduced_.size()); }
    [[nodiscard]] double factor_nonzeros() const noexcept { return lu_->factor_nonzeros(); }
    [[nodiscard]] double reciprocal_condition() const noexcept { return lu_->reciprocal_condition(); }

private:
    struct Block {
        std::vector<int> dofs;            // global indices
        Mat inv;                          // K_bb^{-1}
        std::vector<std::tuple<int, int, double>> col; // K_rb: (reduced row, local col, value)
        std::vector<std::tuple<int, int, double>> row; // K_br: (local row, reduced col, value)
    };

    int n_ = 0;
    std::vector<int> reduced_;      // reduced index -> global
    std::vector<Block> blocks_;
    std::unique_ptr<SparseLu> lu_;
};

struct SolverOptions {
    enum class Backend { direct, uzawa };
    Backend backend = Backend::direct;
    double tol = 1e-10;
    int max_iter = 500;
    bool compute_stability = false;
    bool compute_infsup = false;
};

[[nodiscard]] SolverOptions::Backend parse_backend(const std::string& name);

/// Factorization of the KKT matrix of a SaddleSystem, reusable for many right-hand sides.
class KktFactorization {
public:
    explicit KktFactorization(const SaddleSystem& sys);

    /// Full KKT-length right-hand side and solution.
    [[nodiscard]] Vec solve(const Vec& rhs, bool transpose = false) const;
    [[nodiscard]] const CondensedSolver& solver() const noexcept { return *solver_; }
    [[nodiscard]] double factor_seconds() const noexcept { return factor_seconds_; }

private:
    std::unique_ptr<CondensedSolver> solver_;
    double factor_seconds_ = 0.0;
};

struct SaddleReport {
    FieldPair solution;
    Vec multipliers;
    double residual_velocity = 0.0; ///< |A u + B^T pi + C^T l - F|
    double residual_pressure = 0.0; ///< |B u - G|
    double relative_residual = 0.0; ///< combined, relative to the data norm
    std::optional<double> stability_quotient;
    std::optional<double> beta;
    int iterations = 0;
    double factor_seconds = 0.0;
    double solve_seconds = 0.0;
    std::string backend;
};

/// Solves the constrained saddle system with right-hand side (sys.F, sys.G).
[[nodiscard]] SaddleReport solve_saddle(const SaddleSystem& sys, const SolverOptions& options = {});

struct InfSupReport {
    double beta = 0.0;
    int iterations = 0;
    bool converged = false;
    double largest_ritz = 0.0;
};

/// beta_h^2 = smallest eigenvalue of B X^{-1} B^T relative to the pressure mass, X the
/// full weighted H1 matrix. Lanczos on the inverse pencil; constants deflated in Dirichlet mode.
[[nodiscard]] InfSupReport estimate_infsup(const SaddleSystem& sys, int max_iter = 300, double tol = 1e-10,
                                           std::uint64_t seed = 7);

using LinearMap = std::function<Vec(const Vec&)>;

struct OperatorNormReport {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest generalized singular value sup |T x|_out / |x|_in by power iteration on
/// N_in^{-1} T^T N_out T. Norm maps are given through N_out, N_in and N_in^{-1}.
[[nodiscard]] OperatorNormReport estimate_operator_norm(const LinearMap& apply, const LinearMap& apply_transpose,
                                                        const LinearMap& out_norm, const LinearMap& in_norm,
                                                        const LinearMap& in_norm_inverse, int input_size,
                                                        std::uint64_t seed = 11, int max_iter = 200,
                                                        double rel_tol = 1e-5);
[[nodiscard]] OperatorNormReport estimate_operator_norm(const Mat& T, const Mat& N_in, const Mat& N_out,
                                                        std::uint64_t seed = 11, int max_iter = 200,
                                                        double rel_tol = 1e-5);

/// Restarted GMRES with a right preconditioner; returns the iteration count (negative if not converged).
int gmres(const LinearMap& apply, const LinearMap& precondition, const Vec& b, Vec& x, double tol, int max_iter,
          int restart = 60);

} // namespace anisostokes
