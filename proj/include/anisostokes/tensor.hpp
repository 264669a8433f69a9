#pragma once

#include "anisostokes/common.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace anisostokes {

/// Pointwise value of the viscosity tensor, entries a_ij^{alpha beta}.
/// Indices are stored as (i, j, alpha, beta), each in [0, dim).
class TensorValue {
public:
    TensorValue() = default;
    explicit TensorValue(int dim) : dim_(dim) {}

    [[nodiscard]] int dim() const noexcept { return dim_; }

    double& operator()(int i, int j, int alpha, int beta) noexcept { return a_[index(i, j, alpha, beta)]; }
    double operator()(int i, int j, int alpha, int beta) const noexcept { return a_[index(i, j, alpha, beta)]; }

    /// The (i alpha),(j beta) matrix of the quadratic form xi_{i alpha} xi_{j beta}.
    [[nodiscard]] Mat form_matrix() const;

    [[nodiscard]] double max_abs() const noexcept;

private:
    [[nodiscard]] std::size_t index(int i, int j, int alpha, int beta) const noexcept
    {
        return static_cast<std::size_t>(((i * 3 + j) * 3 + alpha) * 3 + beta);
    }

    int dim_ = 3;
    std::array<double, 81> a_{};
};

enum class TensorKind { isotropic, general };

/// Coefficient field callable. The subdomain hint lets piecewise fields resolve
/// points that sit exactly on the interface; evaluation must be side-effect free.
using TensorField = std::function<TensorValue(const Point&, Side)>;
using ScalarField = std::function<double(const Point&, Side)>;

/// The L-infinity viscosity tensor as a spatial field with its certified bound.
class CoeffTensor {
public:
    CoeffTensor(int dim, TensorField field, double c_bound, TensorKind kind);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double c_bound() const noexcept { return c_bound_; }
    [[nodiscard]] TensorKind kind() const noexcept { return kind_; }

    [[nodiscard]] TensorValue at(const Point& x, Side side) const { return field_(x, side); }

    /// Builder bookkeeping used in reports (e.g. "isotropic-two-phase(2,1)").
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

private:
    int dim_;
    TensorField field_;
    double c_bound_;
    TensorKind kind_;
    std::string label_ = "general";
};

struct SamplePoint {
    Point x = Point::Zero();
    Side side = Side::minus;
};

/// mu(x) delta_{alpha beta} delta_{ij}. Throws on nonpositive bounds or on a bound
/// violation at any of the supplied sample points (and later at evaluation time).
[[nodiscard]] CoeffTensor make_isotropic(int dim, ScalarField mu, double mu_lower, double mu_upper,
                                         const std::vector<SamplePoint>& samples = {});

[[nodiscard]] CoeffTensor make_isotropic_constant(int dim, double mu);
[[nodiscard]] CoeffTensor make_isotropic_two_phase(int dim, double mu_plus, double mu_minus);

/// a_ij^{alpha beta} = w_alpha delta_{alpha beta} delta_{ij}.
[[nodiscard]] CoeffTensor make_diagonal_anisotropic(int dim, const std::vector<double>& weights);

/// mu (delta_{alpha j} delta_{beta i} + delta_{alpha beta} delta_{ij}); elliptic on symmetric xi only.
[[nodiscard]] CoeffTensor make_symmetric_gradient(int dim, double mu);

/// Arbitrary tensor field; `c_bound` is user supplied and only checked by sampling.
[[nodiscard]] CoeffTensor make_general(int dim, TensorField field, double c_bound);

/// Entry (i,j,alpha,beta) of the result is entry (j,i,beta,alpha) of `t`.
[[nodiscard]] CoeffTensor adjoint(const CoeffTensor& t);

struct EllipticityReport {
    bool pass = false;
    double worst_quotient = 0.0; // min a xi xi / |xi|^2
    double required = 0.0;       // 1 / c_bound
    Point witness_x = Point::Zero();
    Side witness_side = Side::minus;
    Mat witness_xi;
    double max_entry = 0.0;
    bool bounded = true;         // |a| <= c_bound at every sample
};

/// Randomised certification: `trial_count` unit-Frobenius trial matrices per sample
/// point plus the exact minimiser of the sampled quadratic form.
[[nodiscard]] EllipticityReport check_strong_ellipticity(const CoeffTensor& t, const std::vector<SamplePoint>& samples,
                                                         int trial_count, std::uint64_t rng_seed,
                                                         double tolerance = 1e-12);

/// result(alpha, i) = a_ij^{alpha beta}(x) G(j, beta).
[[nodiscard]] Mat contract(const TensorValue& a, const Mat& G);
[[nodiscard]] Mat contract(const CoeffTensor& t, const Point& x, Side side, const Mat& G);

/// Frobenius pairing of a flux R(alpha, i) with a gradient H(i, alpha).
[[nodiscard]] double flux_pairing(const Mat& R, const Mat& H);

} // namespace anisostokes
