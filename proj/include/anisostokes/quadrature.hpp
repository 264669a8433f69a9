#pragma once

#include "anisostokes/common.hpp"

#include <array>
#include <vector>

namespace anisostokes {

/// Quadrature rule on the reference simplex {x_i >= 0, sum x_i <= 1}.
/// `bary` stores all d+1 barycentric coordinates per point, with bary[0] = 1 - sum(x).
struct SimplexRule {
    int dim = 0;
    std::vector<std::array<double, 4>> bary;
    std::vector<double> weights; // sum of weights = 1/d!
};

/// Gauss-Jacobi nodes/weights for the weight (1-x)^alpha on [0,1].
void gauss_jacobi_unit(int points, double alpha, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate (Stroud conical product) rule; exact for polynomials of
/// degree <= 2*points - 1 on the reference simplex of dimension `dim` (1..3).
[[nodiscard]] const SimplexRule& simplex_rule(int dim, int points);

/// Factorial-based exact integral of a barycentric monomial over a simplex of
/// measure `volume`: int prod(lambda_i^e_i) = d! vol prod(e_i!) / (d + sum e_i)!.
[[nodiscard]] double barycentric_monomial_integral(int dim, const std::array<int, 4>& exponents, double volume);

} // namespace anisostokes
