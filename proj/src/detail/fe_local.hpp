#pragma once

#include "anisostokes/mesh.hpp"
#include "anisostokes/quadrature.hpp"

#include <array>
#include <cmath>

namespace anisostokes::detail {

/// Affine simplex data: barycentric gradients are constant.
struct CellGeometry {
    int dim = 3;
    std::array<Point, 4> x{};
    std::array<Point, 4> grad{}; ///< grad of lambda_a
    double volume = 0.0;

    [[nodiscard]] Point map(const std::array<double, 4>& bary) const
    {
        Point p = Point::Zero();
        for (int a = 0; a <= dim; ++a) p += bary[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        return p;
    }
};

inline CellGeometry cell_geometry(const Mesh& m, int c)
{
    CellGeometry g;
    g.dim = m.dim();
    const auto& cv = m.cell(c);
    for (int a = 0; a <= g.dim; ++a) g.x[static_cast<std::size_t>(a)] = m.vertex(cv[static_cast<std::size_t>(a)]);
    const int d = g.dim;
    Mat J(d, d);
    for (int a = 1; a <= d; ++a)
        for (int r = 0; r < d; ++r) J(r, a - 1) = g.x[static_cast<std::size_t>(a)](r) - g.x[0](r);
    const Mat Jinv = J.inverse();
    Point sum = Point::Zero();
    for (int a = 1; a <= d; ++a) {
        Point gr = Point::Zero();
        for (int r = 0; r < d; ++r) gr(r) = Jinv(a - 1, r);
        g.grad[static_cast<std::size_t>(a)] = gr;
        sum += gr;
    }
    g.grad[0] = -sum;
    g.volume = m.volume(c);
    return g;
}

inline double bubble_scale(int dim) { return std::pow(static_cast<double>(dim + 1), dim + 1); }

/// Values of the d+2 local scalar basis functions (d+1 hats, then the bubble).
inline std::array<double, 5> basis_values(int dim, const std::array<double, 4>& bary)
{
    std::array<double, 5> v{};
    double prod = 1.0;
    for (int a = 0; a <= dim; ++a) {
        v[static_cast<std::size_t>(a)] = bary[static_cast<std::size_t>(a)];
        prod *= bary[static_cast<std::size_t>(a)];
    }
    v[static_cast<std::size_t>(dim + 1)] = bubble_scale(dim) * prod;
    return v;
}

inline std::array<Point, 5> basis_gradients(const CellGeometry& g, const std::array<double, 4>& bary)
{
    std::array<Point, 5> out{};
    Point gb = Point::Zero();
    for (int a = 0; a <= g.dim; ++a) {
        out[static_cast<std::size_t>(a)] = g.grad[static_cast<std::size_t>(a)];
        double prod = 1.0;
        for (int b = 0; b <= g.dim; ++b)
            if (b != a) prod *= bary[static_cast<std::size_t>(b)];
        gb += prod * g.grad[static_cast<std::size_t>(a)];
    }
    out[static_cast<std::size_t>(g.dim + 1)] = bubble_scale(g.dim) * gb;
    return out;
}

/// Integral of the bubble over the cell.
inline double bubble_integral(int dim, double volume)
{
    return bubble_scale(dim) * barycentric_monomial_integral(dim, {1, 1, 1, 1}, volume);
}

/// Q(alpha, beta) = int d_alpha b d_beta b, exact.
inline Mat bubble_gradient_gram(const CellGeometry& g)
{
    const int d = g.dim;
    const double c = bubble_scale(d);
    Mat Q = Mat::Zero(d, d);
    for (int i = 0; i <= d; ++i)
        for (int m = 0; m <= d; ++m) {
            std::array<int, 4> e{0, 0, 0, 0};
            for (int a = 0; a <= d; ++a) e[static_cast<std::size_t>(a)] = (a != i ? 1 : 0) + (a != m ? 1 : 0);
            const double w = c * c * barycentric_monomial_integral(d, e, g.volume);
            for (int al = 0; al < d; ++al)
                for (int be = 0; be < d; ++be)
                    Q(al, be) += w * g.grad[static_cast<std::size_t>(i)](al) * g.grad[static_cast<std::size_t>(m)](be);
        }
    return Q;
}

/// Local velocity DOFs of a cell: (d+1) vertices then the bubble, each with `dim` components.
inline std::array<int, 15> cell_velocity_dofs(const Mesh& m, int c)
{
    std::array<int, 15> dofs{};
    const int d = m.dim();
    const auto& cv = m.cell(c);
    for (int a = 0; a <= d; ++a)
        for (int k = 0; k < d; ++k) dofs[static_cast<std::size_t>(a * d + k)] = cv[static_cast<std::size_t>(a)] * d + k;
    for (int k = 0; k < d; ++k)
        dofs[static_cast<std::size_t>((d + 1) * d + k)] = d * m.num_vertices() + c * d + k;
    return dofs;
}

inline double rho_inv_sq(const Point& x) { return 1.0 / (1.0 + x.squaredNorm()); }

} // namespace anisostokes::detail
