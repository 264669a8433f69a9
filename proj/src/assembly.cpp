#include "anisostokes/assembly.hpp"

#include "anisostokes/quadrature.hpp"
#include "detail/fe_local.hpp"

#include <cmath>

namespace anisostokes {

namespace {

bool keep(const Mesh& m, int c, std::optional<Side> side)
{
    return !side || m.side(c) == *side;
}

SpMat from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t)
{
    SpMat M(rows, cols);
    M.setFromTriplets(t.begin(), t.end());
    M.makeCompressed();
    return M;
}

} // namespace

SpMat assemble_a(const FunctionSpaces& sp, const CoeffTensor& t, std::optional<Side> side)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    ANISO_REQUIRE(t.dim() == d, invalid_argument, "assemble_a: tensor dimension does not match the mesh");
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(m.num_cells()) * static_cast<std::size_t>((d + 1) * (d + 1) * d * d + d * d));
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        const TensorValue a = t.at(m.centroid(c), m.side(c));
        for (int s = 0; s <= d; ++s)
            for (int r = 0; r <= d; ++r) {
                const Point& gs = g.grad[static_cast<std::size_t>(s)];
                const Point& gr = g.grad[static_cast<std::size_t>(r)];
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        double v = 0.0;
                        for (int al = 0; al < d; ++al)
                            for (int be = 0; be < d; ++be) v += a(i, j, al, be) * gs(al) * gr(be);
                        trip.emplace_back(dofs[static_cast<std::size_t>(s * d + i)], dofs[static_cast<std::size_t>(r * d + j)],
                                          g.volume * v);
                    }
            }
        const Mat Q = detail::bubble_gradient_gram(g);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double v = 0.0;
                for (int al = 0; al < d; ++al)
                    for (int be = 0; be < d; ++be) v += a(i, j, al, be) * Q(al, be);
                trip.emplace_back(dofs[static_cast<std::size_t>((d + 1) * d + i)], dofs[static_cast<std::size_t>((d + 1) * d + j)], v);
            }
    }
    return from_triplets(sp.num_velocity(), sp.num_velocity(), trip);
}

SpMat assemble_b(const FunctionSpaces& sp, std::optional<Side> side)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(m.num_cells()) * static_cast<std::size_t>((d + 1) * (d + 2) * d));
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        const double ib = detail::bubble_integral(d, g.volume);
        for (int r = 0; r <= d; ++r) {
            const int row = sp.pressure_dof(m.cell(c)[static_cast<std::size_t>(r)], m.side(c));
            for (int s = 0; s <= d; ++s)
                for (int j = 0; j < d; ++j)
                    trip.emplace_back(row, dofs[static_cast<std::size_t>(s * d + j)],
                                      -g.grad[static_cast<std::size_t>(s)](j) * g.volume / (d + 1.0));
            for (int j = 0; j < d; ++j)
                trip.emplace_back(row, dofs[static_cast<std::size_t>((d + 1) * d + j)], g.grad[static_cast<std::size_t>(r)](j) * ib);
        }
    }
    return from_triplets(sp.num_pressure(), sp.num_velocity(), trip);
}

SpMat assemble_gradient_stiffness(const FunctionSpaces& sp, std::optional<Side> side)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(m.num_cells()) * static_cast<std::size_t>((d + 1) * (d + 1) * d + d));
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        for (int s = 0; s <= d; ++s)
            for (int r = 0; r <= d; ++r) {
                const double v = g.volume * g.grad[static_cast<std::size_t>(s)].dot(g.grad[static_cast<std::size_t>(r)]);
                for (int i = 0; i < d; ++i)
                    trip.emplace_back(dofs[static_cast<std::size_t>(s * d + i)], dofs[static_cast<std::size_t>(r * d + i)], v);
            }
        const double qb = detail::bubble_gradient_gram(g).trace();
        for (int i = 0; i < d; ++i)
            trip.emplace_back(dofs[static_cast<std::size_t>((d + 1) * d + i)], dofs[static_cast<std::size_t>((d + 1) * d + i)], qb);
    }
    return from_triplets(sp.num_velocity(), sp.num_velocity(), trip);
}

SpMat assemble_velocity_mass(const FunctionSpaces& sp, bool rho_weighted, std::optional<Side> side, int points)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    const SimplexRule& rule = simplex_rule(d, points);
    const double fact = std::tgamma(d + 1.0);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(m.num_cells()) * static_cast<std::size_t>((d + 2) * (d + 2) * d));
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        Mat local = Mat::Zero(d + 2, d + 2);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto phi = detail::basis_values(d, rule.bary[q]);
            const double w = rule.weights[q] * fact * g.volume * (rho_weighted ? detail::rho_inv_sq(g.map(rule.bary[q])) : 1.0);
            for (int s = 0; s < d + 2; ++s)
                for (int r = 0; r < d + 2; ++r) local(s, r) += w * phi[static_cast<std::size_t>(s)] * phi[static_cast<std::size_t>(r)];
        }
        for (int s = 0; s < d + 2; ++s)
            for (int r = 0; r < d + 2; ++r)
                for (int i = 0; i < d; ++i)
                    trip.emplace_back(dofs[static_cast<std::size_t>(s * d + i)], dofs[static_cast<std::size_t>(r * d + i)], local(s, r));
    }
    return from_triplets(sp.num_velocity(), sp.num_velocity(), trip);
}

SpMat assemble_velocity_h1(const FunctionSpaces& sp, bool rho_weighted, std::optional<Side> side)
{
    SpMat X = assemble_gradient_stiffness(sp, side) + assemble_velocity_mass(sp, rho_weighted, side);
    X.makeCompressed();
    return X;
}

SpMat assemble_pressure_mass(const FunctionSpaces& sp, std::optional<Side> side)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    std::vector<Triplet> trip;
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const double scale = m.volume(c) / ((d + 1.0) * (d + 2.0));
        for (int a = 0; a <= d; ++a)
            for (int b = 0; b <= d; ++b)
                trip.emplace_back(sp.pressure_dof(m.cell(c)[static_cast<std::size_t>(a)], m.side(c)),
                                  sp.pressure_dof(m.cell(c)[static_cast<std::size_t>(b)], m.side(c)), scale * (a == b ? 2.0 : 1.0));
    }
    return from_triplets(sp.num_pressure(), sp.num_pressure(), trip);
}

LoadFunctional assemble_volume_load(const FunctionSpaces& sp, const std::function<Point(const Point&, Side)>& f,
                                    std::optional<Side> side, int points)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    const SimplexRule& rule = simplex_rule(d, points);
    const double fact = std::tgamma(d + 1.0);
    Vec out = Vec::Zero(sp.num_velocity());
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto phi = detail::basis_values(d, rule.bary[q]);
            const Point val = f(g.map(rule.bary[q]), m.side(c));
            const double w = rule.weights[q] * fact * g.volume;
            for (int s = 0; s < d + 2; ++s)
                for (int i = 0; i < d; ++i) out(dofs[static_cast<std::size_t>(s * d + i)]) += w * phi[static_cast<std::size_t>(s)] * val(i);
        }
    }
    return {std::move(out), LoadSource::volume};
}

LoadFunctional assemble_weak_residual(const FunctionSpaces& sp, const CoeffTensor& t, const GradientField& grad_u,
                                      const PressureField& pi, std::optional<Side> side, int points)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    const SimplexRule& rule = simplex_rule(d, points);
    const double fact = std::tgamma(d + 1.0);
    Vec out = Vec::Zero(sp.num_velocity());
    for (int c = 0; c < m.num_cells(); ++c) {
        if (!keep(m, c, side)) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        const TensorValue a = t.at(m.centroid(c), m.side(c));
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const Point x = g.map(rule.bary[q]);
            const auto dphi = detail::basis_gradients(g, rule.bary[q]);
            const Mat R = contract(a, grad_u(x, m.side(c))); // R(alpha, i)
            const double p = pi(x, m.side(c));
            const double w = rule.weights[q] * fact * g.volume;
            for (int s = 0; s < d + 2; ++s) {
                const Point& gs = dphi[static_cast<std::size_t>(s)];
                for (int i = 0; i < d; ++i) {
                    double v = -p * gs(i);
                    for (int al = 0; al < d; ++al) v += R(al, i) * gs(al);
                    out(dofs[static_cast<std::size_t>(s * d + i)]) += w * v;
                }
            }
        }
    }
    return {std::move(out), LoadSource::residual};
}

namespace {

LoadFunctional convection_impl(const FunctionSpaces& sp, const std::function<double(int, const Point&)>& lambda,
                               const Vec& v, int points)
{
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    ANISO_REQUIRE(v.size() == sp.num_velocity(), invalid_argument, "assemble_convection: velocity size mismatch");
    const SimplexRule& rule = simplex_rule(d, points);
    const double fact = std::tgamma(d + 1.0);
    Vec out = Vec::Zero(sp.num_velocity());
    for (int c = 0; c < m.num_cells(); ++c) {
        if (m.side(c) != Side::plus) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        Mat coef(d + 2, d);
        for (int s = 0; s < d + 2; ++s)
            for (int k = 0; k < d; ++k) coef(s, k) = v(dofs[static_cast<std::size_t>(s * d + k)]);
        if (coef.isZero(0.0)) continue;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const Point x = g.map(rule.bary[q]);
            const double lam = lambda(c, x);
            if (lam == 0.0) continue;
            const auto phi = detail::basis_values(d, rule.bary[q]);
            const auto dphi = detail::basis_gradients(g, rule.bary[q]);
            Vec val = Vec::Zero(d);
            Mat grad = Mat::Zero(d, d); // grad(i, j) = d_j v_i
            for (int s = 0; s < d + 2; ++s) {
                val += phi[static_cast<std::size_t>(s)] * coef.row(s).transpose();
                grad += coef.row(s).transpose() * dphi[static_cast<std::size_t>(s)].head(d).transpose();
            }
            const Vec conv = grad * val;
            const double w = rule.weights[q] * fact * g.volume * lam;
            for (int s = 0; s < d + 2; ++s)
                for (int i = 0; i < d; ++i) out(dofs[static_cast<std::size_t>(s * d + i)]) += w * phi[static_cast<std::size_t>(s)] * conv(i);
        }
    }
    return {std::move(out), LoadSource::convection};
}

} // namespace

LoadFunctional assemble_convection(const FunctionSpaces& sp, const std::function<double(const Point&)>& lambda, const Vec& v,
                                   int points)
{
    return convection_impl(sp, [&lambda](int, const Point& x) { return lambda(x); }, v, points);
}

LoadFunctional assemble_convection(const FunctionSpaces& sp, const Vec& lambda_per_cell, const Vec& v, int points)
{
    const Mesh& m = sp.mesh();
    ANISO_REQUIRE(lambda_per_cell.size() == m.num_cells(), invalid_argument, "assemble_convection: lambda size mismatch");
    for (int c = 0; c < m.num_cells(); ++c)
        ANISO_REQUIRE(m.side(c) == Side::plus || lambda_per_cell(c) == 0.0, invalid_argument,
                      "assemble_convection: lambda must vanish on Omega_- cells");
    return convection_impl(sp, [&lambda_per_cell](int c, const Point&) { return lambda_per_cell(c); }, v, points);
}

LoadFunctional boundary_pairing(const TraceDensity& psi, const FunctionSpaces& sp)
{
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "boundary_pairing: empty interface");
    ANISO_REQUIRE(psi.moments.size() == sp.num_trace(), invalid_argument, "boundary_pairing: density size mismatch");
    return {sp.extend_trace(psi.moments), LoadSource::boundary};
}

OuterBc parse_outer_bc(const std::string& name)
{
    if (name == "traction-free") return OuterBc::traction_free;
    if (name == "dirichlet") return OuterBc::dirichlet;
    throw Error(ErrorCategory::invalid_argument, "unknown outer boundary condition '" + name + "'");
}

SpMat SaddleSystem::kkt_matrix() const
{
    const int nu = num_velocity();
    const int np = num_pressure();
    const int nc = static_cast<int>(C.rows());
    const int ncp = static_cast<int>(Cp.rows());
    const int n = kkt_size();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * B.nonZeros() + 2 * C.nonZeros() + 2 * Cp.nonZeros()));
    auto add = [&t](const SpMat& M, int r0, int c0, bool transpose) {
        for (int k = 0; k < M.outerSize(); ++k)
            for (SpMat::InnerIterator it(M, k); it; ++it) {
                if (transpose) {
                    t.emplace_back(c0 + static_cast<int>(it.col()), r0 + static_cast<int>(it.row()), it.value());
                } else {
                    t.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()), it.value());
                }
            }
    };
    add(A, 0, 0, false);
    add(B, nu, 0, false);
    add(B, nu, 0, true);
    if (nc > 0) {
        add(C, nu + np, 0, false);
        add(C, nu + np, 0, true);
    }
    if (ncp > 0) {
        add(Cp, nu + np + nc, nu, false);
        add(Cp, nu + np + nc, nu, true);
    }
    SpMat K(n, n);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    return K;
}

Vec SaddleSystem::kkt_rhs(const Vec& f, const Vec& g) const
{
    ANISO_REQUIRE(f.size() == num_velocity() && g.size() == num_pressure(), invalid_argument, "kkt_rhs: size mismatch");
    Vec r = Vec::Zero(kkt_size());
    r.head(num_velocity()) = f;
    r.segment(num_velocity(), num_pressure()) = g;
    return r;
}

SaddleSystem assemble_saddle_system(std::shared_ptr<const FunctionSpaces> spp, const CoeffTensor& t, OuterBc bc,
                                    bool equal_order)
{
    ANISO_REQUIRE(spp != nullptr, invalid_argument, "assemble_saddle_system: null spaces");
    const FunctionSpaces& sp = *spp;
    const Mesh& m = sp.mesh();
    const int d = sp.dim();
    SaddleSystem s;
    s.spaces = spp;
    s.outer_bc = bc;
    s.equal_order = equal_order;
    for (Side side : {Side::plus, Side::minus}) {
        s.A_side[static_cast<std::size_t>(side_index(side))] = assemble_a(sp, t, side);
        s.B_side[static_cast<std::size_t>(side_index(side))] = assemble_b(sp, side);
    }
    s.A = s.A_side[0] + s.A_side[1];
    s.B = s.B_side[0] + s.B_side[1];
    s.A.makeCompressed();
    s.B.makeCompressed();
    s.F = Vec::Zero(sp.num_velocity());
    s.G = Vec::Zero(sp.num_pressure());
    s.fixed.assign(static_cast<std::size_t>(sp.num_velocity()), 0);

    if (bc == OuterBc::traction_free) {
        std::vector<Triplet> tc;
        for (const auto& f : m.outer_facets()) {
            const double w = m.facet_measure(f.v) / d;
            for (int a = 0; a < d; ++a)
                for (int k = 0; k < d; ++k) tc.emplace_back(k, sp.velocity_dof(f.v[static_cast<std::size_t>(a)], k), w);
        }
        s.C.resize(d, sp.num_velocity());
        s.C.setFromTriplets(tc.begin(), tc.end());
        s.Cp.resize(0, sp.num_pressure());
    } else {
        for (int v = 0; v < m.num_vertices(); ++v)
            if (sp.is_outer_vertex(v))
                for (int k = 0; k < d; ++k) s.fixed[static_cast<std::size_t>(sp.velocity_dof(v, k))] = 1;
        std::vector<Triplet> tp;
        for (int c = 0; c < m.num_cells(); ++c)
            for (int a = 0; a <= d; ++a)
                tp.emplace_back(0, sp.pressure_dof(m.cell(c)[static_cast<std::size_t>(a)], m.side(c)), m.volume(c) / (d + 1.0));
        s.Cp.resize(1, sp.num_pressure());
        s.Cp.setFromTriplets(tp.begin(), tp.end());
        s.C.resize(0, sp.num_velocity());
    }
    if (equal_order) {
        for (int i = sp.num_vertex_velocity(); i < sp.num_velocity(); ++i) s.fixed[static_cast<std::size_t>(i)] = 1;
    }
    return s;
}

TraceDensity conormal_derivative(const FunctionSpaces& sp, const SpMat& A_side, const SpMat& B_side, const Vec& u_side,
                                 const Vec& pi, const Vec& f_side, Side side)
{
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "conormal_derivative: empty interface");
    Vec r = A_side * u_side + B_side.transpose() * pi;
    if (f_side.size() > 0) {
        ANISO_REQUIRE(f_side.size() == r.size(), invalid_argument, "conormal_derivative: load size mismatch");
        r += f_side;
    }
    Vec moments = side_sign(side) * sp.restrict_to_trace(r);
    return density_from_moments(sp, std::move(moments));
}

TraceDensity conormal_derivative(const SaddleSystem& sys, const FieldPair& f, const Vec& f_side, Side side)
{
    const auto i = static_cast<std::size_t>(side_index(side));
    return conormal_derivative(*sys.spaces, sys.A_side[i], sys.B_side[i], side_velocity(*sys.spaces, f, side), f.p, f_side,
                               side);
}

} // namespace anisostokes
