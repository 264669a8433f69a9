#include "anisostokes/spaces.hpp"

#include "anisostokes/quadrature.hpp"
#include "detail/fe_local.hpp"

#include <algorithm>
#include <cmath>

namespace anisostokes {

namespace {

struct FacetFrame {
    int m = 2; // facet dimension
    std::array<Point, 3> y{};
    double measure = 0.0;
    Mat tangential_gram_inv;
};

FacetFrame facet_frame(const Mesh& mesh, const std::array<int, 3>& v)
{
    FacetFrame f;
    f.m = mesh.dim() - 1;
    for (int a = 0; a <= f.m; ++a) f.y[static_cast<std::size_t>(a)] = mesh.vertex(v[static_cast<std::size_t>(a)]);
    Mat E(3, f.m);
    for (int a = 1; a <= f.m; ++a) E.col(a - 1) = f.y[static_cast<std::size_t>(a)] - f.y[0];
    f.tangential_gram_inv = (E.transpose() * E).inverse();
    f.measure = mesh.facet_measure(v);
    return f;
}

Vec barycentric_coefficient(int m, int a)
{
    Vec c = Vec::Zero(m);
    if (a == 0) {
        c.setConstant(-1.0);
    } else {
        c(a - 1) = 1.0;
    }
    return c;
}

} // namespace

FunctionSpaces::FunctionSpaces(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh))
{
    ANISO_REQUIRE(mesh_ != nullptr, invalid_argument, "FunctionSpaces: null mesh");
    const Mesh& m = *mesh_;
    dim_ = m.dim();
    const int nv = m.num_vertices();

    std::vector<char> touched(static_cast<std::size_t>(2 * nv), 0);
    for (int c = 0; c < m.num_cells(); ++c)
        for (int a = 0; a <= dim_; ++a)
            touched[static_cast<std::size_t>(2 * m.cell(c)[static_cast<std::size_t>(a)] + side_index(m.side(c)))] = 1;
    vertex_pressure_.assign(static_cast<std::size_t>(2 * nv), -1);
    for (int v = 0; v < nv; ++v)
        for (Side s : {Side::plus, Side::minus}) {
            if (touched[static_cast<std::size_t>(2 * v + side_index(s))] == 0) continue;
            vertex_pressure_[static_cast<std::size_t>(2 * v + side_index(s))] = static_cast<int>(pressure_vertex_.size());
            pressure_vertex_.push_back(v);
            pressure_side_.push_back(s);
        }

    outer_vertex_.assign(static_cast<std::size_t>(nv), 0);
    for (const auto& f : m.outer_facets())
        for (int a = 0; a < dim_; ++a) outer_vertex_[static_cast<std::size_t>(f.v[static_cast<std::size_t>(a)])] = 1;

    interface_index_.assign(static_cast<std::size_t>(nv), -1);
    for (const auto& f : m.interface_facets())
        for (int a = 0; a < dim_; ++a) interface_vertices_.push_back(f.v[static_cast<std::size_t>(a)]);
    std::sort(interface_vertices_.begin(), interface_vertices_.end());
    interface_vertices_.erase(std::unique(interface_vertices_.begin(), interface_vertices_.end()), interface_vertices_.end());
    for (std::size_t i = 0; i < interface_vertices_.size(); ++i)
        interface_index_[static_cast<std::size_t>(interface_vertices_[i])] = static_cast<int>(i);

    const int ni = num_interface_vertices();
    std::vector<Triplet> tm;
    std::vector<Triplet> tk;
    std::vector<Triplet> th;
    for (const auto& facet : m.interface_facets()) {
        const FacetFrame fr = facet_frame(m, facet.v);
        const double diam = m.facet_diameter(facet.v);
        const double scale = fr.measure / ((fr.m + 1.0) * (fr.m + 2.0));
        for (int a = 0; a <= fr.m; ++a) {
            const int ia = interface_index(facet.v[static_cast<std::size_t>(a)]);
            const Vec ca = barycentric_coefficient(fr.m, a);
            for (int b = 0; b <= fr.m; ++b) {
                const int ib = interface_index(facet.v[static_cast<std::size_t>(b)]);
                const Vec cb = barycentric_coefficient(fr.m, b);
                const double mab = scale * (a == b ? 2.0 : 1.0);
                tm.emplace_back(ia, ib, mab);
                th.emplace_back(ia, ib, diam * mab);
                tk.emplace_back(ia, ib, fr.measure * ca.dot(fr.tangential_gram_inv * cb));
            }
        }
    }
    mass_.resize(ni, ni);
    stiffness_.resize(ni, ni);
    mass_h_.resize(ni, ni);
    mass_.setFromTriplets(tm.begin(), tm.end());
    stiffness_.setFromTriplets(tk.begin(), tk.end());
    mass_h_.setFromTriplets(th.begin(), th.end());
    if (ni > 0) {
        mass_solver_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(mass_);
        ANISO_REQUIRE(mass_solver_->info() == Eigen::Success, solver, "FunctionSpaces: singular interface mass matrix");
    }
}

Vec FunctionSpaces::solve_interface_mass(const Vec& moments) const
{
    ANISO_REQUIRE(moments.size() == num_trace(), invalid_argument, "solve_interface_mass: size mismatch");
    ANISO_REQUIRE(num_trace() > 0, invalid_argument, "solve_interface_mass: empty interface");
    const int ni = num_interface_vertices();
    Eigen::Map<const Mat> r(moments.data(), dim_, ni);
    Mat out = mass_solver_->solve(Mat(r.transpose())).transpose();
    return Eigen::Map<const Vec>(out.data(), out.size());
}

Vec FunctionSpaces::apply_interface_mass(const Vec& values) const
{
    ANISO_REQUIRE(values.size() == num_trace(), invalid_argument, "apply_interface_mass: size mismatch");
    const int ni = num_interface_vertices();
    Eigen::Map<const Mat> x(values.data(), dim_, ni);
    Mat out = (mass_ * Mat(x.transpose())).transpose();
    return Eigen::Map<const Vec>(out.data(), out.size());
}

Vec FunctionSpaces::extend_trace(const Vec& trace_values) const
{
    ANISO_REQUIRE(trace_values.size() == num_trace(), invalid_argument, "extend_trace: size mismatch");
    Vec u = Vec::Zero(num_velocity());
    for (int i = 0; i < num_interface_vertices(); ++i)
        for (int k = 0; k < dim_; ++k)
            u(velocity_dof(interface_vertices_[static_cast<std::size_t>(i)], k)) = trace_values(trace_dof(i, k));
    return u;
}

Vec FunctionSpaces::restrict_to_trace(const Vec& velocity) const
{
    ANISO_REQUIRE(velocity.size() == num_velocity(), invalid_argument, "restrict_to_trace: size mismatch");
    Vec t(num_trace());
    for (int i = 0; i < num_interface_vertices(); ++i)
        for (int k = 0; k < dim_; ++k)
            t(trace_dof(i, k)) = velocity(velocity_dof(interface_vertices_[static_cast<std::size_t>(i)], k));
    return t;
}

std::shared_ptr<const FunctionSpaces> build_spaces(std::shared_ptr<const Mesh> mesh)
{
    return std::make_shared<const FunctionSpaces>(std::move(mesh));
}

std::shared_ptr<const FunctionSpaces> build_spaces(Mesh mesh)
{
    return build_spaces(std::make_shared<const Mesh>(std::move(mesh)));
}

FieldPair FieldPair::zero(const FunctionSpaces& sp)
{
    return {Vec::Zero(sp.num_velocity()), Vec::Zero(sp.num_pressure()), Vec::Zero(sp.num_trace())};
}

TraceDensity density_from_moments(const FunctionSpaces& sp, Vec moments)
{
    TraceDensity d;
    d.repr = sp.solve_interface_mass(moments);
    d.moments = std::move(moments);
    return d;
}

TraceDensity density_from_representative(const FunctionSpaces& sp, Vec repr)
{
    TraceDensity d;
    d.moments = sp.apply_interface_mass(repr);
    d.repr = std::move(repr);
    return d;
}

TraceDensity density_from_function(const FunctionSpaces& sp, const std::function<Point(const Point&)>& psi, int points)
{
    const Mesh& m = sp.mesh();
    const int dim = sp.dim();
    const SimplexRule& rule = simplex_rule(dim - 1, points);
    const double fact = std::tgamma(static_cast<double>(dim));
    Vec r = Vec::Zero(sp.num_trace());
    for (const auto& f : m.interface_facets()) {
        const double meas = m.facet_measure(f.v);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            Point x = Point::Zero();
            for (int a = 0; a < dim; ++a) x += rule.bary[q][static_cast<std::size_t>(a)] * m.vertex(f.v[static_cast<std::size_t>(a)]);
            const Point val = psi(x);
            const double w = rule.weights[q] * fact * meas;
            for (int a = 0; a < dim; ++a) {
                const int i = sp.interface_index(f.v[static_cast<std::size_t>(a)]);
                for (int k = 0; k < dim; ++k) r(sp.trace_dof(i, k)) += w * rule.bary[q][static_cast<std::size_t>(a)] * val(k);
            }
        }
    }
    return density_from_moments(sp, std::move(r));
}

TraceField field_from_function(const FunctionSpaces& sp, const std::function<Point(const Point&)>& phi)
{
    TraceField t{Vec(sp.num_trace())};
    for (int i = 0; i < sp.num_interface_vertices(); ++i) {
        const Point val = phi(sp.mesh().vertex(sp.interface_vertices()[static_cast<std::size_t>(i)]));
        for (int k = 0; k < sp.dim(); ++k) t.values(sp.trace_dof(i, k)) = val(k);
    }
    return t;
}

TraceDensity normal_density(const FunctionSpaces& sp)
{
    const Mesh& m = sp.mesh();
    const auto normals = interface_normals(m);
    const int dim = sp.dim();
    Vec r = Vec::Zero(sp.num_trace());
    for (std::size_t f = 0; f < normals.size(); ++f) {
        const auto& facet = m.interface_facets()[f];
        const double w = m.facet_measure(facet.v) / dim;
        for (int a = 0; a < dim; ++a) {
            const int i = sp.interface_index(facet.v[static_cast<std::size_t>(a)]);
            for (int k = 0; k < dim; ++k) r(sp.trace_dof(i, k)) += w * normals[f](k);
        }
    }
    return density_from_moments(sp, std::move(r));
}

TraceField constant_trace(const FunctionSpaces& sp, const Point& c)
{
    return field_from_function(sp, [&c](const Point&) { return c; });
}

double pairing(const TraceDensity& psi, const TraceField& phi)
{
    ANISO_REQUIRE(psi.moments.size() == phi.values.size(), invalid_argument, "pairing: size mismatch");
    return psi.moments.dot(phi.values);
}

Vec side_velocity(const FunctionSpaces& sp, const FieldPair& f, Side side)
{
    ANISO_REQUIRE(f.u.size() == sp.num_velocity(), invalid_argument, "side_velocity: velocity size mismatch");
    if (side == Side::minus || f.jump.size() == 0) return f.u;
    return f.u + sp.extend_trace(f.jump);
}

TraceField trace(const FunctionSpaces& sp, const FieldPair& f, Side side)
{
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "trace: empty interface");
    return {sp.restrict_to_trace(side_velocity(sp, f, side))};
}

TraceField trace(const FunctionSpaces& sp, const Vec& velocity)
{
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "trace: empty interface");
    return {sp.restrict_to_trace(velocity)};
}

NormKind parse_norm_kind(const std::string& name)
{
    if (name == "rho-weighted-L2") return NormKind::rho_weighted_l2;
    if (name == "gradient-L2") return NormKind::gradient_l2;
    if (name == "full-H1-weighted") return NormKind::full_h1_weighted;
    throw Error(ErrorCategory::invalid_argument, "unknown norm kind '" + name + "'");
}

namespace {

double velocity_norm_sq(const FunctionSpaces& sp, const Vec* plus, const Vec* minus, NormKind kind, int points)
{
    const Mesh& m = sp.mesh();
    const int dim = sp.dim();
    const SimplexRule& rule = simplex_rule(dim, points);
    const double fact = std::tgamma(dim + 1.0);
    const bool want_l2 = kind != NormKind::gradient_l2;
    const bool want_grad = kind != NormKind::rho_weighted_l2;
    double total = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        const Vec* u = m.side(c) == Side::plus ? plus : minus;
        if (u == nullptr) continue;
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        Mat coef(dim + 2, dim);
        for (int a = 0; a < dim + 2; ++a)
            for (int k = 0; k < dim; ++k) coef(a, k) = (*u)(dofs[static_cast<std::size_t>(a * dim + k)]);
        double cell_sum = 0.0;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto& bary = rule.bary[q];
            double integrand = 0.0;
            if (want_l2) {
                const auto phi = detail::basis_values(dim, bary);
                Eigen::RowVectorXd val = Eigen::RowVectorXd::Zero(dim);
                for (int a = 0; a < dim + 2; ++a) val += phi[static_cast<std::size_t>(a)] * coef.row(a);
                integrand += detail::rho_inv_sq(g.map(bary)) * val.squaredNorm();
            }
            if (want_grad) {
                const auto dphi = detail::basis_gradients(g, bary);
                Mat grad = Mat::Zero(dim, dim);
                for (int a = 0; a < dim + 2; ++a)
                    grad += coef.row(a).transpose() * dphi[static_cast<std::size_t>(a)].head(dim).transpose();
                integrand += grad.squaredNorm();
            }
            cell_sum += rule.weights[q] * integrand;
        }
        total += fact * g.volume * cell_sum;
    }
    return total;
}

} // namespace

double weighted_norm(const FunctionSpaces& sp, const Vec& velocity, NormKind kind, std::optional<Side> restrict_to,
                     int points)
{
    ANISO_REQUIRE(velocity.size() == sp.num_velocity(), invalid_argument, "weighted_norm: velocity size mismatch");
    const Vec* plus = (!restrict_to || *restrict_to == Side::plus) ? &velocity : nullptr;
    const Vec* minus = (!restrict_to || *restrict_to == Side::minus) ? &velocity : nullptr;
    return std::sqrt(velocity_norm_sq(sp, plus, minus, kind, points));
}

double weighted_norm(const FunctionSpaces& sp, const FieldPair& f, NormKind kind, int points)
{
    const Vec up = side_velocity(sp, f, Side::plus);
    return std::sqrt(velocity_norm_sq(sp, &up, &f.u, kind, points));
}

double weighted_norm_scalar(const FunctionSpaces& sp, const Vec& vertex_values, NormKind kind, int points)
{
    const Mesh& m = sp.mesh();
    ANISO_REQUIRE(vertex_values.size() == m.num_vertices(), invalid_argument, "weighted_norm_scalar: size mismatch");
    const int dim = sp.dim();
    const SimplexRule& rule = simplex_rule(dim, points);
    const double fact = std::tgamma(dim + 1.0);
    double total = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        const auto g = detail::cell_geometry(m, c);
        const auto& cv = m.cell(c);
        double cell_sum = 0.0;
        if (kind != NormKind::rho_weighted_l2) {
            Point grad = Point::Zero();
            for (int a = 0; a <= dim; ++a) grad += vertex_values(cv[static_cast<std::size_t>(a)]) * g.grad[static_cast<std::size_t>(a)];
            total += g.volume * grad.squaredNorm();
        }
        if (kind == NormKind::gradient_l2) continue;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            double val = 0.0;
            for (int a = 0; a <= dim; ++a) val += rule.bary[q][static_cast<std::size_t>(a)] * vertex_values(cv[static_cast<std::size_t>(a)]);
            cell_sum += rule.weights[q] * detail::rho_inv_sq(g.map(rule.bary[q])) * val * val;
        }
        total += fact * g.volume * cell_sum;
    }
    return std::sqrt(total);
}

namespace {

Mat expand_components(const Mat& scalar, int dim)
{
    const Eigen::Index n = scalar.rows();
    Mat out = Mat::Zero(n * dim, n * dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (int k = 0; k < dim; ++k) out(i * dim + k, j * dim + k) = scalar(i, j);
    return out;
}

} // namespace

TraceNorms trace_norms(const FunctionSpaces& sp, TraceNormKind kind)
{
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "trace_norms: empty interface");
    const Mat M(sp.interface_mass());
    const Mat K(sp.interface_stiffness());
    TraceNorms out;
    out.kind = kind;
    if (kind == TraceNormKind::mesh_weighted) {
        const Mat Minv = M.inverse();
        out.half = expand_components(M + K, sp.dim());
        out.minus_half = expand_components(Minv * Mat(sp.interface_mass_h()) * Minv, sp.dim());
    } else {
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(K + M, M);
        ANISO_REQUIRE(eig.info() == Eigen::Success, solver, "trace_norms: eigensolver failed");
        const Mat& X = eig.eigenvectors();
        const Vec s = eig.eigenvalues().cwiseSqrt();
        const Mat MX = M * X;
        out.half = expand_components(MX * s.asDiagonal() * MX.transpose(), sp.dim());
        out.minus_half = expand_components(X * s.cwiseInverse().asDiagonal() * X.transpose(), sp.dim());
    }
    return out;
}

double TraceNorms::norm(const TraceField& phi) const
{
    return std::sqrt(std::max(0.0, phi.values.dot(half * phi.values)));
}

double TraceNorms::norm(const TraceDensity& psi) const
{
    return std::sqrt(std::max(0.0, psi.moments.dot(minus_half * psi.moments)));
}

} // namespace anisostokes
