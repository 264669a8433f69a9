#include "anisostokes/transmission.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace anisostokes {

TransmissionData TransmissionData::zero(const FunctionSpaces& sp)
{
    TransmissionData d;
    d.f_plus.moments = Vec::Zero(sp.num_velocity());
    d.f_minus.moments = Vec::Zero(sp.num_velocity());
    d.h.values = Vec::Zero(sp.num_trace());
    d.g = density_from_moments(sp, Vec::Zero(sp.num_trace()));
    return d;
}

TransmissionBackend parse_transmission_backend(const std::string& name)
{
    if (name == "monolithic") return TransmissionBackend::monolithic;
    if (name == "representation") return TransmissionBackend::representation;
    throw Error(ErrorCategory::config, "unknown transmission backend '" + name + "'");
}

std::string backend_name(TransmissionBackend b)
{
    return b == TransmissionBackend::monolithic ? "monolithic" : "representation";
}

double TransmissionResiduals::max() const
{
    return std::max({interior_plus, interior_minus, divergence, trace_jump, conormal_jump});
}

TransmissionContext::TransmissionContext(std::shared_ptr<const FunctionSpaces> sp, const CoeffTensor& t, OuterBc bc,
                                         TraceNormKind trace_kind, int threads)
    : potentials_(sp, t, bc, threads)
{
    const FunctionSpaces& s = *sp;
    trace_norms_ = std::make_shared<const TraceNorms>(s.num_trace() > 0 ? anisostokes::trace_norms(s, trace_kind)
                                                                        : TraceNorms{trace_kind, Mat(), Mat()});
    for (Side side : {Side::plus, Side::minus}) {
        const auto i = static_cast<std::size_t>(side_index(side));
        h1_[i] = assemble_velocity_h1(s, side == Side::minus, side);
        gradient_[i] = assemble_gradient_stiffness(s, side);
        outside_[i].assign(static_cast<std::size_t>(s.num_velocity()), 1);
        for (int k = 0; k < h1_[i].outerSize(); ++k)
            for (SpMat::InnerIterator it(h1_[i], k); it; ++it)
                if (it.row() == it.col() && it.value() != 0.0) outside_[i][static_cast<std::size_t>(k)] = 0;
        riesz_[i] = std::make_shared<const CondensedSolver>(h1_[i], outside_[i], s.num_vertex_velocity(), s.num_velocity(),
                                                            s.dim());
    }
    pressure_mass_ = assemble_pressure_mass(s);
}

Vec TransmissionContext::restrict_to_side(const Vec& velocity, Side s) const
{
    const auto& out = outside_[static_cast<std::size_t>(side_index(s))];
    Vec r = velocity;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        if (out[static_cast<std::size_t>(i)]) r(i) = 0.0;
    return r;
}

Vec TransmissionContext::riesz(const Vec& moments, Side s) const
{
    return riesz_[static_cast<std::size_t>(side_index(s))]->solve(restrict_to_side(moments, s));
}

double TransmissionContext::dual_norm(const Vec& moments, Side s) const
{
    const Vec m = restrict_to_side(moments, s);
    return std::sqrt(std::max(0.0, m.dot(riesz(m, s))));
}

double TransmissionContext::h1_norm(const Vec& velocity, Side s) const
{
    return std::sqrt(std::max(0.0, velocity.dot(h1(s) * velocity)));
}

double TransmissionContext::gradient_norm(const Vec& velocity, Side s) const
{
    return std::sqrt(std::max(0.0, velocity.dot(gradient_[static_cast<std::size_t>(side_index(s))] * velocity)));
}

double TransmissionContext::data_norm(const TransmissionData& d) const
{
    double s = std::pow(dual_norm(d.f_plus.moments, Side::plus), 2) + std::pow(dual_norm(d.f_minus.moments, Side::minus), 2);
    if (spaces().num_trace() > 0) s += std::pow(trace_norms_->norm(d.h), 2) + std::pow(trace_norms_->norm(d.g), 2);
    return std::sqrt(s);
}

double TransmissionContext::velocity_norm(const FieldPair& f) const
{
    const FunctionSpaces& sp = spaces();
    return std::hypot(h1_norm(side_velocity(sp, f, Side::plus), Side::plus),
                      h1_norm(side_velocity(sp, f, Side::minus), Side::minus));
}

double TransmissionContext::solution_norm(const FieldPair& f) const
{
    return std::hypot(velocity_norm(f), std::sqrt(std::max(0.0, f.p.dot(pressure_mass_ * f.p))));
}

namespace {

double ratio(double num, double scale)
{
    return scale > 0.0 ? num / scale : num;
}

bool is_interface_dof(const FunctionSpaces& sp, int dof)
{
    return !sp.is_bubble_dof(dof) && sp.num_trace() > 0 && sp.interface_index(dof / sp.dim()) >= 0;
}

void check_dirichlet_flux(const TransmissionContext& ctx, const TransmissionData& d)
{
    const FunctionSpaces& sp = ctx.spaces();
    if (ctx.system().outer_bc != OuterBc::dirichlet || sp.num_trace() == 0) return;
    const double flux = trace_flux(ctx.system(), d.h);
    double area = 0.0;
    for (const auto& f : sp.mesh().interface_facets()) area += sp.mesh().facet_measure(f.v);
    const double scale = area * d.h.values.cwiseAbs().maxCoeff();
    ANISO_REQUIRE(std::abs(flux) <= 1e-9 * scale, invalid_argument,
                  "transmission: velocity jump has nonzero flux, incompatible with the Dirichlet outer condition");
}

TransmissionSolution solve_monolithic(const TransmissionContext& ctx, const TransmissionData& d)
{
    const FunctionSpaces& sp = ctx.spaces();
    const SaddleSystem& sys = ctx.system();
    Vec F = -(d.f_plus.moments + d.f_minus.moments);
    Vec G = Vec::Zero(sp.num_pressure());
    Vec Eh = Vec::Zero(sp.num_velocity());
    if (sp.num_trace() > 0) {
        Eh = sp.extend_trace(d.h.values);
        F += sp.extend_trace(d.g.moments) - sys.A_side[0] * Eh;
        G = -(sys.B_side[0] * Eh);
    }
    TransmissionSolution sol;
    sol.field = ctx.potentials().solve(F, G, &sol.multipliers);
    sol.field.jump = sp.num_trace() > 0 ? d.h.values : Vec();
    return sol;
}

TransmissionSolution solve_representation(const TransmissionContext& ctx, const TransmissionData& d)
{
    const FunctionSpaces& sp = ctx.spaces();
    const SaddleSystem& sys = ctx.system();
    const PotentialContext& pc = ctx.potentials();
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "representation backend needs an interface");
    const LoadFunctional zero{Vec::Zero(sp.num_velocity()), LoadSource::volume};
    const PotentialPair np = newtonian(pc, d.f_plus, zero);
    const PotentialPair nm = newtonian(pc, zero, d.f_minus);
    const Vec h0 = d.h.values - (np.gamma_plus.values - nm.gamma_minus.values);
    const Vec g0 = d.g.moments - (np.T_plus->moments - nm.T_minus->moments);
    const PotentialPair s = single_layer(pc, density_from_moments(sp, g0));
    const PotentialPair w = double_layer(pc, TraceField{h0});

    const Vec up = side_velocity(sp, np.field, Side::plus) + side_velocity(sp, s.field, Side::plus) -
                   side_velocity(sp, w.field, Side::plus);
    const Vec um = nm.field.u + s.field.u - w.field.u;
    const Vec pp = np.field.p + s.field.p - w.field.p;
    const Vec pm = nm.field.p + s.field.p - w.field.p;

    const Mesh& m = sp.mesh();
    const int n = sp.dim();
    TransmissionSolution sol;
    sol.field.u = Vec::Zero(sp.num_velocity());
    for (int v = 0; v < m.num_vertices(); ++v) {
        const Vec& src = sp.touches(v, Side::minus) ? um : up;
        for (int k = 0; k < n; ++k) sol.field.u(sp.velocity_dof(v, k)) = src(sp.velocity_dof(v, k));
    }
    for (int c = 0; c < m.num_cells(); ++c) {
        const Vec& src = m.side(c) == Side::plus ? up : um;
        for (int k = 0; k < n; ++k) sol.field.u(sp.bubble_dof(c, k)) = src(sp.bubble_dof(c, k));
    }
    sol.field.jump = sp.restrict_to_trace(up) - sp.restrict_to_trace(um);
    sol.field.p.resize(sp.num_pressure());
    for (int q = 0; q < sp.num_pressure(); ++q) sol.field.p(q) = sp.pressure_side(q) == Side::plus ? pp(q) : pm(q);
    sol.multipliers = nm.multipliers + s.multipliers - w.multipliers;
    if (sys.Cp.rows() > 0) {
        const Vec ones = Vec::Ones(sp.num_pressure());
        const double shift = (sys.Cp * sol.field.p)(0) / (sys.Cp * ones)(0);
        sol.field.p.array() -= shift;
    }
    return sol;
}

} // namespace

TransmissionResiduals transmission_residuals(const TransmissionContext& ctx, const TransmissionData& d, const FieldPair& f,
                                             const Vec& multipliers, TraceDensity* T_plus, TraceDensity* T_minus)
{
    const FunctionSpaces& sp = ctx.spaces();
    const SaddleSystem& sys = ctx.system();
    const Vec up = side_velocity(sp, f, Side::plus);
    const Vec um = side_velocity(sp, f, Side::minus);
    const Vec ap = sys.A_side[0] * up;
    const Vec bp = sys.B_side[0].transpose() * f.p;
    const Vec am = sys.A_side[1] * um;
    const Vec bm = sys.B_side[1].transpose() * f.p;
    Vec rp = ap + bp + d.f_plus.moments;
    Vec rm = am + bm + d.f_minus.moments;
    if (sys.C.rows() > 0) rm += sys.C.transpose() * multipliers.head(sys.C.rows());

    TransmissionResiduals r;
    Vec ip = ctx.restrict_to_side(rp, Side::plus);
    Vec im = ctx.restrict_to_side(rm, Side::minus);
    for (int i = 0; i < sp.num_velocity(); ++i) {
        if (is_interface_dof(sp, i)) ip(i) = im(i) = 0.0;
        if (sys.fixed[static_cast<std::size_t>(i)]) im(i) = 0.0;
    }
    r.interior_plus = ratio(ip.norm(), ap.norm() + bp.norm() + d.f_plus.moments.norm());
    r.interior_minus = ratio(im.norm(), am.norm() + bm.norm() + d.f_minus.moments.norm());
    const Vec dp = sys.B_side[0] * up;
    const Vec dm = sys.B_side[1] * um;
    const Vec ds = sys.B_side[0].cwiseAbs() * up.cwiseAbs() + sys.B_side[1].cwiseAbs() * um.cwiseAbs();
    r.divergence = ratio((dp + dm).norm(), ds.norm());
    if (sp.num_trace() > 0) {
        const Vec gp = sp.restrict_to_trace(up);
        const Vec gm = sp.restrict_to_trace(um);
        const double hs = std::max({gp.cwiseAbs().maxCoeff(), gm.cwiseAbs().maxCoeff(), d.h.values.cwiseAbs().maxCoeff()});
        r.trace_jump = ratio((gp - gm - d.h.values).cwiseAbs().maxCoeff(), hs);
        const Vec tp = sp.restrict_to_trace(rp);
        const Vec tm = -sp.restrict_to_trace(am + bm + d.f_minus.moments);
        r.conormal_jump = ratio((tp - tm - d.g.moments).norm(), tp.norm() + tm.norm() + d.g.moments.norm());
        if (T_plus != nullptr) *T_plus = density_from_moments(sp, tp);
        if (T_minus != nullptr) *T_minus = density_from_moments(sp, tm);
    }
    return r;
}

TransmissionSolution solve_linear_transmission(const TransmissionContext& ctx, const TransmissionData& d,
                                               TransmissionBackend backend)
{
    const FunctionSpaces& sp = ctx.spaces();
    ANISO_REQUIRE(d.f_plus.moments.size() == sp.num_velocity() && d.f_minus.moments.size() == sp.num_velocity(),
                  invalid_argument, "transmission: load size mismatch");
    ANISO_REQUIRE(d.h.values.size() == sp.num_trace() && d.g.moments.size() == sp.num_trace(), invalid_argument,
                  "transmission: jump data size mismatch");
    ANISO_REQUIRE(d.f_plus.moments.allFinite() && d.f_minus.moments.allFinite() && d.h.values.allFinite() &&
                      d.g.moments.allFinite(),
                  invalid_argument, "transmission: data not finite");
    check_dirichlet_flux(ctx, d);
    const auto t0 = std::chrono::steady_clock::now();
    TransmissionSolution sol =
        backend == TransmissionBackend::monolithic ? solve_monolithic(ctx, d) : solve_representation(ctx, d);
    sol.backend = backend;
    sol.residuals = transmission_residuals(ctx, d, sol.field, sol.multipliers, &sol.T_plus, &sol.T_minus);
    sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

double relative_h1_distance(const TransmissionContext& ctx, const FieldPair& a, const FieldPair& b)
{
    FieldPair diff;
    diff.u = a.u - b.u;
    diff.p = a.p - b.p;
    diff.jump = a.jump - b.jump;
    const double scale = std::max(ctx.velocity_norm(a), ctx.velocity_norm(b));
    return ratio(ctx.velocity_norm(diff), scale);
}

LoadFunctional convection_load(const FunctionSpaces& sp, double lambda, const Vec& u_plus)
{
    if (lambda == 0.0) return {Vec::Zero(sp.num_velocity()), LoadSource::convection};
    return assemble_convection(sp, [lambda](const Point&) { return lambda; }, u_plus);
}

OperatorNormReport solution_map_norm(const TransmissionContext& ctx, std::uint64_t seed, int max_iter, double rel_tol)
{
    const FunctionSpaces& sp = ctx.spaces();
    const SaddleSystem& sys = ctx.system();
    const int nv = sp.num_velocity();
    const int nt = sp.num_trace();
    const int np = sp.num_pressure();
    const Mat& H = ctx.trace_norms().half;
    const Mat& N = ctx.trace_norms().minus_half;
    Eigen::LLT<Mat> Hinv;
    Eigen::LLT<Mat> Ninv;
    if (nt > 0) {
        Hinv.compute(H);
        Ninv.compute(N);
    }

    auto apply = [&](const Vec& x) {
        TransmissionData d;
        d.f_plus.moments = ctx.restrict_to_side(x.segment(0, nv), Side::plus);
        d.f_minus.moments = ctx.restrict_to_side(x.segment(nv, nv), Side::minus);
        d.h.values = x.segment(2 * nv, nt);
        d.g = TraceDensity{x.segment(2 * nv + nt, nt), Vec()};
        const TransmissionSolution s = solve_monolithic(ctx, d);
        Vec y(2 * nv + np);
        y << ctx.restrict_to_side(side_velocity(sp, s.field, Side::plus), Side::plus),
            ctx.restrict_to_side(s.field.u, Side::minus), s.field.p;
        return y;
    };
    auto apply_transpose = [&](const Vec& y) {
        const Vec yp = ctx.restrict_to_side(y.segment(0, nv), Side::plus);
        const Vec ym = ctx.restrict_to_side(y.segment(nv, nv), Side::minus);
        Vec rhs = Vec::Zero(sys.kkt_size());
        rhs.head(nv) = yp + ym;
        rhs.segment(nv, np) = y.segment(2 * nv, np);
        const Vec z = ctx.potentials().factorization().solve(rhs, true);
        const Vec zv = z.head(nv);
        const Vec zp = z.segment(nv, np);
        Vec x(2 * nv + 2 * nt);
        x.segment(0, nv) = -ctx.restrict_to_side(zv, Side::plus);
        x.segment(nv, nv) = -ctx.restrict_to_side(zv, Side::minus);
        if (nt > 0) {
            x.segment(2 * nv, nt) = sp.restrict_to_trace(yp - sys.A_side[0].transpose() * zv - sys.B_side[0].transpose() * zp);
            x.segment(2 * nv + nt, nt) = sp.restrict_to_trace(zv);
        }
        return x;
    };
    auto out_norm = [&](const Vec& y) {
        Vec r(y.size());
        r << ctx.h1(Side::plus) * y.segment(0, nv), ctx.h1(Side::minus) * y.segment(nv, nv),
            ctx.pressure_mass() * y.segment(2 * nv, np);
        return r;
    };
    auto in_norm = [&](const Vec& x) {
        Vec r(x.size());
        r.segment(0, nv) = ctx.riesz(x.segment(0, nv), Side::plus);
        r.segment(nv, nv) = ctx.riesz(x.segment(nv, nv), Side::minus);
        if (nt > 0) {
            r.segment(2 * nv, nt) = H * x.segment(2 * nv, nt);
            r.segment(2 * nv + nt, nt) = N * x.segment(2 * nv + nt, nt);
        }
        return r;
    };
    auto in_norm_inverse = [&](const Vec& x) {
        Vec r(x.size());
        r.segment(0, nv) = ctx.restrict_to_side(ctx.h1(Side::plus) * x.segment(0, nv), Side::plus);
        r.segment(nv, nv) = ctx.restrict_to_side(ctx.h1(Side::minus) * x.segment(nv, nv), Side::minus);
        if (nt > 0) {
            r.segment(2 * nv, nt) = Hinv.solve(Vec(x.segment(2 * nv, nt)));
            r.segment(2 * nv + nt, nt) = Ninv.solve(Vec(x.segment(2 * nv + nt, nt)));
        }
        return r;
    };
    return estimate_operator_norm(apply, apply_transpose, out_norm, in_norm, in_norm_inverse, 2 * nv + 2 * nt, seed,
                                  max_iter, rel_tol);
}

namespace {

Vec probe_field(const TransmissionContext& ctx, std::mt19937_64& rng, bool smooth)
{
    const FunctionSpaces& sp = ctx.spaces();
    const Mesh& m = sp.mesh();
    const int n = sp.dim();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
    Vec v = Vec::Zero(sp.num_velocity());
    if (!smooth) {
        for (int i = 0; i < v.size(); ++i) v(i) = normal(rng);
        return ctx.restrict_to_side(v, Side::plus);
    }
    std::array<Point, 3> k;
    std::array<double, 3> phase{};
    for (int c = 0; c < n; ++c) {
        k[static_cast<std::size_t>(c)] = Point(normal(rng), normal(rng), n == 3 ? normal(rng) : 0.0) * 2.0;
        phase[static_cast<std::size_t>(c)] = uni(rng);
    }
    for (int vert = 0; vert < m.num_vertices(); ++vert) {
        const Point& x = m.vertex(vert);
        for (int c = 0; c < n; ++c)
            v(sp.velocity_dof(vert, c)) =
                std::sin(k[static_cast<std::size_t>(c)].dot(x) + phase[static_cast<std::size_t>(c)]);
    }
    return ctx.restrict_to_side(v, Side::plus);
}

} // namespace

TransmissionConstants compute_constants(const TransmissionContext& ctx, double lambda, int probe_count,
                                        std::uint64_t rng_seed)
{
    ANISO_REQUIRE(probe_count >= 8, invalid_argument, "compute_constants: probe_count must be >= 8");
    ANISO_REQUIRE(std::isfinite(lambda), invalid_argument, "compute_constants: lambda not finite");
    const FunctionSpaces& sp = ctx.spaces();
    TransmissionConstants c;
    c.lambda = lambda;
    const OperatorNormReport cs = solution_map_norm(ctx, rng_seed + 101);
    c.c_star = cs.value;
    c.c_star_iterations = cs.iterations;
    c.c_star_converged = cs.converged;
    ANISO_REQUIRE(c.c_star > 0.0, solver, "compute_constants: zero solution map norm");
    if (lambda == 0.0) {
        c.unconditional = true;
        c.eta = c.zeta = std::numeric_limits<double>::infinity();
        return c;
    }
    std::mt19937_64 rng(rng_seed);
    for (int i = 0; i < probe_count; ++i) {
        const Vec v = probe_field(ctx, rng, i % 2 == 1);
        const double denom = ctx.h1_norm(v, Side::plus) * ctx.gradient_norm(v, Side::plus);
        ANISO_REQUIRE(denom > 0.0 && std::isfinite(denom), invalid_argument, "compute_constants: degenerate probe");
        const double num = ctx.dual_norm(convection_load(sp, lambda, v).moments, Side::plus);
        c.c1 = std::max(c.c1, num / denom);
    }
    c.eta = 1.0 / (4.0 * c.c1 * c.c_star);
    c.zeta = 3.0 * c.eta / (4.0 * c.c_star);
    return c;
}

NavierStokesResult solve_navier_stokes(const TransmissionContext& ctx, const TransmissionData& d,
                                       const TransmissionConstants& constants, const PicardOptions& options)
{
    const FunctionSpaces& sp = ctx.spaces();
    ANISO_REQUIRE(options.max_iter >= 1, invalid_argument, "solve_navier_stokes: max_iter must be >= 1");
    ANISO_REQUIRE(options.tol > 0.0, invalid_argument, "solve_navier_stokes: tol must be positive");
    NavierStokesResult res;
    PicardState& st = res.state;
    st.constants = constants;
    st.data_norm = ctx.data_norm(d);
    const bool linear = options.lambda == 0.0;
    if (!constants.unconditional && st.data_norm > constants.zeta) {
        std::ostringstream os;
        os << "data norm " << st.data_norm << " exceeds the smallness bound zeta = " << constants.zeta;
        st.warnings.push_back(os.str());
    }
    const TransmissionBackend other = options.backend == TransmissionBackend::monolithic
                                          ? TransmissionBackend::representation
                                          : TransmissionBackend::monolithic;

    auto step = [&](const Vec& u) {
        TransmissionData dk = d;
        dk.f_plus.moments += convection_load(sp, options.lambda, u).moments;
        TransmissionSolution s = solve_linear_transmission(ctx, dk, options.backend);
        if (options.check_backends) {
            const TransmissionSolution o = solve_linear_transmission(ctx, dk, other);
            st.backend_discrepancy = std::max(st.backend_discrepancy, relative_h1_distance(ctx, s.field, o.field));
        }
        return s;
    };

    Vec u = options.initial ? ctx.restrict_to_side(*options.initial, Side::plus) : Vec(Vec::Zero(sp.num_velocity()));
    ANISO_REQUIRE(u.size() == sp.num_velocity(), invalid_argument, "solve_navier_stokes: initial iterate size mismatch");
    for (int k = 1; k <= options.max_iter; ++k) {
        res.solution = step(u);
        const Vec next = ctx.restrict_to_side(side_velocity(sp, res.solution.field, Side::plus), Side::plus);
        const double diff = ctx.h1_norm(next - u, Side::plus);
        if (!st.diff_history.empty()) st.ratios.push_back(ratio(diff, st.diff_history.back()));
        st.diff_history.push_back(diff);
        u = next;
        st.iterations = k;
        st.iterate_norm = ctx.h1_norm(u, Side::plus);
        if (!std::isfinite(st.iterate_norm) || (!constants.unconditional && st.iterate_norm > 10.0 * constants.eta)) {
            st.blew_up = true;
            st.warnings.push_back("iterate left the ball of radius 10 eta; iteration stopped");
            break;
        }
        if (linear || diff <= options.tol) {
            st.converged = true;
            break;
        }
    }
    if (!st.converged && !st.blew_up) st.warnings.push_back("maximum number of Picard iterations reached");
    st.u_plus = u;

    if (std::isfinite(st.iterate_norm)) {
        TransmissionData dc = d;
        dc.f_plus.moments += convection_load(sp, options.lambda, u).moments;
        st.nonlinear_residual =
            transmission_residuals(ctx, dc, res.solution.field, res.solution.multipliers, &res.solution.T_plus,
                                   &res.solution.T_minus)
                .max();
        if (!linear) {
            const TransmissionSolution again = solve_linear_transmission(ctx, dc, options.backend);
            st.fixed_point_residual =
                ctx.h1_norm(ctx.restrict_to_side(side_velocity(sp, again.field, Side::plus), Side::plus) - u, Side::plus);
        }
    }
    return res;
}

} // namespace anisostokes
