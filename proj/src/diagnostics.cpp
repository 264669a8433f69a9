#include "anisostokes/diagnostics.hpp"

#include "detail/fe_local.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace anisostokes {

ErrorNorms velocity_error(const FunctionSpaces& sp, const Vec& velocity, const std::function<Point(const Point&)>& exact,
                          const std::function<Mat(const Point&)>& exact_gradient, int points)
{
    ANISO_REQUIRE(velocity.size() == sp.num_velocity(), invalid_argument, "velocity_error: size mismatch");
    const Mesh& m = sp.mesh();
    const int n = sp.dim();
    const SimplexRule& rule = simplex_rule(n, points);
    const double fact = std::tgamma(n + 1.0);
    double l2 = 0.0;
    double h1 = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        const auto g = detail::cell_geometry(m, c);
        const auto dofs = detail::cell_velocity_dofs(m, c);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto phi = detail::basis_values(n, rule.bary[q]);
            const auto dphi = detail::basis_gradients(g, rule.bary[q]);
            Point uh = Point::Zero();
            Mat gh = Mat::Zero(n, n);
            for (int a = 0; a <= n + 1; ++a)
                for (int k = 0; k < n; ++k) {
                    const double coef = velocity(dofs[static_cast<std::size_t>(a * n + k)]);
                    uh(k) += coef * phi[static_cast<std::size_t>(a)];
                    for (int b = 0; b < n; ++b) gh(k, b) += coef * dphi[static_cast<std::size_t>(a)](b);
                }
            const Point x = g.map(rule.bary[q]);
            const double w = fact * g.volume * rule.weights[q];
            l2 += w * (exact(x) - uh).head(n).squaredNorm();
            h1 += w * (exact_gradient(x).topLeftCorner(n, n) - gh).squaredNorm();
        }
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

ManufacturedSolution compact_bump_solution(int dim, const Point& center, double support)
{
    ANISO_REQUIRE(support > 0.0, invalid_argument, "compact_bump_solution: support must be positive");
    const double s2 = support * support;
    auto q_of = [center, s2, dim](const Point& x, Point& y) {
        y = x - center;
        if (dim == 2) y.z() = 0.0;
        return 1.0 - y.squaredNorm() / s2;
    };
    ManufacturedSolution ms;
    ms.pi = [q_of](const Point& x) {
        Point y;
        const double q = q_of(x, y);
        return q > 0.0 ? std::pow(q, 4) : 0.0;
    };
    ms.u = [q_of, s2](const Point& x) {
        Point y;
        const double q = q_of(x, y);
        if (q <= 0.0) return Point(Point::Zero());
        const double f = -8.0 * q * q * q / s2; // dB/dx_i = f y_i
        return Point(f * y.y(), -f * y.x(), 0.0);
    };
    ms.grad_u = [q_of, s2](const Point& x) {
        Point y;
        const double q = q_of(x, y);
        Mat G = Mat::Zero(3, 3);
        if (q <= 0.0) return G;
        Mat H(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                H(i, j) = 48.0 * q * q * y(i) * y(j) / (s2 * s2) - (i == j ? 8.0 * q * q * q / s2 : 0.0);
        G.row(0) = H.row(1);
        G.row(1) = -H.row(0);
        return G;
    };
    return ms;
}

ManufacturedRun run_manufactured_stokes(const RunConfig& cfg)
{
    ManufacturedRun run;
    run.spaces = build_spaces(build_interface_mesh(cfg.mesh));
    const FunctionSpaces& sp = *run.spaces;
    const CoeffTensor t = make_tensor(cfg);
    Point center = Point::Constant(0.5);
    if (sp.dim() == 2) center.z() = 0.0;
    const ManufacturedSolution ms = compact_bump_solution(sp.dim(), center, cfg.stokes_support);
    SaddleSystem sys = assemble_saddle_system(run.spaces, t, cfg.outer_bc);
    sys.F = assemble_weak_residual(
                sp, t, [&ms](const Point& x, Side) { return ms.grad_u(x); },
                [&ms](const Point& x, Side) { return ms.pi(x); })
                .moments;
    sys.G = Vec::Zero(sp.num_pressure());
    run.report = solve_saddle(sys, cfg.solver);
    run.error = velocity_error(sp, run.report.solution.u, ms.u, ms.grad_u);
    run.h = sp.mesh().h_max();
    return run;
}

double convergence_rate(const std::vector<double>& h, const std::vector<double>& err)
{
    ANISO_REQUIRE(h.size() == err.size() && h.size() >= 2, invalid_argument, "convergence_rate: need >= 2 points");
    const auto n = static_cast<double>(h.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

Vec jump_integral(const FunctionSpaces& sp, const Vec& jump)
{
    const int n = sp.dim();
    Vec out = Vec::Zero(n);
    if (sp.num_trace() == 0 || jump.size() == 0) return out;
    const Vec w = sp.interface_mass() * Vec::Ones(sp.num_interface_vertices());
    for (int i = 0; i < sp.num_interface_vertices(); ++i)
        for (int k = 0; k < n; ++k) out(k) += w(i) * jump(sp.trace_dof(i, k));
    return out;
}

std::vector<double> outer_weights(const FunctionSpaces& sp)
{
    const Mesh& m = sp.mesh();
    std::vector<double> w(static_cast<std::size_t>(m.num_vertices()), 0.0);
    for (const auto& f : m.outer_facets()) {
        const double a = m.facet_measure(f.v) / sp.dim();
        for (int k = 0; k < sp.dim(); ++k) w[static_cast<std::size_t>(f.v[static_cast<std::size_t>(k)])] += a;
    }
    return w;
}

} // namespace

double triple_norm(const FunctionSpaces& sp, const FieldPair& v)
{
    const double g = weighted_norm(sp, v, NormKind::gradient_l2);
    return std::sqrt(g * g + jump_integral(sp, v.jump).squaredNorm());
}

Vec project_outer_mean(const FunctionSpaces& sp, const Vec& velocity)
{
    const auto w = outer_weights(sp);
    const int n = sp.dim();
    Vec u = velocity;
    double ww = 0.0;
    for (double x : w) ww += x * x;
    if (ww == 0.0) return u;
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t v = 0; v < w.size(); ++v) s += w[v] * u(sp.velocity_dof(static_cast<int>(v), k));
        for (std::size_t v = 0; v < w.size(); ++v) u(sp.velocity_dof(static_cast<int>(v), k)) -= w[v] * s / ww;
    }
    return u;
}

NormEquivalenceReport norm_equivalence_probe(const FunctionSpaces& sp, int sample_count, std::uint64_t rng_seed)
{
    ANISO_REQUIRE(sample_count >= 16, invalid_argument, "norm_equivalence_probe: sample_count must be >= 16");
    const Mesh& m = sp.mesh();
    const int n = sp.dim();
    const SpMat Xp = assemble_velocity_h1(sp, true, Side::plus);
    const SpMat Xm = assemble_velocity_h1(sp, true, Side::minus);
    const SpMat Kp = assemble_gradient_stiffness(sp, Side::plus);
    const SpMat Km = assemble_gradient_stiffness(sp, Side::minus);
    auto ratio_of = [&](const FieldPair& f, double& triple) {
        const Vec up = side_velocity(sp, f, Side::plus);
        const double grad = up.dot(Kp * up) + f.u.dot(Km * f.u);
        triple = std::sqrt(std::max(0.0, grad) + jump_integral(sp, f.jump).squaredNorm());
        const double h1 = std::sqrt(std::max(0.0, up.dot(Xp * up) + f.u.dot(Xm * f.u)));
        return triple / h1;
    };
    auto make = [&](Vec u, Vec jump) {
        FieldPair f;
        f.u = project_outer_mean(sp, u);
        f.p = Vec::Zero(sp.num_pressure());
        f.jump = std::move(jump);
        return f;
    };

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
    NormEquivalenceReport rep;
    rep.samples = sample_count;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    const int nt = sp.num_trace();
    for (int s = 0; s < sample_count; ++s) {
        Vec u = Vec::Zero(sp.num_velocity());
        Vec jump = Vec::Zero(nt);
        switch (s % 3) {
        case 0:
            for (int i = 0; i < u.size(); ++i) u(i) = normal(rng);
            for (int i = 0; i < nt; ++i) jump(i) = normal(rng);
            break;
        case 1: {
            Mat k(3, n);
            Vec ph(n);
            for (int c = 0; c < n; ++c) {
                k.col(c) = Point(normal(rng), normal(rng), n == 3 ? normal(rng) : 0.0);
                ph(c) = uni(rng);
            }
            for (int v = 0; v < m.num_vertices(); ++v)
                for (int c = 0; c < n; ++c)
                    u(sp.velocity_dof(v, c)) = std::sin(k.col(c).dot(m.vertex(v)) + ph(c));
            for (int i = 0; i < nt; ++i) jump(i) = std::cos(ph(i % n) + 0.1 * i);
            break;
        }
        default: {
            Vec cp(n), cm(n);
            for (int c = 0; c < n; ++c) {
                cp(c) = normal(rng);
                cm(c) = normal(rng);
            }
            for (int v = 0; v < m.num_vertices(); ++v)
                for (int c = 0; c < n; ++c) u(sp.velocity_dof(v, c)) = sp.touches(v, Side::minus) ? cm(c) : cp(c);
            for (int i = 0; i < sp.num_interface_vertices(); ++i)
                for (int c = 0; c < n; ++c) jump(sp.trace_dof(i, c)) = cp(c) - cm(c);
        }
        }
        const FieldPair f = make(u, jump);
        double triple = 0.0;
        const double r = ratio_of(f, triple);
        if (!(triple > 0.0)) ++rep.definiteness_failures;
        rep.min_ratio = std::min(rep.min_ratio, r);
        rep.max_ratio = std::max(rep.max_ratio, r);
    }
    {
        double triple = 0.0;
        const FieldPair z = make(Vec::Zero(sp.num_velocity()), Vec::Zero(nt));
        const Vec up = side_velocity(sp, z, Side::plus);
        triple = std::sqrt(up.dot(Kp * up) + jump_integral(sp, z.jump).squaredNorm());
        rep.zero_field_zero = triple == 0.0;
    }
    {
        Vec u = Vec::Zero(sp.num_velocity());
        Vec jump = Vec::Zero(nt);
        for (int v = 0; v < m.num_vertices(); ++v)
            if (!sp.touches(v, Side::minus)) u(sp.velocity_dof(v, 0)) = 1.0;
        for (int i = 0; i < sp.num_interface_vertices(); ++i) jump(sp.trace_dof(i, 0)) = 1.0;
        FieldPair f{u, Vec::Zero(sp.num_pressure()), jump};
        double triple = 0.0;
        rep.constant_inside_ratio = ratio_of(f, triple);
    }
    {
        Vec u = Vec::Zero(sp.num_velocity());
        for (int v = 0; v < m.num_vertices(); ++v) {
            const Point& x = m.vertex(v);
            const double w = 1.0 / (1.0 + x.squaredNorm());
            for (int c = 0; c < n; ++c) u(sp.velocity_dof(v, c)) = w * std::cos(x(c));
        }
        double triple = 0.0;
        rep.smooth_ratio = ratio_of(make(u, Vec::Zero(nt)), triple);
    }
    return rep;
}

namespace {

double rel(double num, double scale)
{
    return scale > 0.0 ? num / scale : num;
}

Vec mask_outer(const FunctionSpaces& sp, Vec w)
{
    const Mesh& m = sp.mesh();
    for (int v = 0; v < m.num_vertices(); ++v)
        if (sp.is_outer_vertex(v))
            for (int k = 0; k < sp.dim(); ++k) w(sp.velocity_dof(v, k)) = 0.0;
    return w;
}

} // namespace

double green_identity_residual(const TransmissionContext& ctx, const TransmissionData& d, const TransmissionSolution& sol,
                               const Vec& w_in, Side side)
{
    const FunctionSpaces& sp = ctx.spaces();
    const SaddleSystem& sys = ctx.system();
    const auto i = static_cast<std::size_t>(side_index(side));
    Vec w = ctx.restrict_to_side(w_in, side);
    if (side == Side::minus) w = mask_outer(sp, w);
    const Vec u = side_velocity(sp, sol.field, side);
    const double a = w.dot(sys.A_side[i] * u);
    const double b = w.dot(sys.B_side[i].transpose() * sol.field.p);
    const double f = w.dot(side == Side::plus ? d.f_plus.moments : d.f_minus.moments);
    const TraceDensity& T = side == Side::plus ? sol.T_plus : sol.T_minus;
    const double lhs = side_sign(side) * T.moments.dot(sp.restrict_to_trace(w));
    return rel(std::abs(lhs - (a + b + f)), std::abs(a) + std::abs(b) + std::abs(f));
}

double conormal_jump_formula_residual(const TransmissionContext& ctx, const TransmissionData& d,
                                      const TransmissionSolution& sol, const Vec& w_in)
{
    const FunctionSpaces& sp = ctx.spaces();
    const SaddleSystem& sys = ctx.system();
    const Vec w = mask_outer(sp, w_in);
    const Vec up = side_velocity(sp, sol.field, Side::plus);
    const Vec um = side_velocity(sp, sol.field, Side::minus);
    const double a = w.dot(sys.A_side[0] * up) + w.dot(sys.A_side[1] * um);
    const double b = w.dot(sys.B.transpose() * sol.field.p);
    const double f = w.dot(d.f_plus.moments + d.f_minus.moments);
    const double lhs = (sol.T_plus.moments - sol.T_minus.moments).dot(sp.restrict_to_trace(w));
    return rel(std::abs(lhs - (a + b + f)), std::abs(a) + std::abs(b) + std::abs(f));
}

double divergence_residual(const SaddleSystem& sys, const FieldPair& f)
{
    const FunctionSpaces& sp = *sys.spaces;
    const Vec up = side_velocity(sp, f, Side::plus);
    const Vec um = side_velocity(sp, f, Side::minus);
    const Vec r = sys.B_side[0] * up + sys.B_side[1] * um;
    const Vec s = sys.B_side[0].cwiseAbs() * up.cwiseAbs() + sys.B_side[1].cwiseAbs() * um.cwiseAbs();
    return rel(r.norm(), s.norm());
}

std::string status_name(CheckStatus s)
{
    switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::error: return "error";
    case CheckStatus::skipped: return "skipped";
    }
    return "error";
}

bool VerificationReport::pass() const
{
    return std::none_of(checks.begin(), checks.end(), [](const Check& c) {
        return c.status == CheckStatus::fail || c.status == CheckStatus::error;
    });
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

void VerificationReport::write_csv(std::ostream& os) const
{
    os << "check,status,measured,tolerance,detail\n";
    for (const auto& c : checks)
        os << c.name << ',' << status_name(c.status) << ',' << format_double(c.measured) << ','
           << format_double(c.tolerance) << ',' << csv_field(c.detail) << '\n';
}

void VerificationReport::write_table(std::ostream& os) const
{
    std::size_t w = 5;
    for (const auto& c : checks) w = std::max(w, c.name.size());
    os << "# " << fingerprint << '\n';
    for (const auto& c : checks) {
        std::ostringstream m, t;
        m << std::setprecision(3) << std::scientific << c.measured;
        t << std::setprecision(1) << std::scientific << c.tolerance;
        os << std::left << std::setw(static_cast<int>(w)) << c.name << "  " << std::setw(7) << status_name(c.status) << "  "
           << std::setw(10) << m.str() << "  tol " << std::setw(8) << t.str();
        if (!c.detail.empty()) os << "  " << c.detail;
        os << '\n';
    }
    os << (pass() ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << '\n';
}

namespace {

class SuiteRunner {
public:
    explicit SuiteRunner(VerificationReport& rep) : rep_(rep) {}

    void at_most(const std::string& name, double measured, double tol, std::string detail = {})
    {
        add(name, measured, tol, measured <= tol, std::move(detail));
    }

    void at_least(const std::string& name, double measured, double tol, std::string detail = {})
    {
        add(name, measured, tol, measured >= tol, std::move(detail));
    }

    void flag(const std::string& name, bool ok, double measured, double tol, std::string detail = {})
    {
        add(name, measured, tol, ok, std::move(detail));
    }

    void skip(const std::string& name, std::string detail)
    {
        rep_.checks.push_back({name, 0.0, 0.0, CheckStatus::skipped, std::move(detail)});
    }

    template <class F>
    void group(const std::vector<std::string>& names, F&& body)
    {
        try {
            body();
        } catch (const std::exception& e) {
            for (const auto& n : names) {
                const bool present = std::any_of(rep_.checks.begin(), rep_.checks.end(),
                                                 [&](const Check& c) { return c.name == n; });
                if (!present) rep_.checks.push_back({n, 0.0, 0.0, CheckStatus::error, e.what()});
            }
        }
    }

private:
    void add(const std::string& name, double measured, double tol, bool ok, std::string detail)
    {
        const bool finite = std::isfinite(measured);
        rep_.checks.push_back({name, measured, tol, finite && ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail)});
    }

    VerificationReport& rep_;
};

Vec random_vec(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

std::string num(double x)
{
    std::ostringstream os;
    os << std::setprecision(4) << x;
    return os.str();
}

} // namespace

VerificationReport run_invariant_suite(const RunConfig& cfg)
{
    VerificationReport rep;
    rep.fingerprint = fingerprint(cfg);
    SuiteRunner run(rep);
    std::mt19937_64 rng(cfg.seed);
    const int samples = cfg.verify_samples;

    std::shared_ptr<const FunctionSpaces> sp;
    std::optional<CoeffTensor> tensor;
    bool symmetric = false;
    run.group({"mesh_build", "ellipticity"}, [&] {
        sp = build_spaces(build_interface_mesh(cfg.mesh));
        const Mesh& m = sp->mesh();
        run.flag("mesh_build", m.has_interface(), m.num_cells(), 0.0,
                 std::to_string(m.num_vertices()) + " vertices, " + std::to_string(m.num_cells()) + " cells");
        tensor = make_tensor(cfg);
        std::vector<SamplePoint> pts;
        const int stride = std::max(1, m.num_cells() / 400);
        for (int c = 0; c < m.num_cells(); c += stride) pts.push_back({m.centroid(c), m.side(c)});
        const auto er = check_strong_ellipticity(*tensor, pts, 20, cfg.seed);
        run.flag("ellipticity", er.pass, er.worst_quotient, er.required, "worst quotient vs 1/c");
        const CoeffTensor adj = adjoint(*tensor);
        double diff = 0.0;
        double scale = 0.0;
        for (const auto& p : pts) {
            const Mat a = tensor->at(p.x, p.side).form_matrix();
            diff = std::max(diff, (a - adj.at(p.x, p.side).form_matrix()).cwiseAbs().maxCoeff());
            scale = std::max(scale, a.cwiseAbs().maxCoeff());
        }
        symmetric = diff <= 1e-14 * scale;
    });
    if (!sp || !tensor || !sp->mesh().has_interface()) {
        std::sort(rep.checks.begin(), rep.checks.end(), [](const Check& a, const Check& b) { return a.name < b.name; });
        return rep;
    }
    const FunctionSpaces& s = *sp;
    const int nt = s.num_trace();
    const int n = s.dim();

    std::unique_ptr<TransmissionContext> tc;
    run.group({"factorization"}, [&] {
        tc = std::make_unique<TransmissionContext>(sp, *tensor, cfg.outer_bc, cfg.verify_trace_norm, cfg.threads);
        run.flag("factorization", true, tc->potentials().factorization().factor_seconds(), 0.0, "factor seconds");
    });

    const std::vector<std::string> potential_checks{
        "single_layer_nu_velocity", "single_layer_nu_pressure", "single_layer_jump_relations",
        "single_layer_nu_orthogonality", "double_layer_constant", "double_layer_D_constant",
        "double_layer_jump_relations", "double_layer_conormal_continuity", "double_layer_D_mean",
        "adjoint_duality", "transpose_identity", "adjoint_single_layer_nu", "self_adjointness",
        "isotropic_adjoint_equality", "divergence_free_potentials"};
    const std::vector<std::string> spectral_checks{"kernel_V", "kernel_D", "gap_V", "gap_D", "coercivity_V",
                                                   "coercivity_D", "D_kernel_constants"};
    const std::vector<std::string> transmission_checks{"green_identity_plus", "green_identity_minus",
                                                       "conormal_jump_formula", "transmission_residuals",
                                                       "backend_equivalence"};
    const std::vector<std::string> picard_checks{"zeta_identity", "picard_contraction", "picard_convergence",
                                                 "picard_ball", "picard_fixed_point", "picard_uniqueness",
                                                 "picard_backend_equivalence"};
    if (!tc) {
        for (const auto& group : {potential_checks, spectral_checks, transmission_checks, picard_checks})
            run.group(group, [] { throw Error(ErrorCategory::solver, "factorization unavailable"); });
    } else {
        const PotentialContext& pc = tc->potentials();
        const SaddleSystem& sys = pc.system();
        const bool dirichlet = cfg.outer_bc == OuterBc::dirichlet;

        run.group(potential_checks, [&] {
            const PotentialPair nu = single_layer(pc, normal_density(s));
            run.at_most("single_layer_nu_velocity", nu.field.u.cwiseAbs().maxCoeff(), 1e-8, "max |u| for psi = nu");
            Vec diff(s.num_pressure());
            for (int q = 0; q < s.num_pressure(); ++q)
                diff(q) = nu.field.p(q) + (s.pressure_side(q) == Side::plus ? 1.0 : 0.0);
            if (dirichlet) diff.array() -= 0.5 * (diff.maxCoeff() + diff.minCoeff());
            run.at_most("single_layer_nu_pressure", diff.cwiseAbs().maxCoeff(), 1e-8, "pressure vs -chi_+");

            double sl_jump = 0.0, sl_orth = 0.0, dl_jump = 0.0, dl_cont = 0.0, dl_mean = 0.0;
            double duality = 0.0, transpose = 0.0, selfadj = 0.0, adj_eq = 0.0, div = 0.0;
            const Vec nu_m = normal_density(s).moments;
            const PotentialContext adj = pc.adjoint_view();
            for (int k = 0; k < samples; ++k) {
                const TraceDensity psi = density_from_moments(s, random_vec(rng, nt));
                const TraceDensity psis = density_from_moments(s, random_vec(rng, nt));
                TraceField phi{random_vec(rng, nt)};
                if (dirichlet) phi = remove_trace_flux(sys, phi);
                const PotentialPair sl = single_layer(pc, psi);
                const SingleLayerTraces st = single_layer_boundary_ops(pc, sl, psi);
                const double jp = (sl.T_plus->moments - (0.5 * psi.moments + st.K.moments)).norm();
                const double jm = (sl.T_minus->moments - (-0.5 * psi.moments + st.K.moments)).norm();
                sl_jump = std::max(sl_jump, rel(std::max(jp, jm), psi.moments.norm()));
                sl_orth = std::max(sl_orth, rel(std::abs(nu_m.dot(st.V.values)), nu_m.norm() * st.V.values.norm()));
                div = std::max(div, divergence_residual(sys, sl.field));

                const PotentialPair dl = double_layer(pc, phi);
                const DoubleLayerTraces dt = double_layer_boundary_ops(pc, dl, phi);
                const double gp = (dl.gamma_plus.values - (-0.5 * phi.values + dt.K.values)).cwiseAbs().maxCoeff();
                const double gm = (dl.gamma_minus.values - (0.5 * phi.values + dt.K.values)).cwiseAbs().maxCoeff();
                dl_jump = std::max(dl_jump, rel(std::max(gp, gm), phi.values.cwiseAbs().maxCoeff()));
                dl_cont = std::max(dl_cont, dt.conormal_discrepancy);
                for (int c = 0; c < n; ++c) {
                    double sum = 0.0, abs_sum = 0.0;
                    for (int i = 0; i < s.num_interface_vertices(); ++i) {
                        sum += dt.D.moments(s.trace_dof(i, c));
                        abs_sum += std::abs(dt.D.moments(s.trace_dof(i, c)));
                    }
                    dl_mean = std::max(dl_mean, rel(std::abs(sum), abs_sum));
                }
                div = std::max(div, divergence_residual(sys, dl.field));

                const AdjointSingleLayer as = adjoint_single_layer(pc, psis);
                const double l = psi.moments.dot(as.ops.V.values);
                const double r = st.V.values.dot(psis.moments);
                duality = std::max(duality, rel(std::abs(l - r), psi.moments.norm() * as.ops.V.values.norm()));
                const double tl = psis.moments.dot(dt.K.values);
                const double tr = as.ops.K.moments.dot(phi.values);
                transpose = std::max(transpose, rel(std::abs(tl - tr), psis.moments.norm() * dt.K.values.norm()));
                if (symmetric) {
                    const PotentialPair sl2 = single_layer(pc, psis);
                    const double a1 = psi.moments.dot(sl2.gamma_plus.values);
                    selfadj = std::max(selfadj, rel(std::abs(a1 - r), psi.moments.norm() * sl2.gamma_plus.values.norm()));
                    const AdjointSingleLayer as1 = adjoint_single_layer(pc, psi);
                    adj_eq = std::max(adj_eq, rel((as1.ops.V.values - st.V.values).norm(), st.V.values.norm()));
                }
            }
            run.at_most("single_layer_jump_relations", sl_jump, 1e-9, "T+- = +-psi/2 + K psi");
            run.at_most("single_layer_nu_orthogonality", sl_orth, 1e-9, "<V psi, nu>");
            run.at_most("double_layer_jump_relations", dl_jump, 1e-9, "gamma+- = -+phi/2 + K phi");
            run.at_most("double_layer_conormal_continuity", dl_cont, 1e-8, "|T+ - T-| / |T+|");
            run.at_most("double_layer_D_mean", dl_mean, 1e-9, "<D phi, 1> componentwise");
            run.at_most("adjoint_duality", duality, 1e-9, "<psi, V* psi*> = <V psi, psi*>");
            run.at_most("transpose_identity", transpose, 1e-9, "<psi*, K phi> = <K* psi*, phi>");
            if (symmetric) {
                run.at_most("self_adjointness", selfadj, 1e-9, "<psi, V psi*> = <V psi, psi*>");
                run.at_most("isotropic_adjoint_equality", adj_eq, 1e-10, "|V* psi - V psi|");
            } else {
                run.skip("self_adjointness", "tensor is not symmetric");
                run.skip("isotropic_adjoint_equality", "tensor is not symmetric");
            }

            const AdjointSingleLayer anu = adjoint_single_layer(pc, normal_density(s));
            run.at_most("adjoint_single_layer_nu", anu.potential.field.u.cwiseAbs().maxCoeff(), 1e-8, "max |u*| for nu");

            Point e1 = Point::Zero();
            e1(0) = 1.0;
            const TraceField c = constant_trace(s, e1);
            const PotentialPair dc = double_layer(pc, c);
            const Vec up = tc->restrict_to_side(side_velocity(s, dc.field, Side::plus), Side::plus);
            const Vec um = tc->restrict_to_side(dc.field.u, Side::minus);
            Vec expect = Vec::Zero(s.num_velocity());
            const Mesh& m = s.mesh();
            for (int v = 0; v < m.num_vertices(); ++v)
                if (s.touches(v, Side::plus)) expect(s.velocity_dof(v, 0)) = -1.0;
            const double err = std::max({(up - expect).cwiseAbs().maxCoeff(), um.cwiseAbs().maxCoeff(),
                                         dc.field.p.cwiseAbs().maxCoeff()});
            run.at_most("double_layer_constant", err, 1e-8, "W(e1) = -e1 chi_+, Q(e1) = 0");
            run.at_most("double_layer_D_constant", dc.T_plus->moments.norm(), 1e-8, "|D e1|");
            div = std::max(div, divergence_residual(sys, dc.field));
            run.at_most("divergence_free_potentials", div, 1e-9, "discrete divergence of the potentials");
        });

        run.group(spectral_checks, [&] {
            if (!cfg.verify_materialize) {
                for (const auto& name : spectral_checks) run.skip(name, "materialization disabled");
                return;
            }
            const BoundaryOperators ops = materialize_boundary_operators(pc, {true, true, false});
            const KernelCoercivityReport kr = kernel_and_coercivity_report(s, ops, tc->trace_norms());
            run.at_most("kernel_V", rel(kr.V_nu, kr.V_norm), 1e-8, "|V nu| / |V|");
            run.at_most("kernel_D", rel(kr.D_small.cwiseAbs().maxCoeff(), kr.D_norm), 1e-8, "n smallest of -D / |D|");
            run.at_least("gap_V", rel(kr.V_sigma_second, kr.V_norm), 1e-6, "second singular value / |V|");
            run.at_least("gap_D", rel(kr.D_next, kr.D_norm), 1e-6, "(n+1)-th eigenvalue / |D|");
            run.at_least("coercivity_V", rel(kr.V_rayleigh_min, kr.V_norm), 1e-6, "min <psi, V psi> on nu-complement");
            run.at_least("coercivity_D", rel(kr.D_rayleigh_min, kr.D_norm), 1e-6, "min <-D phi, phi> on mean-zero");
            run.at_least("D_kernel_constants", kr.D_constant_alignment, 1.0 - 1e-6, "kernel eigenvectors vs constants");
        });

        run.group(transmission_checks, [&] {
            double gp = 0.0, gm = 0.0, jf = 0.0, res = 0.0, be = 0.0;
            for (int k = 0; k < std::max(1, samples / 2); ++k) {
                const TransmissionData d = make_transmission_data(*tc, k % 2 ? "smooth" : "random", cfg.seed + 17 * k);
                const TransmissionSolution a = solve_linear_transmission(*tc, d, TransmissionBackend::monolithic);
                const TransmissionSolution b = solve_linear_transmission(*tc, d, TransmissionBackend::representation);
                res = std::max({res, a.residuals.max(), b.residuals.max()});
                be = std::max(be, relative_h1_distance(*tc, a.field, b.field));
                for (int j = 0; j < 2; ++j) {
                    const Vec w = random_vec(rng, s.num_velocity());
                    gp = std::max(gp, green_identity_residual(*tc, d, a, w, Side::plus));
                    gm = std::max(gm, green_identity_residual(*tc, d, a, w, Side::minus));
                    jf = std::max(jf, conormal_jump_formula_residual(*tc, d, a, w));
                }
            }
            run.at_most("green_identity_plus", gp, 1e-10);
            run.at_most("green_identity_minus", gm, 1e-10);
            run.at_most("conormal_jump_formula", jf, 1e-10);
            run.at_most("transmission_residuals", res, 1e-8, "four equations, both backends");
            run.at_most("backend_equivalence", be, 1e-7, "relative H1 distance");
        });

        run.group(picard_checks, [&] {
            if (cfg.ns_lambda == 0.0 || !cfg.verify_picard) {
                const std::string why = cfg.ns_lambda == 0.0 ? "unconditional: lambda = 0" : "disabled";
                for (const auto& name : picard_checks) run.skip(name, why);
                return;
            }
            const TransmissionConstants k = compute_constants(*tc, cfg.ns_lambda, cfg.ns_probes, cfg.seed);
            run.at_most("zeta_identity", rel(std::abs(k.zeta - 3.0 * k.eta / (4.0 * k.c_star)), k.zeta), 1e-15);
            TransmissionData d = make_transmission_data(*tc, "smooth", cfg.seed);
            const double dn = tc->data_norm(d);
            const double scale = 0.5 * k.zeta / dn;
            d.f_plus.moments *= scale;
            d.f_minus.moments *= scale;
            d.h.values *= scale;
            d.g = density_from_moments(s, d.g.moments * scale);
            PicardOptions po;
            po.lambda = cfg.ns_lambda;
            po.tol = cfg.ns_tol;
            po.max_iter = cfg.ns_max_iter;
            po.check_backends = true;
            const NavierStokesResult r = solve_navier_stokes(*tc, d, k, po);
            const double worst = r.state.ratios.empty() ? 0.0 : *std::max_element(r.state.ratios.begin(), r.state.ratios.end());
            run.at_most("picard_contraction", worst, 0.5, "max ratio over " + std::to_string(r.state.ratios.size()) + " steps");
            run.flag("picard_convergence", r.state.converged, r.state.iterations, cfg.ns_max_iter, "iterations");
            run.at_most("picard_ball", r.state.iterate_norm, k.eta, "|u_+| vs eta");
            run.at_most("picard_fixed_point", r.state.fixed_point_residual, cfg.ns_tol, "|U(u*) - u*|");
            run.at_most("picard_backend_equivalence", r.state.backend_discrepancy, 1e-7, "per-step backends");
            Vec u0 = tc->restrict_to_side(random_vec(rng, s.num_velocity()), Side::plus);
            u0 *= 0.5 * k.eta / tc->h1_norm(u0, Side::plus);
            po.initial = u0;
            po.check_backends = false;
            const NavierStokesResult r2 = solve_navier_stokes(*tc, d, k, po);
            const double dist = tc->h1_norm(r2.state.u_plus - r.state.u_plus, Side::plus);
            run.flag("picard_uniqueness", r2.state.converged && dist <= 10.0 * cfg.ns_tol, dist, 10.0 * cfg.ns_tol,
                     "restart from a random iterate in the ball");
        });
    }

    run.group({"norm_equivalence", "triple_norm_definiteness"}, [&] {
        const NormEquivalenceReport ne = norm_equivalence_probe(s, std::max(16, 10 * samples), cfg.seed);
        run.at_least("norm_equivalence", ne.min_ratio, 1e-12,
                     "bracket [" + num(ne.min_ratio) + ", " + num(ne.max_ratio) + "]");
        run.flag("triple_norm_definiteness", ne.definiteness_failures == 0 && ne.zero_field_zero, ne.definiteness_failures,
                 0.0, "nonzero fields with zero triple norm");
    });

    run.group({"inf_sup"}, [&] {
        const SaddleSystem sys = assemble_saddle_system(sp, *tensor, cfg.outer_bc);
        const InfSupReport is = estimate_infsup(sys, cfg.infsup_max_iter, cfg.infsup_tol, cfg.seed);
        run.flag("inf_sup", is.converged && is.beta > 0.0, is.beta, 0.0, "beta_h");
    });

    std::sort(rep.checks.begin(), rep.checks.end(), [](const Check& a, const Check& b) { return a.name < b.name; });
    return rep;
}

} // namespace anisostokes
