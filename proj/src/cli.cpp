#include "anisostokes/cli.hpp"

#include "anisostokes/diagnostics.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>
#include <sstream>

namespace anisostokes {

RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides, const char* env_threads)
{
    RunConfig cfg;
    bool threads_set = false;
    if (file) {
        std::ifstream in(*file);
        ANISO_REQUIRE(in, io, "cannot read config file '" + file->string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        cfg = parse_config(text, file->string());
        static const std::regex threads_line(R"((^|\n)[ \t]*threads[ \t]*=)");
        threads_set = std::regex_search(text, threads_line);
    }
    if (env_threads && *env_threads && !threads_set) set_config_value(cfg, "threads", env_threads);
    for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
    return cfg;
}

int exit_code(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::invalid_argument: return 3;
    case ErrorCategory::geometry: return 4;
    case ErrorCategory::resource: return 5;
    case ErrorCategory::solver: return 6;
    case ErrorCategory::convergence: return 7;
    case ErrorCategory::io: return 8;
    }
    return 9;
}

namespace {

using Metrics = std::vector<std::pair<std::string, std::string>>;

class Outputs {
public:
    Outputs(const RunConfig& cfg, CommandResult& res) : dir_(cfg.out_dir), res_(res)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        ANISO_REQUIRE(!ec, io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    std::ofstream open(const std::string& name)
    {
        const auto path = dir_ / name;
        std::ofstream os(path);
        ANISO_REQUIRE(os, io, "cannot write '" + path.string() + "'");
        res_.artifacts.push_back(path);
        return os;
    }

    void metrics(const std::string& name, const Metrics& m)
    {
        auto os = open(name);
        os << "metric,value\n";
        for (const auto& [k, v] : m) os << k << ',' << v << '\n';
    }

    void vtk(const std::string& name, const Mesh& m, const std::vector<VtkField>& fields)
    {
        const auto path = dir_ / name;
        export_vtk(m, fields, path);
        res_.artifacts.push_back(path);
    }

private:
    std::filesystem::path dir_;
    CommandResult& res_;
};

std::string fd(double x)
{
    return format_double(x);
}

std::string fi(long long x)
{
    return std::to_string(x);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> vertex_vectors(const FunctionSpaces& sp, const Vec& u)
{
    const int nv = sp.mesh().num_vertices();
    std::vector<double> out(static_cast<std::size_t>(3 * nv), 0.0);
    for (int v = 0; v < nv; ++v)
        for (int k = 0; k < sp.dim(); ++k) out[static_cast<std::size_t>(3 * v + k)] = u(sp.velocity_dof(v, k));
    return out;
}

double vertex_pressure(const FunctionSpaces& sp, const Vec& p, int v, Side s)
{
    const int q = sp.pressure_dof(v, s);
    return q >= 0 ? p(q) : 0.0;
}

std::vector<VtkField> field_vtk(const FunctionSpaces& sp, const FieldPair& f)
{
    const Mesh& m = sp.mesh();
    std::vector<VtkField> out;
    out.push_back({"velocity_minus", VtkField::Location::point, 3, vertex_vectors(sp, f.u)});
    out.push_back({"velocity_plus", VtkField::Location::point, 3, vertex_vectors(sp, side_velocity(sp, f, Side::plus))});
    for (Side s : {Side::minus, Side::plus}) {
        std::vector<double> p(static_cast<std::size_t>(m.num_vertices()));
        for (int v = 0; v < m.num_vertices(); ++v) p[static_cast<std::size_t>(v)] = vertex_pressure(sp, f.p, v, s);
        out.push_back({"pressure_" + std::string(side_name(s)), VtkField::Location::point, 1, std::move(p)});
    }
    return out;
}

/// One row per vertex: coordinates, both side velocities and pressures.
void write_field_csv(std::ostream& os, const FunctionSpaces& sp, const FieldPair& f)
{
    const Mesh& m = sp.mesh();
    const Vec up = side_velocity(sp, f, Side::plus);
    os << "vertex,x,y,z,u_minus_x,u_minus_y,u_minus_z,u_plus_x,u_plus_y,u_plus_z,p_minus,p_plus\n";
    for (int v = 0; v < m.num_vertices(); ++v) {
        const Point& x = m.vertex(v);
        os << v << ',' << fd(x.x()) << ',' << fd(x.y()) << ',' << fd(x.z());
        for (const Vec* u : {&f.u, &up})
            for (int k = 0; k < 3; ++k) os << ',' << fd(k < sp.dim() ? (*u)(sp.velocity_dof(v, k)) : 0.0);
        os << ',' << fd(vertex_pressure(sp, f.p, v, Side::minus)) << ',' << fd(vertex_pressure(sp, f.p, v, Side::plus))
           << '\n';
    }
}

Metrics mesh_metrics(const Mesh& m)
{
    double vol[2] = {0.0, 0.0};
    for (int c = 0; c < m.num_cells(); ++c) vol[side_index(m.side(c))] += m.volume(c);
    double area = 0.0;
    for (const auto& f : m.interface_facets()) area += m.facet_measure(f.v);
    return {{"dim", fi(m.dim())},
            {"vertices", fi(m.num_vertices())},
            {"cells", fi(m.num_cells())},
            {"interface_facets", fi(static_cast<long long>(m.interface_facets().size()))},
            {"outer_facets", fi(static_cast<long long>(m.outer_facets().size()))},
            {"h_max", fd(m.h_max())},
            {"radius", fd(m.radius())},
            {"volume_plus", fd(vol[0])},
            {"volume_minus", fd(vol[1])},
            {"interface_measure", fd(area)}};
}

int cmd_mesh(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh m = build_interface_mesh(cfg.mesh);
    const Metrics mm = mesh_metrics(m);
    out.metrics("mesh.csv", mm);
    out.vtk("mesh.vtk", m, {});
    for (const auto& [k, v] : mm) log << std::left << std::setw(18) << k << v << '\n';
    log << "built in " << seconds_since(t0) << " s\n";
    return 0;
}

int cmd_solve_stokes(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const ManufacturedRun run = run_manufactured_stokes(cfg);
    const FunctionSpaces& sp = *run.spaces;
    const SaddleReport& r = run.report;
    Metrics m{{"level", fi(cfg.mesh.level)},
              {"h_max", fd(run.h)},
              {"velocity_dofs", fi(sp.num_velocity())},
              {"pressure_dofs", fi(sp.num_pressure())},
              {"support", fd(cfg.stokes_support)},
              {"l2_error", fd(run.error.l2)},
              {"h1_error", fd(run.error.h1_semi)},
              {"relative_residual", fd(r.relative_residual)},
              {"backend", r.backend},
              {"iterations", fi(r.iterations)}};
    if (r.beta) m.emplace_back("beta", fd(*r.beta));
    if (r.stability_quotient) m.emplace_back("stability_quotient", fd(*r.stability_quotient));
    out.metrics("stokes.csv", m);
    out.vtk("stokes.vtk", sp.mesh(), field_vtk(sp, r.solution));
    log << "velocity error: L2 " << run.error.l2 << ", H1 " << run.error.h1_semi << '\n'
        << "relative residual " << r.relative_residual << " (" << r.backend << ", factor " << r.factor_seconds
        << " s, solve " << r.solve_seconds << " s)\n";
    return 0;
}

LoadFunctional side_load(const FunctionSpaces& sp, Side side)
{
    const int n = sp.dim();
    return assemble_volume_load(
        sp,
        [n, side](const Point& x, Side) {
            Point v = side == Side::plus ? smooth_profile(x) : Point(smooth_profile(x) * std::exp(-x.squaredNorm()));
            if (n == 2) v.z() = 0.0;
            return v;
        },
        side);
}

void write_trace_csv(std::ostream& os, const FunctionSpaces& sp, const PotentialPair& pot)
{
    const Mesh& m = sp.mesh();
    const int n = sp.dim();
    os << "interface_vertex,x,y,z";
    for (const char* name : {"gamma_plus", "gamma_minus", "T_plus", "T_minus"})
        for (int k = 0; k < n; ++k) os << ',' << name << '_' << "xyz"[k];
    os << '\n';
    for (int i = 0; i < sp.num_interface_vertices(); ++i) {
        const Point& x = m.vertex(sp.interface_vertices()[static_cast<std::size_t>(i)]);
        os << i << ',' << fd(x.x()) << ',' << fd(x.y()) << ',' << fd(x.z());
        for (const Vec* v : {&pot.gamma_plus.values, &pot.gamma_minus.values})
            for (int k = 0; k < n; ++k) os << ',' << fd((*v)(sp.trace_dof(i, k)));
        for (const auto* t : {&pot.T_plus, &pot.T_minus})
            for (int k = 0; k < n; ++k) os << ',' << (t->has_value() ? fd((*t)->moments(sp.trace_dof(i, k))) : "nan");
        os << '\n';
    }
}

int cmd_potential(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const auto sp = build_spaces(build_interface_mesh(cfg.mesh));
    const FunctionSpaces& s = *sp;
    ANISO_REQUIRE(s.num_trace() > 0, invalid_argument, "potential: the mesh has no interface");
    const PotentialContext pc(sp, make_tensor(cfg), cfg.outer_bc, cfg.threads);
    const std::string& kind = cfg.potential_kind;
    Metrics m{{"kind", kind}, {"density", cfg.potential_density}};
    PotentialPair pot;
    if (kind == "single") {
        const TraceDensity psi = make_potential_density(s, cfg);
        pot = single_layer(pc, psi);
        const SingleLayerTraces ops = single_layer_boundary_ops(pc, pot, psi);
        m.emplace_back("jump_residual", fd(ops.jump_residual));
        m.emplace_back("V_nu_pairing", fd(normal_density(s).moments.dot(ops.V.values)));
    } else if (kind == "adjoint-single") {
        const AdjointSingleLayer a = adjoint_single_layer(pc, make_potential_density(s, cfg));
        pot = a.potential;
        m.emplace_back("jump_residual", fd(a.ops.jump_residual));
    } else if (kind == "double") {
        const TraceField phi = make_potential_trace(s, cfg);
        const double flux = trace_flux(pc.system(), phi);
        m.emplace_back("flux", fd(flux));
        if (cfg.outer_bc == OuterBc::dirichlet && std::abs(flux) > 1e-9 * std::max(1.0, phi.values.cwiseAbs().maxCoeff()))
            log << "warning: the trace has nonzero flux; with the Dirichlet outer condition the potential is not divergence-free\n";
        pot = double_layer(pc, phi);
        const DoubleLayerTraces ops = double_layer_boundary_ops(pc, pot, phi);
        m.emplace_back("jump_residual", fd(ops.jump_residual));
        m.emplace_back("conormal_discrepancy", fd(ops.conormal_discrepancy));
    } else if (kind == "newtonian") {
        pot = newtonian(pc, side_load(s, Side::plus), side_load(s, Side::minus));
    } else {
        throw Error(ErrorCategory::config, "unknown potential kind '" + kind + "'");
    }
    const Vec up = side_velocity(s, pot.field, Side::plus);
    m.emplace_back("velocity_max", fd(std::max(up.cwiseAbs().maxCoeff(), pot.field.u.cwiseAbs().maxCoeff())));
    m.emplace_back("pressure_max", fd(pot.field.p.cwiseAbs().maxCoeff()));
    m.emplace_back("divergence_residual", fd(divergence_residual(pc.system(), pot.field)));

    if (cfg.potential_operators) {
        const auto t0 = std::chrono::steady_clock::now();
        const BoundaryOperators ops = materialize_boundary_operators(pc, {true, true, false});
        const TraceNorms norms = trace_norms(s, cfg.verify_trace_norm);
        const KernelCoercivityReport kr = kernel_and_coercivity_report(s, ops, norms);
        out.metrics("operators.csv", {{"trace_dofs", fi(s.num_trace())},
                                      {"V_norm", fd(kr.V_norm)},
                                      {"V_nu", fd(kr.V_nu)},
                                      {"V_sigma_min", fd(kr.V_sigma_min)},
                                      {"V_sigma_second", fd(kr.V_sigma_second)},
                                      {"V_sigma_complement", fd(kr.V_sigma_complement)},
                                      {"V_rayleigh_min", fd(kr.V_rayleigh_min)},
                                      {"D_norm", fd(kr.D_norm)},
                                      {"D_small_max", fd(kr.D_small.cwiseAbs().maxCoeff())},
                                      {"D_next", fd(kr.D_next)},
                                      {"D_constant_alignment", fd(kr.D_constant_alignment)},
                                      {"D_constants", fd(kr.D_constants)},
                                      {"D_rayleigh_min", fd(kr.D_rayleigh_min)}});
        log << "boundary operators (" << s.num_trace() << " columns) in " << seconds_since(t0) << " s\n";
    }
    out.metrics("potential.csv", m);
    {
        auto os = out.open("potential_traces.csv");
        write_trace_csv(os, s, pot);
    }
    out.vtk("potential.vtk", s.mesh(), field_vtk(s, pot.field));
    for (const auto& [k, v] : m) log << std::left << std::setw(22) << k << v << '\n';
    return 0;
}

TransmissionData scaled(TransmissionData d, double s)
{
    d.f_plus.moments *= s;
    d.f_minus.moments *= s;
    d.h.values *= s;
    d.g.moments *= s;
    d.g.repr *= s;
    return d;
}

Metrics residual_metrics(const TransmissionResiduals& r)
{
    return {{"residual_interior_plus", fd(r.interior_plus)},
            {"residual_interior_minus", fd(r.interior_minus)},
            {"residual_divergence", fd(r.divergence)},
            {"residual_trace_jump", fd(r.trace_jump)},
            {"residual_conormal_jump", fd(r.conormal_jump)}};
}

int cmd_transmit(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const auto sp = build_spaces(build_interface_mesh(cfg.mesh));
    const TransmissionContext tc(sp, make_tensor(cfg), cfg.outer_bc, cfg.verify_trace_norm, cfg.threads);
    const TransmissionData d = scaled(make_transmission_data(tc, cfg.transmission_data, cfg.seed), cfg.transmission_scale);
    const TransmissionSolution sol = solve_linear_transmission(tc, d, cfg.transmission_backend);
    Metrics m{{"backend", backend_name(sol.backend)},
              {"data", cfg.transmission_data},
              {"data_norm", fd(tc.data_norm(d))},
              {"solution_norm", fd(tc.solution_norm(sol.field))}};
    for (auto& e : residual_metrics(sol.residuals)) m.push_back(std::move(e));
    out.metrics("transmit.csv", m);
    {
        auto os = out.open("transmit_field.csv");
        write_field_csv(os, *sp, sol.field);
    }
    out.vtk("transmit.vtk", sp->mesh(), field_vtk(*sp, sol.field));
    for (const auto& [k, v] : m) log << std::left << std::setw(24) << k << v << '\n';
    log << "solved in " << sol.seconds << " s\n";
    return 0;
}

int cmd_navier_stokes(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const auto sp = build_spaces(build_interface_mesh(cfg.mesh));
    const TransmissionContext tc(sp, make_tensor(cfg), cfg.outer_bc, cfg.verify_trace_norm, cfg.threads);
    TransmissionData d = scaled(make_transmission_data(tc, cfg.transmission_data, cfg.seed), cfg.transmission_scale);
    const TransmissionConstants k = compute_constants(tc, cfg.ns_lambda, cfg.ns_probes, cfg.seed);
    const double dn = tc.data_norm(d);
    if (!k.unconditional && cfg.ns_data_fraction > 0.0 && dn > 0.0) d = scaled(std::move(d), cfg.ns_data_fraction * k.zeta / dn);
    PicardOptions po;
    po.lambda = cfg.ns_lambda;
    po.max_iter = cfg.ns_max_iter;
    po.tol = cfg.ns_tol;
    po.backend = cfg.transmission_backend;
    const NavierStokesResult r = solve_navier_stokes(tc, d, k, po);
    const PicardState& st = r.state;
    Metrics m{{"lambda", fd(k.lambda)},
              {"unconditional", k.unconditional ? "true" : "false"},
              {"c1", fd(k.c1)},
              {"c_star", fd(k.c_star)},
              {"eta", fd(k.eta)},
              {"zeta", fd(k.zeta)},
              {"data_norm", fd(st.data_norm)},
              {"iterations", fi(st.iterations)},
              {"converged", st.converged ? "true" : "false"},
              {"iterate_norm", fd(st.iterate_norm)},
              {"fixed_point_residual", fd(st.fixed_point_residual)},
              {"nonlinear_residual", fd(st.nonlinear_residual)}};
    out.metrics("navier_stokes.csv", m);
    {
        auto os = out.open("navier_stokes_history.csv");
        os << "iteration,difference,ratio\n";
        for (std::size_t i = 0; i < st.diff_history.size(); ++i)
            os << i + 1 << ',' << fd(st.diff_history[i]) << ',' << (i >= 1 && i - 1 < st.ratios.size() ? fd(st.ratios[i - 1]) : "")
               << '\n';
    }
    {
        auto os = out.open("navier_stokes_field.csv");
        write_field_csv(os, *sp, r.solution.field);
    }
    out.vtk("navier_stokes.vtk", sp->mesh(), field_vtk(*sp, r.solution.field));
    for (const auto& [key, v] : m) log << std::left << std::setw(22) << key << v << '\n';
    for (const auto& w : st.warnings) log << "warning: " << w << '\n';
    ANISO_REQUIRE(!st.blew_up, convergence, "navier-stokes: Picard iterates left the ball of radius 10 eta");
    ANISO_REQUIRE(st.converged, convergence,
                  "navier-stokes: no convergence to " + fd(cfg.ns_tol) + " in " + fi(cfg.ns_max_iter) + " iterations");
    return 0;
}

int cmd_infsup(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const auto sp = build_spaces(build_interface_mesh(cfg.mesh));
    const SaddleSystem sys = assemble_saddle_system(sp, make_tensor(cfg), cfg.outer_bc, cfg.infsup_equal_order);
    const InfSupReport r = estimate_infsup(sys, cfg.infsup_max_iter, cfg.infsup_tol, cfg.seed);
    const Metrics m{{"element", cfg.infsup_equal_order ? "P1/P1" : "MINI"},
                    {"level", fi(cfg.mesh.level)},
                    {"beta", fd(r.beta)},
                    {"iterations", fi(r.iterations)},
                    {"converged", r.converged ? "true" : "false"},
                    {"largest_ritz", fd(r.largest_ritz)}};
    out.metrics("infsup.csv", m);
    for (const auto& [k, v] : m) log << std::left << std::setw(14) << k << v << '\n';
    ANISO_REQUIRE(r.converged, convergence, "infsup: Lanczos did not converge");
    return 0;
}

int cmd_verify(const RunConfig& cfg, Outputs& out, std::ostream& log)
{
    const auto t0 = std::chrono::steady_clock::now();
    const VerificationReport rep = run_invariant_suite(cfg);
    {
        auto os = out.open("verify.csv");
        rep.write_csv(os);
    }
    rep.write_table(log);
    log << "verified in " << seconds_since(t0) << " s\n";
    return rep.pass() ? 0 : 1;
}

} // namespace

CommandResult dispatch(const std::string& command, const RunConfig& cfg, std::ostream& log)
{
    CommandResult res;
    Outputs out(cfg, res);
    if (command != "verify") log << "# " << command << ": " << fingerprint(cfg) << '\n';
    if (command == "mesh") res.exit_code = cmd_mesh(cfg, out, log);
    else if (command == "solve-stokes") res.exit_code = cmd_solve_stokes(cfg, out, log);
    else if (command == "potential") res.exit_code = cmd_potential(cfg, out, log);
    else if (command == "transmit") res.exit_code = cmd_transmit(cfg, out, log);
    else if (command == "navier-stokes") res.exit_code = cmd_navier_stokes(cfg, out, log);
    else if (command == "infsup") res.exit_code = cmd_infsup(cfg, out, log);
    else if (command == "verify") res.exit_code = cmd_verify(cfg, out, log);
    else throw Error(ErrorCategory::config, "unknown command '" + command + "'");
    return res;
}

} // namespace anisostokes
