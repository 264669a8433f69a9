#include "anisostokes/potentials.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace anisostokes {

void parallel_for(int n, int threads, const std::function<void(int)>& body)
{
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        for (int j = 0; j < n; ++j) body(j);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int j = w; j < n; j += workers) body(j);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

PotentialContext::PotentialContext(std::shared_ptr<const FunctionSpaces> sp, const CoeffTensor& t, OuterBc bc, int threads)
    : spaces_(std::move(sp)), threads_(std::max(1, threads))
{
    ANISO_REQUIRE(spaces_ != nullptr, invalid_argument, "PotentialContext: null spaces");
    system_ = std::make_shared<const SaddleSystem>(assemble_saddle_system(spaces_, t, bc));
    factorization_ = std::make_shared<const KktFactorization>(*system_);
}

const SpMat& PotentialContext::a_side(Side s) const
{
    const auto i = static_cast<std::size_t>(side_index(s));
    return adjoint_ ? (*a_side_transposed_)[i] : system_->A_side[i];
}

const SpMat& PotentialContext::b_side(Side s) const
{
    return system_->B_side[static_cast<std::size_t>(side_index(s))];
}

FieldPair PotentialContext::solve(const Vec& F, const Vec& G, Vec* multipliers) const
{
    const SaddleSystem& sys = *system_;
    const Vec x = factorization_->solve(sys.kkt_rhs(F, G), adjoint_);
    FieldPair out;
    out.u = x.head(sys.num_velocity());
    out.p = x.segment(sys.num_velocity(), sys.num_pressure());
    out.jump = Vec::Zero(spaces_->num_trace());
    if (multipliers != nullptr) *multipliers = x.tail(sys.num_multipliers());
    return out;
}

PotentialContext PotentialContext::adjoint_view() const
{
    PotentialContext c = *this;
    c.adjoint_ = !adjoint_;
    if (c.adjoint_ && !c.a_side_transposed_) {
        auto tr = std::make_shared<std::array<SpMat, 2>>();
        (*tr)[0] = system_->A_side[0].transpose();
        (*tr)[1] = system_->A_side[1].transpose();
        c.a_side_transposed_ = tr;
    }
    return c;
}

namespace {

void cache_traces(const PotentialContext& ctx, PotentialPair& pot)
{
    const FunctionSpaces& sp = ctx.spaces();
    if (sp.num_trace() == 0) return;
    pot.gamma_plus = trace(sp, pot.field, Side::plus);
    pot.gamma_minus = trace(sp, pot.field, Side::minus);
}

void cache_conormals(const PotentialContext& ctx, PotentialPair& pot, const Vec& f_plus, const Vec& f_minus)
{
    const FunctionSpaces& sp = ctx.spaces();
    if (sp.num_trace() == 0) return;
    pot.T_plus = conormal_derivative(sp, ctx.a_side(Side::plus), ctx.b_side(Side::plus),
                                     side_velocity(sp, pot.field, Side::plus), pot.field.p, f_plus, Side::plus);
    pot.T_minus = conormal_derivative(sp, ctx.a_side(Side::minus), ctx.b_side(Side::minus),
                                      side_velocity(sp, pot.field, Side::minus), pot.field.p, f_minus, Side::minus);
}

} // namespace

PotentialPair newtonian(const PotentialContext& ctx, const LoadFunctional& f_plus, const LoadFunctional& f_minus)
{
    const FunctionSpaces& sp = ctx.spaces();
    ANISO_REQUIRE(f_plus.moments.size() == sp.num_velocity() && f_minus.moments.size() == sp.num_velocity(),
                  invalid_argument, "newtonian: load size mismatch");
    PotentialPair pot;
    pot.kind = PotentialKind::newtonian;
    pot.field = ctx.solve(-(f_plus.moments + f_minus.moments), Vec::Zero(sp.num_pressure()), &pot.multipliers);
    cache_traces(ctx, pot);
    cache_conormals(ctx, pot, f_plus.moments, f_minus.moments);
    return pot;
}

PotentialPair newtonian(const PotentialContext& ctx, const LoadFunctional& f)
{
    const FunctionSpaces& sp = ctx.spaces();
    ANISO_REQUIRE(f.moments.size() == sp.num_velocity(), invalid_argument, "newtonian: load size mismatch");
    PotentialPair pot;
    pot.kind = PotentialKind::newtonian;
    pot.field = ctx.solve(-f.moments, Vec::Zero(sp.num_pressure()), &pot.multipliers);
    cache_traces(ctx, pot);
    return pot;
}

PotentialPair single_layer(const PotentialContext& ctx, const TraceDensity& psi)
{
    const FunctionSpaces& sp = ctx.spaces();
    PotentialPair pot;
    pot.kind = PotentialKind::single_layer;
    pot.field = ctx.solve(boundary_pairing(psi, sp).moments, Vec::Zero(sp.num_pressure()), &pot.multipliers);
    cache_traces(ctx, pot);
    const Vec zero;
    cache_conormals(ctx, pot, zero, zero);
    return pot;
}

double trace_flux(const SaddleSystem& sys, const TraceField& phi)
{
    return (sys.B_side[0] * sys.spaces->extend_trace(phi.values)).sum();
}

TraceField remove_trace_flux(const SaddleSystem& sys, const TraceField& phi)
{
    const FunctionSpaces& sp = *sys.spaces;
    const Vec dir = sp.restrict_to_trace(sys.B_side[0].transpose() * Vec::Ones(sp.num_pressure()));
    return {phi.values - (dir.dot(phi.values) / dir.squaredNorm()) * dir};
}

PotentialPair double_layer(const PotentialContext& ctx, const TraceField& phi)
{
    const FunctionSpaces& sp = ctx.spaces();
    ANISO_REQUIRE(sp.num_trace() > 0, invalid_argument, "double_layer: empty interface");
    ANISO_REQUIRE(phi.values.size() == sp.num_trace(), invalid_argument, "double_layer: trace size mismatch");
    const Vec w = sp.extend_trace(-phi.values);
    PotentialPair pot;
    pot.kind = PotentialKind::double_layer;
    pot.field = ctx.solve(-(ctx.a_side(Side::plus) * w), -(ctx.b_side(Side::plus) * w), &pot.multipliers);
    pot.field.jump = -phi.values;
    cache_traces(ctx, pot);
    const Vec zero;
    cache_conormals(ctx, pot, zero, zero);
    return pot;
}

namespace {

double relative(double num, double den)
{
    return den > 0.0 ? num / den : num;
}

} // namespace

SingleLayerTraces single_layer_boundary_ops(const PotentialContext&, const PotentialPair& pot, const TraceDensity& psi)
{
    ANISO_REQUIRE(pot.T_plus && pot.T_minus, invalid_argument, "single_layer_boundary_ops: conormal caches missing");
    SingleLayerTraces out;
    out.V = pot.gamma_plus;
    const Vec avg = 0.5 * (pot.T_plus->moments + pot.T_minus->moments);
    out.K = {avg, 0.5 * (pot.T_plus->repr + pot.T_minus->repr)};
    out.jump_residual = relative((pot.T_plus->moments - pot.T_minus->moments - psi.moments).norm(), psi.moments.norm());
    return out;
}

DoubleLayerTraces double_layer_boundary_ops(const PotentialContext&, const PotentialPair& pot, const TraceField& phi)
{
    ANISO_REQUIRE(pot.T_plus && pot.T_minus, invalid_argument, "double_layer_boundary_ops: conormal caches missing");
    DoubleLayerTraces out;
    out.K = {0.5 * (pot.gamma_plus.values + pot.gamma_minus.values)};
    out.D = *pot.T_plus;
    const double scale = std::max(pot.T_plus->moments.norm(), pot.T_minus->moments.norm());
    out.conormal_discrepancy = relative((pot.T_plus->moments - pot.T_minus->moments).norm(), scale);
    out.jump_residual = phi.values.size() > 0
                            ? (pot.gamma_plus.values - pot.gamma_minus.values + phi.values).cwiseAbs().maxCoeff()
                            : 0.0;
    return out;
}

AdjointSingleLayer adjoint_single_layer(const PotentialContext& ctx, const TraceDensity& psi_star)
{
    const PotentialContext adj = ctx.adjoint_view();
    AdjointSingleLayer out;
    out.potential = single_layer(adj, psi_star);
    out.ops = single_layer_boundary_ops(adj, out.potential, psi_star);
    return out;
}

BoundaryOperators materialize_boundary_operators(const PotentialContext& ctx, const MaterializeOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    const FunctionSpaces& sp = ctx.spaces();
    const int nt = sp.num_trace();
    ANISO_REQUIRE(nt > 0, invalid_argument, "materialize_boundary_operators: empty interface");
    BoundaryOperators ops;
    auto unit = [nt](int j) {
        Vec e = Vec::Zero(nt);
        e(j) = 1.0;
        return e;
    };
    auto single_columns = [&](const PotentialContext& c, Mat& V, Mat& Kss) {
        V.resize(nt, nt);
        Kss.resize(nt, nt);
        parallel_for(nt, c.threads(), [&](int j) {
            const TraceDensity psi = density_from_moments(sp, unit(j));
            const PotentialPair pot = single_layer(c, psi);
            V.col(j) = pot.gamma_plus.values;
            Kss.col(j) = 0.5 * (pot.T_plus->moments + pot.T_minus->moments);
        });
    };
    if (opt.single) single_columns(ctx, ops.V, ops.Kss);
    if (opt.adjoint) single_columns(ctx.adjoint_view(), ops.V_adjoint, ops.Kss_adjoint);
    if (opt.dbl) {
        ops.K.resize(nt, nt);
        ops.D.resize(nt, nt);
        parallel_for(nt, ctx.threads(), [&](int j) {
            const PotentialPair pot = double_layer(ctx, TraceField{unit(j)});
            ops.K.col(j) = 0.5 * (pot.gamma_plus.values + pot.gamma_minus.values);
            ops.D.col(j) = pot.T_plus->moments;
        });
    }
    ops.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return ops;
}

namespace {

/// Orthonormal basis of the Euclidean complement of span(C).
Mat complement_basis(const Mat& C)
{
    Eigen::HouseholderQR<Mat> qr(C);
    const Mat Q = qr.householderQ() * Mat::Identity(C.rows(), C.rows());
    return Q.rightCols(C.rows() - C.cols());
}

Eigen::GeneralizedSelfAdjointEigenSolver<Mat> generalized(const Mat& S, const Mat& N, const Mat& Z)
{
    const Mat a = Z.transpose() * S * Z;
    const Mat b = Z.transpose() * N * Z;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(0.5 * (a + a.transpose()), 0.5 * (b + b.transpose()));
    ANISO_REQUIRE(eig.info() == Eigen::Success, solver, "kernel_and_coercivity_report: eigensolver failed");
    return eig;
}

double min_generalized(const Mat& S, const Mat& N, const Mat& Z)
{
    return generalized(S, N, Z).eigenvalues()(0);
}

Mat constant_traces(const FunctionSpaces& sp)
{
    const int n = sp.dim();
    Mat C = Mat::Zero(sp.num_trace(), n);
    for (int i = 0; i < sp.num_interface_vertices(); ++i)
        for (int k = 0; k < n; ++k) C(sp.trace_dof(i, k), k) = 1.0;
    return C;
}

} // namespace

KernelCoercivityReport kernel_and_coercivity_report(const FunctionSpaces& sp, const BoundaryOperators& ops,
                                                    const TraceNorms& norms)
{
    KernelCoercivityReport rep;
    rep.norm_kind = norms.kind;
    const int n = sp.dim();
    const Vec nu = normal_density(sp).moments;

    const Mat& H = norms.half;
    const Mat& N = norms.minus_half;
    const Mat I = Mat::Identity(sp.num_trace(), sp.num_trace());

    if (ops.V.size() > 0) {
        const Mat VHV = ops.V.transpose() * H * ops.V;
        const Vec s2 = generalized(VHV, N, I).eigenvalues().cwiseMax(0.0);
        rep.V_norm = std::sqrt(s2(s2.size() - 1));
        rep.V_sigma_min = std::sqrt(s2(0));
        rep.V_sigma_second = std::sqrt(s2(1));
        const Vec vnu = ops.V * nu;
        rep.V_nu = std::sqrt(std::max(0.0, vnu.dot(H * vnu)));
        const Mat Z = complement_basis(Mat(N * nu));
        rep.V_sigma_complement = std::sqrt(std::max(0.0, min_generalized(VHV, N, Z)));
        rep.V_rayleigh_min = min_generalized(ops.V, N, Z);
    }
    if (ops.D.size() > 0) {
        const Mat minusD = -0.5 * (ops.D + ops.D.transpose());
        const auto eig = generalized(minusD, H, I);
        const Vec& ev = eig.eigenvalues();
        rep.D_norm = ev.cwiseAbs().maxCoeff();
        rep.D_small = ev.head(n);
        rep.D_next = ev(n);
        const Mat C = constant_traces(sp);
        const Mat Qc = Eigen::HouseholderQR<Mat>(C).householderQ() * Mat::Identity(C.rows(), n);
        rep.D_constant_alignment = 1.0;
        for (int k = 0; k < n; ++k) {
            const Vec e = eig.eigenvectors().col(k).normalized();
            rep.D_constant_alignment = std::min(rep.D_constant_alignment, (Qc.transpose() * e).norm());
        }
        for (int k = 0; k < n; ++k) rep.D_constants = std::max(rep.D_constants, (ops.D * C.col(k)).norm());
        Mat MC(C.rows(), n);
        for (int k = 0; k < n; ++k) MC.col(k) = sp.apply_interface_mass(C.col(k));
        rep.D_rayleigh_min = min_generalized(minusD, H, complement_basis(MC));
    }
    return rep;
}

} // namespace anisostokes
