#include "support.hpp"

#include <gtest/gtest.h>

using namespace anisostokes;

namespace {

struct Problem {
    std::shared_ptr<const FunctionSpaces> sp;
    std::unique_ptr<PotentialContext> pc;
};

Problem make(int dim, const std::string& kind, OuterBc bc = OuterBc::traction_free)
{
    RunConfig cfg;
    cfg.mesh.dim = dim;
    cfg.tensor_kind = kind;
    Problem s;
    s.sp = fixtures::spaces(dim);
    s.pc = std::make_unique<PotentialContext>(s.sp, make_tensor(cfg), bc);
    return s;
}

double rel(const Vec& a, const Vec& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace

class PotentialIdentities : public ::testing::TestWithParam<std::tuple<int, std::string, OuterBc>> {};

TEST_P(PotentialIdentities, SingleLayerOfTheNormal)
{
    const auto [dim, kind, bc] = GetParam();
    const Problem s = make(dim, kind, bc);
    const PotentialPair p = single_layer(*s.pc, normal_density(*s.sp));
    EXPECT_LT(p.field.u.cwiseAbs().maxCoeff(), 1e-10);
    Vec diff(s.sp->num_pressure());
    for (int q = 0; q < diff.size(); ++q)
        diff(q) = p.field.p(q) + (s.sp->pressure_side(q) == Side::plus ? 1.0 : 0.0);
    if (bc == OuterBc::dirichlet) diff.array() -= diff.mean();
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-10);
}

TEST_P(PotentialIdentities, DoubleLayerOfAConstant)
{
    const auto [dim, kind, bc] = GetParam();
    const Problem s = make(dim, kind, bc);
    Point c = Point::Zero();
    c(dim - 1) = 1.0;
    const PotentialPair p = double_layer(*s.pc, constant_trace(*s.sp, c));
    EXPECT_LT(p.field.p.cwiseAbs().maxCoeff(), 1e-10);
    const Mesh& m = s.sp->mesh();
    const Vec up = side_velocity(*s.sp, p.field, Side::plus);
    for (int v = 0; v < m.num_vertices(); ++v)
        for (int k = 0; k < dim; ++k) {
            if (s.sp->touches(v, Side::minus)) {
                EXPECT_NEAR(p.field.u(s.sp->velocity_dof(v, k)), 0.0, 1e-10);
            }
            if (s.sp->touches(v, Side::plus)) {
                EXPECT_NEAR(up(s.sp->velocity_dof(v, k)), -c(k), 1e-10);
            }
        }
    const DoubleLayerTraces t = double_layer_boundary_ops(*s.pc, p, constant_trace(*s.sp, c));
    EXPECT_LT(t.D.moments.norm(), 1e-10);
}

TEST_P(PotentialIdentities, JumpRelations)
{
    const auto [dim, kind, bc] = GetParam();
    const Problem s = make(dim, kind, bc);
    const int nt = s.sp->num_trace();
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const TraceDensity psi = density_from_moments(*s.sp, fixtures::random_vector(nt, seed));
        const PotentialPair sl = single_layer(*s.pc, psi);
        const SingleLayerTraces st = single_layer_boundary_ops(*s.pc, sl, psi);
        EXPECT_LT(st.jump_residual, 1e-10);
        EXPECT_LT(rel(sl.T_plus->moments, 0.5 * psi.moments + st.K.moments), 1e-10);
        EXPECT_LT(rel(sl.T_minus->moments, -0.5 * psi.moments + st.K.moments), 1e-10);
        EXPECT_NEAR((sl.gamma_plus.values - sl.gamma_minus.values).norm(), 0.0, 1e-14);

        TraceField phi{fixtures::random_vector(nt, seed + 10)};
        if (bc == OuterBc::dirichlet) phi = remove_trace_flux(s.pc->system(), phi);
        const PotentialPair dl = double_layer(*s.pc, phi);
        const DoubleLayerTraces dt = double_layer_boundary_ops(*s.pc, dl, phi);
        EXPECT_LT(dt.jump_residual, 1e-12);
        EXPECT_LT(dt.conormal_discrepancy, 1e-9);
        EXPECT_LT(rel(dl.gamma_plus.values, -0.5 * phi.values + dt.K.values), 1e-10);
        EXPECT_LT(rel(dl.gamma_minus.values, 0.5 * phi.values + dt.K.values), 1e-10);
        EXPECT_LT(divergence_residual(s.pc->system(), dl.field), 1e-10);
        EXPECT_LT(divergence_residual(s.pc->system(), sl.field), 1e-10);
    }
}

TEST_P(PotentialIdentities, DualityWithTheAdjointSystem)
{
    const auto [dim, kind, bc] = GetParam();
    const Problem s = make(dim, kind, bc);
    const int nt = s.sp->num_trace();
    const TraceDensity psi = density_from_moments(*s.sp, fixtures::random_vector(nt, 1));
    const TraceDensity psis = density_from_moments(*s.sp, fixtures::random_vector(nt, 2));
    TraceField phi{fixtures::random_vector(nt, 3)};
    if (bc == OuterBc::dirichlet) phi = remove_trace_flux(s.pc->system(), phi);
    const SingleLayerTraces st = single_layer_boundary_ops(*s.pc, single_layer(*s.pc, psi), psi);
    const AdjointSingleLayer as = adjoint_single_layer(*s.pc, psis);
    const double a = psi.moments.dot(as.ops.V.values);
    const double b = st.V.values.dot(psis.moments);
    EXPECT_LT(fixtures::rel_diff(a, b), 1e-10);
    const DoubleLayerTraces dt = double_layer_boundary_ops(*s.pc, double_layer(*s.pc, phi), phi);
    EXPECT_LT(fixtures::rel_diff(psis.moments.dot(dt.K.values), as.ops.K.moments.dot(phi.values)), 1e-10);
    // the adjoint view solves the transposed system, i.e. the adjoint tensor
    RunConfig cfg;
    cfg.mesh.dim = dim;
    cfg.tensor_kind = kind;
    const PotentialContext direct(s.sp, adjoint(make_tensor(cfg)), bc);
    const PotentialPair ref = single_layer(direct, psis);
    EXPECT_LT(rel(as.potential.field.u, ref.field.u), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Cases, PotentialIdentities,
                         ::testing::Values(std::make_tuple(2, std::string("isotropic"), OuterBc::traction_free),
                                           std::make_tuple(2, std::string("skew"), OuterBc::traction_free),
                                           std::make_tuple(2, std::string("two-phase"), OuterBc::dirichlet),
                                           std::make_tuple(3, std::string("diagonal"), OuterBc::traction_free),
                                           std::make_tuple(3, std::string("skew"), OuterBc::dirichlet)));

TEST(Potentials, NewtonianSolvesTheLoadedProblem)
{
    const Problem s = make(2, "two-phase");
    const LoadFunctional fp = assemble_volume_load(*s.sp, [](const Point& x, Side) { return Point(x.y(), 1.0, 0.0); }, Side::plus);
    const LoadFunctional fm = assemble_volume_load(
        *s.sp, [](const Point& x, Side) { return Point(std::exp(-x.squaredNorm()), 0.0, 0.0); }, Side::minus);
    const PotentialPair n = newtonian(*s.pc, fp, fm);
    const SaddleSystem& sys = s.pc->system();
    // a(u, v) + b(v, pi) = -<f, v> on DOFs away from the constraints
    const Vec r = sys.A * n.field.u + sys.B.transpose() * n.field.p + fp.moments + fm.moments;
    const Vec Cl = sys.C.transpose() * n.multipliers.head(sys.C.rows());
    EXPECT_LT((r + Cl).norm(), 1e-10 * (fp.moments + fm.moments).norm());
    EXPECT_LT((sys.B * n.field.u).norm(), 1e-12);
    ASSERT_TRUE(n.T_plus && n.T_minus);
    // continuous field, no interface source: T+ = T-
    EXPECT_LT(rel(n.T_plus->moments, n.T_minus->moments), 1e-10);
    const PotentialPair single = newtonian(*s.pc, LoadFunctional{fp.moments + fm.moments});
    EXPECT_FALSE(single.T_plus.has_value());
    EXPECT_LT(rel(single.field.u, n.field.u), 1e-14);
}

TEST(Potentials, ZeroDataGivesZeroFields)
{
    const Problem s = make(2, "isotropic");
    const PotentialPair d = double_layer(*s.pc, TraceField{Vec::Zero(s.sp->num_trace())});
    EXPECT_EQ(d.field.u.norm(), 0.0);
    EXPECT_EQ(d.field.p.norm(), 0.0);
}

TEST(Potentials, SizeMismatchIsRejected)
{
    const Problem s = make(2, "isotropic");
    EXPECT_THROW((void)double_layer(*s.pc, TraceField{Vec::Zero(3)}), Error);
    EXPECT_THROW((void)single_layer(*s.pc, density_from_moments(*s.sp, Vec::Zero(s.sp->num_trace() + 1))), Error);
}

TEST(Potentials, MaterializedOperatorsMatchColumnwiseSolves)
{
    const Problem s = make(2, "skew");
    s.pc->set_threads(2);
    const BoundaryOperators ops = materialize_boundary_operators(*s.pc, {true, true, true});
    const int nt = s.sp->num_trace();
    ASSERT_EQ(ops.V.rows(), nt);
    const Vec r = fixtures::random_vector(nt, 4);
    const TraceDensity psi = density_from_moments(*s.sp, r);
    const SingleLayerTraces st = single_layer_boundary_ops(*s.pc, single_layer(*s.pc, psi), psi);
    EXPECT_LT(rel(ops.V * r, st.V.values), 1e-10);
    EXPECT_LT(rel(ops.Kss * r, st.K.moments), 1e-10);
    const TraceField phi{r};
    const DoubleLayerTraces dt = double_layer_boundary_ops(*s.pc, double_layer(*s.pc, phi), phi);
    EXPECT_LT(rel(ops.K * r, dt.K.values), 1e-10);
    EXPECT_LT(rel(ops.D * r, dt.D.moments), 1e-10);
    // duality of the materialized operators: V* = V^T, K* = K^T
    EXPECT_LT((ops.V_adjoint - ops.V.transpose()).norm(), 1e-10 * ops.V.norm());
    EXPECT_LT((ops.Kss_adjoint - ops.K.transpose()).norm(), 1e-10 * ops.K.norm());
}

TEST(Potentials, KernelAndCoercivityReport)
{
    const Problem s = make(2, "isotropic");
    const BoundaryOperators ops = materialize_boundary_operators(*s.pc);
    const KernelCoercivityReport kr = kernel_and_coercivity_report(*s.sp, ops, trace_norms(*s.sp, TraceNormKind::interpolation));
    EXPECT_LT(kr.V_nu, 1e-10 * kr.V_norm);
    EXPECT_LT(kr.D_small.cwiseAbs().maxCoeff(), 1e-10 * kr.D_norm);
    EXPECT_EQ(kr.D_small.size(), 2);
    EXPECT_GT(kr.D_next, 1e-3 * kr.D_norm);
    EXPECT_GT(kr.V_rayleigh_min, 1e-4 * kr.V_norm);
    EXPECT_GT(kr.D_rayleigh_min, 1e-3 * kr.D_norm);
    EXPECT_GT(kr.D_constant_alignment, 1.0 - 1e-8);
    EXPECT_LT(kr.D_constants, 1e-10);
}

TEST(Potentials, SelfAdjointnessForSymmetricTensors)
{
    const Problem s = make(3, "two-phase");
    const int nt = s.sp->num_trace();
    const TraceDensity a = density_from_moments(*s.sp, fixtures::random_vector(nt, 1));
    const TraceDensity b = density_from_moments(*s.sp, fixtures::random_vector(nt, 2));
    const double ab = a.moments.dot(single_layer(*s.pc, b).gamma_plus.values);
    const double ba = b.moments.dot(single_layer(*s.pc, a).gamma_plus.values);
    EXPECT_LT(fixtures::rel_diff(ab, ba), 1e-10);
    const double aa = a.moments.dot(single_layer(*s.pc, a).gamma_plus.values);
    EXPECT_GT(aa, 0.0);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors)
{
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](int j) { hits[static_cast<std::size_t>(j)] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3, [](int j) {
                     if (j == 7) throw Error(ErrorCategory::solver, "boom");
                 }),
                 Error);
}
