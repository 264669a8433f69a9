#include "support.hpp"

#include <gtest/gtest.h>

using namespace anisostokes;

namespace {

std::unique_ptr<TransmissionContext> context(int dim, const std::string& kind, OuterBc bc = OuterBc::traction_free)
{
    RunConfig cfg;
    cfg.mesh.dim = dim;
    cfg.tensor_kind = kind;
    return std::make_unique<TransmissionContext>(fixtures::spaces(dim), make_tensor(cfg), bc);
}

TransmissionData scaled(TransmissionData d, double s)
{
    d.f_plus.moments *= s;
    d.f_minus.moments *= s;
    d.h.values *= s;
    d.g = density_from_moments(*fixtures::spaces(2), d.g.moments * s);
    return d;
}

} // namespace

class TransmissionCases : public ::testing::TestWithParam<std::tuple<int, std::string, OuterBc>> {};

TEST_P(TransmissionCases, BackendsAgreeAndSatisfyAllFourEquations)
{
    const auto [dim, kind, bc] = GetParam();
    const auto tc = context(dim, kind, bc);
    for (const char* data : {"smooth", "random"}) {
        const TransmissionData d = make_transmission_data(*tc, data, 3);
        const TransmissionSolution a = solve_linear_transmission(*tc, d, TransmissionBackend::monolithic);
        const TransmissionSolution b = solve_linear_transmission(*tc, d, TransmissionBackend::representation);
        EXPECT_LT(a.residuals.max(), 1e-10) << data;
        EXPECT_LT(b.residuals.max(), 1e-10) << data;
        EXPECT_LT(relative_h1_distance(*tc, a.field, b.field), 1e-9) << data;
        const FunctionSpaces& sp = tc->spaces();
        EXPECT_NEAR((a.field.jump - d.h.values).norm(), 0.0, 1e-12 * d.h.values.norm());
        EXPECT_LT((a.T_plus.moments - a.T_minus.moments - d.g.moments).norm(), 1e-10 * (d.g.moments.norm() + 1.0));
        const TraceField gp = trace(sp, a.field, Side::plus);
        const TraceField gm = trace(sp, a.field, Side::minus);
        EXPECT_LT((gp.values - gm.values - d.h.values).norm(), 1e-12 * (d.h.values.norm() + 1.0));
    }
}

TEST_P(TransmissionCases, ZeroDataGivesZeroSolution)
{
    const auto [dim, kind, bc] = GetParam();
    const auto tc = context(dim, kind, bc);
    const TransmissionSolution s = solve_linear_transmission(*tc, TransmissionData::zero(tc->spaces()));
    EXPECT_EQ(tc->solution_norm(s.field), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Cases, TransmissionCases,
                         ::testing::Values(std::make_tuple(2, std::string("two-phase"), OuterBc::traction_free),
                                           std::make_tuple(2, std::string("skew"), OuterBc::dirichlet),
                                           std::make_tuple(3, std::string("diagonal"), OuterBc::traction_free)));

TEST(Transmission, DirichletRejectsAJumpWithFlux)
{
    const auto tc = context(2, "isotropic", OuterBc::dirichlet);
    TransmissionData d = TransmissionData::zero(tc->spaces());
    d.h = TraceField{normal_density(tc->spaces()).repr};
    try {
        (void)solve_linear_transmission(*tc, d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::invalid_argument);
    }
    d.h = remove_trace_flux(tc->system(), d.h);
    EXPECT_NEAR(trace_flux(tc->system(), d.h), 0.0, 1e-12);
    EXPECT_NO_THROW((void)solve_linear_transmission(*tc, d));
}

TEST(Transmission, NonFiniteDataIsRejected)
{
    const auto tc = context(2, "isotropic");
    TransmissionData d = TransmissionData::zero(tc->spaces());
    d.f_plus.moments(0) = std::nan("");
    EXPECT_THROW((void)solve_linear_transmission(*tc, d), Error);
}

TEST(Transmission, SolutionMapNormMatchesADenseOracle)
{
    // Assemble the solution map column by column and take the generalized singular value.
    const auto tc = context(2, "two-phase");
    const FunctionSpaces& sp = tc->spaces();
    const int nv = sp.num_velocity();
    const int nt = sp.num_trace();
    const int np = sp.num_pressure();
    std::vector<int> in_plus, in_minus;
    const Vec ones = Vec::Ones(nv);
    const Vec mp = tc->restrict_to_side(ones, Side::plus);
    const Vec mm = tc->restrict_to_side(ones, Side::minus);
    for (int i = 0; i < nv; ++i) {
        if (mp(i) != 0.0) in_plus.push_back(i);
        if (mm(i) != 0.0) in_minus.push_back(i);
    }
    const int np_in = static_cast<int>(in_plus.size());
    const int nm_in = static_cast<int>(in_minus.size());
    const int n_in = np_in + nm_in + 2 * nt;
    const int n_out = np_in + nm_in + np;

    auto solve_column = [&](int j) {
        TransmissionData d = TransmissionData::zero(sp);
        if (j < np_in) d.f_plus.moments(in_plus[static_cast<std::size_t>(j)]) = 1.0;
        else if (j < np_in + nm_in) d.f_minus.moments(in_minus[static_cast<std::size_t>(j - np_in)]) = 1.0;
        else if (j < np_in + nm_in + nt) d.h.values(j - np_in - nm_in) = 1.0;
        else {
            Vec g = Vec::Zero(nt);
            g(j - np_in - nm_in - nt) = 1.0;
            d.g = density_from_moments(sp, g);
        }
        const TransmissionSolution s = solve_linear_transmission(*tc, d);
        const Vec up = side_velocity(sp, s.field, Side::plus);
        Vec y(n_out);
        for (int i = 0; i < np_in; ++i) y(i) = up(in_plus[static_cast<std::size_t>(i)]);
        for (int i = 0; i < nm_in; ++i) y(np_in + i) = s.field.u(in_minus[static_cast<std::size_t>(i)]);
        y.tail(np) = s.field.p;
        return y;
    };
    Mat S(n_out, n_in);
    for (int j = 0; j < n_in; ++j) S.col(j) = solve_column(j);

    const Mat Xp = Mat(tc->h1(Side::plus))(in_plus, in_plus);
    const Mat Xm = Mat(tc->h1(Side::minus))(in_minus, in_minus);
    Mat Nin = Mat::Zero(n_in, n_in);
    Nin.block(0, 0, np_in, np_in) = Xp.inverse();
    Nin.block(np_in, np_in, nm_in, nm_in) = Xm.inverse();
    Nin.block(np_in + nm_in, np_in + nm_in, nt, nt) = tc->trace_norms().half;
    Nin.block(np_in + nm_in + nt, np_in + nm_in + nt, nt, nt) = tc->trace_norms().minus_half;
    Mat Nout = Mat::Zero(n_out, n_out);
    Nout.block(0, 0, np_in, np_in) = Xp;
    Nout.block(np_in, np_in, nm_in, nm_in) = Xm;
    Nout.block(np_in + nm_in, np_in + nm_in, np, np) = Mat(tc->pressure_mass());
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(S.transpose() * Nout * S, 0.5 * (Nin + Nin.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const double dense = std::sqrt(eig.eigenvalues().maxCoeff());

    const OperatorNormReport r = solution_map_norm(*tc, 11, 400, 1e-9);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, dense, 1e-4 * dense);
}

TEST(Transmission, ConstantsSatisfyTheirDefinitions)
{
    const auto tc = context(2, "isotropic");
    const TransmissionConstants k = compute_constants(*tc, 2.0, 8, 3);
    EXPECT_FALSE(k.unconditional);
    EXPECT_GT(k.c1, 0.0);
    EXPECT_NEAR(k.eta, 1.0 / (4.0 * k.c1 * k.c_star), 1e-15 * k.eta);
    EXPECT_NEAR(k.zeta, 3.0 * k.eta / (4.0 * k.c_star), 1e-15 * k.zeta);
    const TransmissionConstants k0 = compute_constants(*tc, 0.0, 8, 3);
    EXPECT_TRUE(k0.unconditional);
    EXPECT_TRUE(std::isinf(k0.eta));
    EXPECT_NEAR(k0.c_star, k.c_star, 1e-12 * k.c_star);
    // c1 scales linearly with lambda
    const TransmissionConstants k4 = compute_constants(*tc, 4.0, 8, 3);
    EXPECT_NEAR(k4.c1, 2.0 * k.c1, 1e-10 * k.c1);
}

TEST(Transmission, ConvectionLoadIsQuadraticInTheVelocity)
{
    const auto sp = fixtures::spaces(2);
    const Vec u = fixtures::random_vector(sp->num_velocity(), 2);
    const LoadFunctional a = convection_load(*sp, 1.0, u);
    const LoadFunctional b = convection_load(*sp, 1.0, 2.0 * u);
    const LoadFunctional c = convection_load(*sp, 3.0, u);
    EXPECT_NEAR((b.moments - 4.0 * a.moments).norm(), 0.0, 1e-12 * b.moments.norm());
    EXPECT_NEAR((c.moments - 3.0 * a.moments).norm(), 0.0, 1e-12 * c.moments.norm());
}

class Picard : public ::testing::TestWithParam<int> {};

TEST_P(Picard, ContractsInsideTheSmallDataBall)
{
    const int dim = GetParam();
    const auto tc = context(dim, "two-phase");
    const TransmissionConstants k = compute_constants(*tc, 1.0, 8, 1);
    TransmissionData d = make_transmission_data(*tc, "random", 5);
    const double s = 0.5 * k.zeta / tc->data_norm(d);
    d.f_plus.moments *= s;
    d.f_minus.moments *= s;
    d.h.values *= s;
    d.g = density_from_moments(tc->spaces(), d.g.moments * s);
    PicardOptions po;
    po.lambda = 1.0;
    po.check_backends = true;
    const NavierStokesResult r = solve_navier_stokes(*tc, d, k, po);
    EXPECT_TRUE(r.state.converged);
    EXPECT_FALSE(r.state.blew_up);
    EXPECT_TRUE(r.state.warnings.empty());
    for (double q : r.state.ratios) EXPECT_LE(q, 0.5);
    EXPECT_LE(r.state.iterate_norm, k.eta);
    EXPECT_LT(r.state.fixed_point_residual, 1e-8);
    EXPECT_LT(r.state.nonlinear_residual, 1e-8);
    EXPECT_LT(r.state.backend_discrepancy, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Dims, Picard, ::testing::Values(2, 3));

TEST(PicardOptionsTest, LinearCaseTakesOneStepAndWarnsOnLargeData)
{
    const auto tc = context(2, "isotropic");
    const TransmissionData d = make_transmission_data(*tc, "smooth", 1);
    const TransmissionConstants k0 = compute_constants(*tc, 0.0, 8, 1);
    PicardOptions po;
    const NavierStokesResult r = solve_navier_stokes(*tc, d, k0, po);
    EXPECT_EQ(r.state.iterations, 1);
    EXPECT_TRUE(r.state.converged);
    const TransmissionSolution lin = solve_linear_transmission(*tc, d);
    EXPECT_LT((r.solution.field.u - lin.field.u).norm(), 1e-12 * lin.field.u.norm());

    const TransmissionConstants k = compute_constants(*tc, 1.0, 8, 1);
    po.lambda = 1.0;
    po.max_iter = 3;
    const NavierStokesResult big = solve_navier_stokes(*tc, scaled(d, 100.0 * k.zeta / tc->data_norm(d)), k, po);
    EXPECT_FALSE(big.state.warnings.empty());
    po.max_iter = 0;
    EXPECT_THROW((void)solve_navier_stokes(*tc, d, k, po), Error);
}

TEST(Transmission, BackendNames)
{
    EXPECT_EQ(parse_transmission_backend("representation"), TransmissionBackend::representation);
    EXPECT_EQ(backend_name(TransmissionBackend::monolithic), "monolithic");
    EXPECT_THROW((void)parse_transmission_backend("other"), Error);
}
