#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace anisostokes;

namespace {

RunConfig small_run(int dim, const std::string& kind = "isotropic")
{
    RunConfig c;
    c.mesh = fixtures::small_spec(dim);
    c.tensor_kind = kind;
    c.verify_samples = 3;
    return c;
}

const Check* find_check(const VerificationReport& r, const std::string& name)
{
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

} // namespace

TEST(ConvergenceRate, RecoversAnExactPowerLaw)
{
    const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
    std::vector<double> e;
    for (double x : h) e.push_back(3.0 * std::pow(x, 1.75));
    EXPECT_NEAR(convergence_rate(h, e), 1.75, 1e-12);
    EXPECT_THROW((void)convergence_rate({1.0}, {1.0}), Error);
}

class Bump : public ::testing::TestWithParam<int> {};

TEST_P(Bump, GradientMatchesFiniteDifferencesAndIsDivergenceFree)
{
    const int dim = GetParam();
    const Point c(0.5, 0.5, dim == 3 ? 0.5 : 0.0);
    const ManufacturedSolution m = compact_bump_solution(dim, c, 0.8);
    const double eps = 1e-6;
    for (const Point x : {Point(0.3, 0.6, dim == 3 ? 0.4 : 0.0), Point(0.9, 0.2, dim == 3 ? 0.7 : 0.0)}) {
        const Mat G = m.grad_u(x);
        double div = 0.0;
        for (int b = 0; b < dim; ++b) {
            Point e = Point::Zero();
            e(b) = eps;
            const Point d = (m.u(x + e) - m.u(x - e)) / (2.0 * eps);
            for (int j = 0; j < dim; ++j) EXPECT_NEAR(G(j, b), d(j), 1e-6);
            div += G(b, b);
        }
        EXPECT_NEAR(div, 0.0, 1e-12);
    }
    const Point far(0.5 + 0.81, 0.5, c.z());
    EXPECT_EQ(m.u(far).norm(), 0.0);
    EXPECT_EQ(m.pi(far), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Dims, Bump, ::testing::Values(2, 3));

TEST(VelocityError, ExactInterpolantOfALinearFieldHasNoError)
{
    const auto sp = fixtures::spaces(2);
    Vec u = Vec::Zero(sp->num_velocity());
    const auto& X = sp->mesh().vertices();
    for (int v = 0; v < sp->mesh().num_vertices(); ++v) {
        u(2 * v) = X[static_cast<std::size_t>(v)].y();
        u(2 * v + 1) = 2.0;
    }
    const ErrorNorms e = velocity_error(
        *sp, u, [](const Point& x) { return Point(x.y(), 2.0, 0.0); },
        [](const Point&) {
            Mat G = Mat::Zero(2, 2);
            G(0, 1) = 1.0;
            return G;
        });
    EXPECT_LT(e.l2, 1e-12);
    EXPECT_LT(e.h1_semi, 1e-12);
}

TEST(Manufactured, TwoDimensionalRunIsAccurate)
{
    RunConfig c = small_run(2);
    c.mesh.radius = 2.0;
    const ManufacturedRun r = run_manufactured_stokes(c);
    EXPECT_LT(r.report.relative_residual, 1e-10);
    EXPECT_GT(r.error.l2, 0.0);
    c.mesh.level = 1;
    const ManufacturedRun fine = run_manufactured_stokes(c);
    EXPECT_NEAR(fine.h, 0.5 * r.h, 1e-12);
    EXPECT_LT(fine.error.l2, 0.5 * r.error.l2);
    EXPECT_LT(fine.error.h1_semi, r.error.h1_semi);
}

TEST(TripleNorm, VanishesOnlyOnZero)
{
    const auto sp = fixtures::spaces(2);
    FieldPair z = FieldPair::zero(*sp);
    EXPECT_EQ(triple_norm(*sp, z), 0.0);
    z.u = project_outer_mean(*sp, fixtures::random_vector(sp->num_velocity(), 1));
    EXPECT_GT(triple_norm(*sp, z), 0.0);
}

TEST(NormEquivalence, RatiosAreBoundedAwayFromZeroAndInfinity)
{
    const auto sp = fixtures::spaces(2);
    const NormEquivalenceReport r = norm_equivalence_probe(*sp, 32, 5);
    EXPECT_EQ(r.samples, 32);
    EXPECT_TRUE(r.zero_field_zero);
    EXPECT_EQ(r.definiteness_failures, 0);
    EXPECT_GT(r.min_ratio, 0.1);
    EXPECT_LT(r.max_ratio, 10.0);
    EXPECT_GT(r.constant_inside_ratio, 0.0);
    EXPECT_THROW((void)norm_equivalence_probe(*sp, 4, 5), Error);
}

TEST(ProjectOuterMean, SatisfiesTheConstraintRows)
{
    const auto sp = fixtures::spaces(3);
    const SaddleSystem sys = assemble_saddle_system(sp, make_isotropic_constant(3, 1.0));
    const Vec u = project_outer_mean(*sp, fixtures::random_vector(sp->num_velocity(), 3) + Vec::Constant(sp->num_velocity(), 2.0));
    EXPECT_LT((sys.C * u).cwiseAbs().maxCoeff(), 1e-13 * u.norm());
    const Vec again = project_outer_mean(*sp, u);
    EXPECT_LT((again - u).norm(), 1e-12 * u.norm());
}

TEST(Report, StatusNamesAndCsv)
{
    EXPECT_EQ(status_name(CheckStatus::pass), "pass");
    EXPECT_EQ(status_name(CheckStatus::fail), "fail");
    EXPECT_EQ(status_name(CheckStatus::error), "error");
    EXPECT_EQ(status_name(CheckStatus::skipped), "skipped");
    VerificationReport r;
    r.checks.push_back({"alpha", 1e-12, 1e-10, CheckStatus::pass, ""});
    r.checks.push_back({"beta", 0.0, 0.0, CheckStatus::skipped, "n/a"});
    EXPECT_TRUE(r.pass());
    std::ostringstream os;
    r.write_csv(os);
    const std::string csv = os.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,status,measured,tolerance,detail");
    EXPECT_NE(csv.find("alpha,pass,"), std::string::npos);
    r.checks.push_back({"gamma", 1.0, 0.5, CheckStatus::fail, ""});
    EXPECT_FALSE(r.pass());
}

TEST(Suite, PassesOnASmallTwoDimensionalMesh)
{
    const VerificationReport r = run_invariant_suite(small_run(2, "two-phase"));
    for (const auto& c : r.checks)
        EXPECT_NE(c.status, CheckStatus::fail) << c.name << " " << c.measured << " " << c.detail;
    for (const auto& c : r.checks) EXPECT_NE(c.status, CheckStatus::error) << c.name << " " << c.detail;
    EXPECT_TRUE(r.pass());
    EXPECT_TRUE(std::is_sorted(r.checks.begin(), r.checks.end(),
                               [](const Check& a, const Check& b) { return a.name < b.name; }));
    ASSERT_NE(find_check(r, "inf_sup"), nullptr);
    EXPECT_EQ(find_check(r, "inf_sup")->status, CheckStatus::pass);
}

TEST(Suite, DirichletSkewTensorPasses)
{
    RunConfig c = small_run(2, "skew");
    c.outer_bc = OuterBc::dirichlet;
    c.verify_picard = false;
    const VerificationReport r = run_invariant_suite(c);
    for (const auto& k : r.checks) EXPECT_NE(k.status, CheckStatus::fail) << k.name << " " << k.measured;
    ASSERT_NE(find_check(r, "picard_convergence"), nullptr);
    EXPECT_EQ(find_check(r, "picard_convergence")->status, CheckStatus::skipped);
}

TEST(Suite, IndefiniteTensorIsCaught)
{
    RunConfig c = small_run(2, "indefinite");
    c.verify_picard = false;
    const VerificationReport r = run_invariant_suite(c);
    EXPECT_FALSE(r.pass());
    ASSERT_NE(find_check(r, "ellipticity"), nullptr);
    EXPECT_EQ(find_check(r, "ellipticity")->status, CheckStatus::fail);
}
