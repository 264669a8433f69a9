#include "support.hpp"

#include <gtest/gtest.h>

using namespace anisostokes;

namespace {

/// beta^2 = min eig of B X^{-1} B^T relative to M, all dense, over the kept velocity DOFs.
double dense_infsup(const SaddleSystem& sys, bool deflate)
{
    const FunctionSpaces& sp = *sys.spaces;
    const Mat X = Mat(assemble_velocity_h1(sp, true));
    const Mat B = Mat(sys.B);
    const Mat M = Mat(assemble_pressure_mass(sp));
    std::vector<int> keep;
    for (int i = 0; i < sys.num_velocity(); ++i) {
        const bool fixed = !sys.fixed.empty() && sys.fixed[static_cast<std::size_t>(i)];
        if (!fixed && !(sys.equal_order && sp.is_bubble_dof(i))) keep.push_back(i);
    }
    const Mat Xk = X(keep, keep);
    const Mat Bk = B(Eigen::all, keep);
    const Mat S = Bk * Xk.llt().solve(Bk.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(S, M);
    const Vec ev = eig.eigenvalues();
    return std::sqrt(std::max(0.0, ev(deflate ? 1 : 0)));
}

} // namespace

TEST(SparseLu, SolvesAndTransposeSolves)
{
    const int n = 40;
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 4.0 + i % 3);
        if (i + 1 < n) t.emplace_back(i, i + 1, -1.0);
        if (i >= 2) t.emplace_back(i, i - 2, 0.5);
    }
    SpMat K(n, n);
    K.setFromTriplets(t.begin(), t.end());
    const SparseLu lu(K);
    const Vec b = fixtures::random_vector(n, 3);
    EXPECT_NEAR((K * lu.solve(b) - b).norm(), 0.0, 1e-13);
    EXPECT_NEAR((SpMat(K.transpose()) * lu.solve(b, true) - b).norm(), 0.0, 1e-13);
    EXPECT_GT(lu.reciprocal_condition(), 0.0);
}

TEST(SparseLu, SingularMatrixIsASolverError)
{
    SpMat K(3, 3);
    K.insert(0, 0) = 1.0;
    K.insert(1, 1) = 1.0;
    try {
        const SparseLu lu(K);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::solver);
    }
}

class SaddleSolve : public ::testing::TestWithParam<std::tuple<int, OuterBc>> {};

TEST_P(SaddleSolve, DirectAndIterativeAgree)
{
    const auto [dim, bc] = GetParam();
    const auto sp = fixtures::spaces(dim);
    SaddleSystem sys = assemble_saddle_system(sp, make_isotropic_two_phase(dim, 2.0, 1.0), bc);
    sys.F = assemble_volume_load(*sp, [](const Point& x, Side) { return Point(std::sin(x.y()), x.x() * x.x(), 0.3); },
                                 Side::plus)
                .moments;
    SolverOptions opt;
    opt.compute_stability = true;
    const SaddleReport d = solve_saddle(sys, opt);
    EXPECT_LT(d.relative_residual, 1e-12);
    EXPECT_LT(d.residual_pressure, 1e-12);
    ASSERT_TRUE(d.stability_quotient.has_value());
    EXPECT_GT(*d.stability_quotient, 0.0);

    opt.backend = SolverOptions::Backend::uzawa;
    opt.tol = 1e-11;
    opt.compute_stability = false;
    const SaddleReport u = solve_saddle(sys, opt);
    EXPECT_GT(u.iterations, 0);
    EXPECT_LT((u.solution.u - d.solution.u).norm(), 1e-7 * d.solution.u.norm());
}

INSTANTIATE_TEST_SUITE_P(Cases, SaddleSolve,
                         ::testing::Values(std::make_tuple(2, OuterBc::traction_free),
                                           std::make_tuple(2, OuterBc::dirichlet),
                                           std::make_tuple(3, OuterBc::traction_free)));

TEST(Saddle, FactorizationTransposeSolvesTheTransposedKkt)
{
    const auto sp = fixtures::spaces(2);
    RunConfig cfg;
    cfg.mesh.dim = 2;
    cfg.tensor_kind = "skew";
    const SaddleSystem sys = assemble_saddle_system(sp, make_tensor(cfg));
    const KktFactorization f(sys);
    const SpMat K = sys.kkt_matrix();
    const Vec r = fixtures::random_vector(sys.kkt_size(), 8);
    EXPECT_NEAR((K * f.solve(r) - r).norm(), 0.0, 1e-10 * r.norm());
    EXPECT_NEAR((SpMat(K.transpose()) * f.solve(r, true) - r).norm(), 0.0, 1e-10 * r.norm());
}

TEST(Saddle, TractionFreeMultipliersVanishForBalancedData)
{
    const auto sp = fixtures::spaces(2);
    SaddleSystem sys = assemble_saddle_system(sp, make_isotropic_constant(2, 1.0));
    // a force with zero resultant: (x - 1/2) e_0 on Omega_+
    sys.F = assemble_volume_load(*sp, [](const Point& x, Side) { return Point(x.x() - 0.5, 0.0, 0.0); }, Side::plus)
                .moments;
    const SaddleReport r = solve_saddle(sys);
    EXPECT_NEAR(r.multipliers.norm(), 0.0, 1e-12);
}

class InfSupOracle : public ::testing::TestWithParam<std::tuple<OuterBc, bool>> {};

TEST_P(InfSupOracle, LanczosMatchesDenseEigenvalue)
{
    const auto [bc, equal_order] = GetParam();
    const auto sp = fixtures::spaces(2);
    const SaddleSystem sys = assemble_saddle_system(sp, make_isotropic_constant(2, 1.0), bc, equal_order);
    const double dense = dense_infsup(sys, bc == OuterBc::dirichlet);
    const InfSupReport r = estimate_infsup(sys, 400, 1e-12, 3);
    EXPECT_TRUE(r.converged);
    if (equal_order) {
        EXPECT_LT(r.beta, 1e-6);
        EXPECT_LT(dense, 1e-6);
    } else {
        EXPECT_NEAR(r.beta, dense, 1e-6 * dense);
        EXPECT_GT(r.beta, 0.05);
    }
}

INSTANTIATE_TEST_SUITE_P(Cases, InfSupOracle,
                         ::testing::Values(std::make_tuple(OuterBc::traction_free, false),
                                           std::make_tuple(OuterBc::dirichlet, false),
                                           std::make_tuple(OuterBc::traction_free, true)));

TEST(OperatorNorm, MatchesDenseGeneralizedSingularValue)
{
    const int m = 30, n = 20;
    const Mat T = fixtures::random_vector(m * n, 1).reshaped(m, n);
    Mat Nin = fixtures::random_vector(n * n, 2).reshaped(n, n);
    Nin = Nin * Nin.transpose() + n * Mat::Identity(n, n);
    Mat Nout = fixtures::random_vector(m * m, 3).reshaped(m, m);
    Nout = Nout * Nout.transpose() + Mat::Identity(m, m);
    const OperatorNormReport r = estimate_operator_norm(T, Nin, Nout, 5, 2000, 1e-12);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(T.transpose() * Nout * T, Nin);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, std::sqrt(eig.eigenvalues().maxCoeff()), 1e-6 * r.value);
}

TEST(Gmres, SolvesANonsymmetricSystem)
{
    const int n = 50;
    Mat A = Mat::Identity(n, n) * 3.0 + 0.1 * fixtures::random_vector(n * n, 4).reshaped(n, n);
    const Vec b = fixtures::random_vector(n, 5);
    Vec x = Vec::Zero(n);
    const int it = gmres([&](const Vec& v) { return Vec(A * v); }, [](const Vec& v) { return v; }, b, x, 1e-12, 200);
    EXPECT_GT(it, 0);
    EXPECT_NEAR((A * x - b).norm(), 0.0, 1e-10 * b.norm());
}
