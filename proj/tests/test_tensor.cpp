#include "support.hpp"

#include <gtest/gtest.h>

using namespace anisostokes;

namespace {

std::vector<SamplePoint> samples()
{
    return {{Point(0.5, 0.5, 0.5), Side::plus}, {Point(2.0, -1.0, 0.3), Side::minus}, {Point(1.0, 0.5, 0.5), Side::plus}};
}

RunConfig tensor_config(const std::string& kind, int dim = 3)
{
    RunConfig cfg;
    cfg.mesh.dim = dim;
    cfg.tensor_kind = kind;
    return cfg;
}

} // namespace

TEST(Tensor, IsotropicFormMatrixIsMuIdentity)
{
    const CoeffTensor t = make_isotropic_constant(3, 2.5);
    const Mat a = t.at(Point::Zero(), Side::minus).form_matrix();
    EXPECT_NEAR((a - 2.5 * Mat::Identity(9, 9)).norm(), 0.0, 1e-15);
}

TEST(Tensor, AdjointIsAnInvolution)
{
    const CoeffTensor t = make_tensor(tensor_config("skew"));
    const CoeffTensor tt = adjoint(adjoint(t));
    for (const auto& s : samples()) {
        const Mat a = t.at(s.x, s.side).form_matrix();
        EXPECT_NEAR((a - tt.at(s.x, s.side).form_matrix()).norm(), 0.0, 1e-15);
        EXPECT_NEAR((a.transpose() - adjoint(t).at(s.x, s.side).form_matrix()).norm(), 0.0, 1e-15);
    }
}

TEST(Tensor, SymmetricKindsEqualTheirAdjoint)
{
    for (const char* k : {"isotropic", "two-phase", "diagonal", "symmetric-gradient"}) {
        const CoeffTensor t = make_tensor(tensor_config(k));
        for (const auto& s : samples()) {
            const Mat a = t.at(s.x, s.side).form_matrix();
            EXPECT_NEAR((a - a.transpose()).norm(), 0.0, 1e-15) << k;
        }
    }
}

TEST(Tensor, ContractMatchesFormMatrix)
{
    const CoeffTensor t = make_tensor(tensor_config("skew"));
    const Mat G = fixtures::random_vector(9, 3).reshaped(3, 3);
    const Mat H = fixtures::random_vector(9, 4).reshaped(3, 3);
    const Point x(0.5, 0.5, 0.5);
    const TensorValue a = t.at(x, Side::plus);
    // a_ij^{ab} G(j,b) H(i,a)
    double direct = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int al = 0; al < 3; ++al)
                for (int be = 0; be < 3; ++be) direct += a(i, j, al, be) * G(j, be) * H(i, al);
    EXPECT_NEAR(flux_pairing(contract(a, G), H), direct, 1e-13);
}

TEST(Tensor, EllipticityPassesForElasticKinds)
{
    for (const char* k : {"isotropic", "two-phase", "diagonal", "skew"}) {
        const EllipticityReport r = check_strong_ellipticity(make_tensor(tensor_config(k)), samples(), 50, 3);
        EXPECT_TRUE(r.pass) << k << " worst " << r.worst_quotient;
        EXPECT_GE(r.worst_quotient, r.required - 1e-12);
    }
}

TEST(Tensor, SkewCouplingLeavesQuadraticFormUnchanged)
{
    RunConfig a = tensor_config("skew");
    RunConfig b = a;
    b.skew = 0.0;
    const CoeffTensor ta = make_tensor(a);
    const CoeffTensor tb = make_tensor(b);
    for (const auto& s : samples()) {
        const Mat fa = ta.at(s.x, s.side).form_matrix();
        const Mat fb = tb.at(s.x, s.side).form_matrix();
        EXPECT_NEAR((0.5 * (fa + fa.transpose()) - fb).norm(), 0.0, 1e-15);
        EXPECT_GT((fa - fa.transpose()).norm(), 0.1);
    }
}

TEST(Tensor, IndefiniteKindFailsEllipticity)
{
    const EllipticityReport r = check_strong_ellipticity(make_tensor(tensor_config("indefinite")), samples(), 20, 1);
    EXPECT_FALSE(r.pass);
    EXPECT_LT(r.worst_quotient, 0.0);
    EXPECT_EQ(r.witness_side, Side::plus);
}

TEST(Tensor, SymmetricGradientDegeneratesOnSkewMatrices)
{
    const EllipticityReport r = check_strong_ellipticity(make_tensor(tensor_config("symmetric-gradient")), samples(), 20, 1);
    EXPECT_FALSE(r.pass);
    EXPECT_NEAR(r.worst_quotient, 0.0, 1e-12);
}

TEST(Tensor, RejectsNonpositiveViscosity)
{
    EXPECT_THROW((void)make_isotropic_constant(3, 0.0), Error);
    EXPECT_THROW((void)make_isotropic_two_phase(3, 1.0, -1.0), Error);
    EXPECT_THROW((void)make_diagonal_anisotropic(2, {1.0, 0.0}), Error);
}

TEST(Tensor, TwoPhaseResolvesSides)
{
    const CoeffTensor t = make_isotropic_two_phase(2, 3.0, 0.5);
    const Point x(1.0, 0.5, 0.0);
    EXPECT_DOUBLE_EQ(t.at(x, Side::plus)(0, 0, 0, 0), 3.0);
    EXPECT_DOUBLE_EQ(t.at(x, Side::minus)(0, 0, 0, 0), 0.5);
}
