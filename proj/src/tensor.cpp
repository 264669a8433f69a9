#include "anisostokes/tensor.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace anisostokes {

Mat TensorValue::form_matrix() const
{
    const int n = dim_;
    Mat M(n * n, n * n);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < n; ++a) {
            for (int j = 0; j < n; ++j) {
                for (int b = 0; b < n; ++b) {
                    M(i * n + a, j * n + b) = (*this)(i, j, a, b);
                }
            }
        }
    }
    return M;
}

double TensorValue::max_abs() const noexcept
{
    double m = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int a = 0; a < dim_; ++a)
                for (int b = 0; b < dim_; ++b)
                    m = std::max(m, std::abs((*this)(i, j, a, b)));
    return m;
}

CoeffTensor::CoeffTensor(int dim, TensorField field, double c_bound, TensorKind kind)
    : dim_(dim), field_(std::move(field)), c_bound_(c_bound), kind_(kind)
{
    ANISO_REQUIRE(dim == 2 || dim == 3, invalid_argument, "CoeffTensor: dim must be 2 or 3");
    ANISO_REQUIRE(c_bound_ >= 1.0, invalid_argument, "CoeffTensor: c_bound must be >= 1");
    ANISO_REQUIRE(static_cast<bool>(field_), invalid_argument, "CoeffTensor: empty field");
}

namespace {

TensorValue isotropic_value(int dim, double mu)
{
    TensorValue v(dim);
    for (int i = 0; i < dim; ++i)
        for (int a = 0; a < dim; ++a)
            v(i, i, a, a) = mu;
    return v;
}

} // namespace

CoeffTensor make_isotropic(int dim, ScalarField mu, double mu_lower, double mu_upper,
                           const std::vector<SamplePoint>& samples)
{
    ANISO_REQUIRE(mu_lower > 0.0 && mu_upper > 0.0, invalid_argument, "make_isotropic: bounds must be positive");
    ANISO_REQUIRE(mu_lower <= mu_upper, invalid_argument, "make_isotropic: mu_lower > mu_upper");
    ANISO_REQUIRE(static_cast<bool>(mu), invalid_argument, "make_isotropic: empty mu field");
    for (const auto& s : samples) {
        const double m = mu(s.x, s.side);
        ANISO_REQUIRE(m >= mu_lower && m <= mu_upper, invalid_argument,
                      "make_isotropic: mu outside [mu_lower, mu_upper] at a sample point");
    }
    const double c = std::max({1.0, mu_upper, 1.0 / mu_lower});
    auto field = [dim, mu = std::move(mu), mu_lower, mu_upper](const Point& x, Side side) {
        const double m = mu(x, side);
        if (!(m >= mu_lower && m <= mu_upper)) {
            throw Error(ErrorCategory::invalid_argument, "isotropic tensor: mu outside its declared bounds");
        }
        return isotropic_value(dim, m);
    };
    CoeffTensor t(dim, std::move(field), c, TensorKind::isotropic);
    t.set_label("isotropic");
    return t;
}

CoeffTensor make_isotropic_constant(int dim, double mu)
{
    auto t = make_isotropic(dim, [mu](const Point&, Side) { return mu; }, mu, mu);
    std::ostringstream os;
    os << "isotropic-constant(" << mu << ")";
    t.set_label(os.str());
    return t;
}

CoeffTensor make_isotropic_two_phase(int dim, double mu_plus, double mu_minus)
{
    auto t = make_isotropic(
        dim, [mu_plus, mu_minus](const Point&, Side s) { return s == Side::plus ? mu_plus : mu_minus; },
        std::min(mu_plus, mu_minus), std::max(mu_plus, mu_minus));
    std::ostringstream os;
    os << "isotropic-two-phase(" << mu_plus << "," << mu_minus << ")";
    t.set_label(os.str());
    return t;
}

CoeffTensor make_diagonal_anisotropic(int dim, const std::vector<double>& weights)
{
    ANISO_REQUIRE(static_cast<int>(weights.size()) == dim, invalid_argument,
                  "make_diagonal_anisotropic: need one weight per direction");
    double lo = weights.front();
    double hi = weights.front();
    for (double w : weights) {
        ANISO_REQUIRE(w > 0.0, invalid_argument, "make_diagonal_anisotropic: weights must be positive");
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    TensorValue v(dim);
    for (int i = 0; i < dim; ++i)
        for (int a = 0; a < dim; ++a)
            v(i, i, a, a) = weights[static_cast<std::size_t>(a)];
    CoeffTensor t(dim, [v](const Point&, Side) { return v; }, std::max({1.0, hi, 1.0 / lo}), TensorKind::general);
    t.set_label("diagonal-anisotropic");
    return t;
}

CoeffTensor make_symmetric_gradient(int dim, double mu)
{
    ANISO_REQUIRE(mu > 0.0, invalid_argument, "make_symmetric_gradient: mu must be positive");
    TensorValue v(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b)
                    v(i, j, a, b) = mu * (((a == j && b == i) ? 1.0 : 0.0) + ((a == b && i == j) ? 1.0 : 0.0));
    CoeffTensor t(dim, [v](const Point&, Side) { return v; }, std::max({1.0, 2.0 * mu, 1.0 / mu}), TensorKind::general);
    t.set_label("symmetric-gradient");
    return t;
}

CoeffTensor make_general(int dim, TensorField field, double c_bound)
{
    CoeffTensor t(dim, std::move(field), c_bound, TensorKind::general);
    t.set_label("general");
    return t;
}

CoeffTensor adjoint(const CoeffTensor& t)
{
    const int dim = t.dim();
    auto field = [t, dim](const Point& x, Side side) {
        const TensorValue a = t.at(x, side);
        TensorValue r(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                for (int al = 0; al < dim; ++al)
                    for (int be = 0; be < dim; ++be)
                        r(i, j, al, be) = a(j, i, be, al);
        return r;
    };
    CoeffTensor r(dim, std::move(field), t.c_bound(), t.kind());
    r.set_label("adjoint(" + t.label() + ")");
    return r;
}

EllipticityReport check_strong_ellipticity(const CoeffTensor& t, const std::vector<SamplePoint>& samples,
                                           int trial_count, std::uint64_t rng_seed, double tolerance)
{
    ANISO_REQUIRE(!samples.empty(), invalid_argument, "check_strong_ellipticity: empty sample set");
    ANISO_REQUIRE(trial_count >= 1, invalid_argument, "check_strong_ellipticity: trial_count must be >= 1");
    const int n = t.dim();
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    EllipticityReport report;
    report.required = 1.0 / t.c_bound();
    report.worst_quotient = std::numeric_limits<double>::infinity();

    auto consider = [&](const SamplePoint& s, const Mat& M, const Vec& xi) {
        const double q = xi.dot(M * xi) / xi.squaredNorm();
        if (q < report.worst_quotient) {
            report.worst_quotient = q;
            report.witness_x = s.x;
            report.witness_side = s.side;
            report.witness_xi = Eigen::Map<const Mat>(xi.data(), n, n).transpose(); // (i, alpha)
        }
    };

    for (const auto& s : samples) {
        const TensorValue a = t.at(s.x, s.side);
        report.max_entry = std::max(report.max_entry, a.max_abs());
        if (a.max_abs() > t.c_bound() * (1.0 + tolerance)) {
            report.bounded = false;
        }
        const Mat M = a.form_matrix();
        for (int k = 0; k < trial_count; ++k) {
            Vec xi(n * n);
            for (int e = 0; e < n * n; ++e) xi(e) = normal(rng);
            xi /= xi.norm();
            consider(s, M, xi);
        }
        // The exact minimiser of the sampled form is the lowest eigenvector of its symmetric part.
        const Mat Msym = 0.5 * (M + M.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> eig(Msym);
        consider(s, M, eig.eigenvectors().col(0));
    }
    report.pass = report.bounded && report.worst_quotient >= report.required - tolerance;
    return report;
}

Mat contract(const TensorValue& a, const Mat& G)
{
    const int n = a.dim();
    Mat R = Mat::Zero(n, n);
    for (int al = 0; al < n; ++al)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                for (int be = 0; be < n; ++be)
                    s += a(i, j, al, be) * G(j, be);
            R(al, i) = s;
        }
    return R;
}

Mat contract(const CoeffTensor& t, const Point& x, Side side, const Mat& G)
{
    return contract(t.at(x, side), G);
}

double flux_pairing(const Mat& R, const Mat& H)
{
    return (R.array() * H.transpose().array()).sum();
}

} // namespace anisostokes
