#include "anisostokes/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace anisostokes {

void gauss_jacobi_unit(int points, double alpha, std::vector<double>& nodes, std::vector<double>& weights)
{
    ANISO_REQUIRE(points >= 1, invalid_argument, "gauss_jacobi_unit: points must be >= 1");
    const double a = alpha;
    const double b = 0.0;
    // Golub-Welsch on the Jacobi matrix for (1-x)^a (1+x)^b on [-1,1].
    Mat J = Mat::Zero(points, points);
    for (int k = 0; k < points; ++k) {
        const double s = 2.0 * k + a + b;
        double diag = 0.0;
        if (k == 0) {
            diag = (b - a) / (a + b + 2.0);
        } else {
            diag = (b * b - a * a) / (s * (s + 2.0));
        }
        J(k, k) = diag;
        if (k + 1 < points) {
            const double kk = k + 1.0;
            const double s1 = 2.0 * kk + a + b;
            const double beta = 4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
            J(k, k + 1) = J(k + 1, k) = std::sqrt(beta);
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(J);
    const double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 2.0);
    nodes.resize(static_cast<std::size_t>(points));
    weights.resize(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        const double x = eig.eigenvalues()(k);
        const double v0 = eig.eigenvectors()(0, k);
        nodes[static_cast<std::size_t>(k)] = 0.5 * (1.0 + x);
        weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0 * std::pow(2.0, -a - 1.0);
    }
}

namespace {

SimplexRule build_rule(int dim, int points)
{
    SimplexRule rule;
    rule.dim = dim;
    std::vector<std::vector<double>> x(static_cast<std::size_t>(dim));
    std::vector<std::vector<double>> w(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) {
        gauss_jacobi_unit(points, static_cast<double>(dim - 1 - d), x[static_cast<std::size_t>(d)], w[static_cast<std::size_t>(d)]);
    }
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
        std::array<double, 4> bary{};
        double remaining = 1.0;
        double weight = 1.0;
        double sum = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double t = x[static_cast<std::size_t>(d)][static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
            const double xi = remaining * t;
            bary[static_cast<std::size_t>(d + 1)] = xi;
            sum += xi;
            weight *= w[static_cast<std::size_t>(d)][static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
            remaining *= (1.0 - t);
        }
        bary[0] = 1.0 - sum;
        rule.bary.push_back(bary);
        rule.weights.push_back(weight);

        int d = dim - 1;
        while (d >= 0) {
            if (++idx[static_cast<std::size_t>(d)] < points) {
                break;
            }
            idx[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        if (d < 0) {
            break;
        }
    }
    return rule;
}

} // namespace

const SimplexRule& simplex_rule(int dim, int points)
{
    ANISO_REQUIRE(dim >= 1 && dim <= 3, invalid_argument, "simplex_rule: dim must be 1, 2 or 3");
    static std::mutex mutex;
    static std::map<std::pair<int, int>, SimplexRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find({dim, points});
    if (it == cache.end()) {
        it = cache.emplace(std::make_pair(dim, points), build_rule(dim, points)).first;
    }
    return it->second;
}

double barycentric_monomial_integral(int dim, const std::array<int, 4>& exponents, double volume)
{
    double num = std::tgamma(dim + 1.0);
    int total = 0;
    for (int i = 0; i <= dim; ++i) {
        num *= std::tgamma(exponents[static_cast<std::size_t>(i)] + 1.0);
        total += exponents[static_cast<std::size_t>(i)];
    }
    return volume * num / std::tgamma(dim + total + 1.0);
}

} // namespace anisostokes
