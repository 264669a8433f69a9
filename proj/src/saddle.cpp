#include "anisostokes/saddle.hpp"

#include <umfpack.h>

#include <chrono>
#include <cmath>
#include <random>

namespace anisostokes {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

SparseLu::SparseLu(const SpMat& K) : n_(static_cast<int>(K.rows()))
{
    ANISO_REQUIRE(K.rows() == K.cols(), invalid_argument, "SparseLu: matrix must be square");
    SpMat C = K;
    C.makeCompressed();
    Ap_.assign(C.outerIndexPtr(), C.outerIndexPtr() + n_ + 1);
    Ai_.assign(C.innerIndexPtr(), C.innerIndexPtr() + C.nonZeros());
    Ax_.assign(C.valuePtr(), C.valuePtr() + C.nonZeros());
    if (n_ == 0) return;

    double control[UMFPACK_CONTROL];
    double info[UMFPACK_INFO];
    umfpack_di_defaults(control);
    control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC; control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
    void* symbolic = nullptr;
    int status = umfpack_di_symbolic(n_, n_, Ap_.data(), Ai_.data(), Ax_.data(), &symbolic, control, info);
    if (status == UMFPACK_ERROR_out_of_memory) throw Error(ErrorCategory::resource, "SparseLu: out of memory (symbolic)");
    ANISO_REQUIRE(status == UMFPACK_OK, solver, "SparseLu: symbolic analysis failed");
    status = umfpack_di_numeric(Ap_.data(), Ai_.data(), Ax_.data(), symbolic, &numeric_, control, info);
    umfpack_di_free_symbolic(&symbolic);
    if (status == UMFPACK_ERROR_out_of_memory) throw Error(ErrorCategory::resource, "SparseLu: out of memory (numeric)");
    if (status == UMFPACK_WARNING_singular_matrix) {
        umfpack_di_free_numeric(&numeric_);
        throw Error(ErrorCategory::solver, "SparseLu: matrix singular after boundary conditions (nullspace suspected)");
    }
    ANISO_REQUIRE(status == UMFPACK_OK, solver, "SparseLu: numeric factorization failed");
    lu_nonzeros_ = info[UMFPACK_LNZ] + info[UMFPACK_UNZ];
    rcond_ = info[UMFPACK_RCOND];
}

SparseLu::~SparseLu()
{
    if (numeric_ != nullptr) umfpack_di_free_numeric(&numeric_);
}

Vec SparseLu::solve(const Vec& b, bool transpose) const
{
    ANISO_REQUIRE(b.size() == n_, invalid_argument, "SparseLu::solve: size mismatch");
    Vec x = Vec::Zero(n_);
    if (n_ == 0) return x;
    double control[UMFPACK_CONTROL];
    double info[UMFPACK_INFO];
    umfpack_di_defaults(control);
    const int status = umfpack_di_solve(transpose ? UMFPACK_At : UMFPACK_A, Ap_.data(), Ai_.data(), Ax_.data(), x.data(),
                                        b.data(), numeric_, control, info);
    ANISO_REQUIRE(status == UMFPACK_OK, solver, "SparseLu::solve failed");
    return x;
}

CondensedSolver::CondensedSolver(const SpMat& K, const std::vector<char>& eliminated, int bubble_begin, int bubble_end,
                                 int bubble_block)
    : n_(static_cast<int>(K.rows()))
{
    ANISO_REQUIRE(K.rows() == K.cols(), invalid_argument, "CondensedSolver: matrix must be square");
    ANISO_REQUIRE(bubble_block >= 1, invalid_argument, "CondensedSolver: bubble block must be >= 1");
    auto is_eliminated = [&](int i) {
        return static_cast<std::size_t>(i) < eliminated.size() && eliminated[static_cast<std::size_t>(i)] != 0;
    };
    std::vector<int> reduced_of(static_cast<std::size_t>(n_), -1);
    std::vector<int> block_of(static_cast<std::size_t>(n_), -1);
    std::vector<int> local_of(static_cast<std::size_t>(n_), -1);
    std::vector<int> block_index((bubble_end - bubble_begin) / bubble_block + 1, -1);
    for (int i = 0; i < n_; ++i) {
        if (is_eliminated(i)) continue;
        if (i >= bubble_begin && i < bubble_end) {
            const int id = (i - bubble_begin) / bubble_block;
            if (block_index[static_cast<std::size_t>(id)] < 0) {
                block_index[static_cast<std::size_t>(id)] = static_cast<int>(blocks_.size());
                blocks_.emplace_back();
            }
            Block& b = blocks_[static_cast<std::size_t>(block_index[static_cast<std::size_t>(id)])];
            block_of[static_cast<std::size_t>(i)] = block_index[static_cast<std::size_t>(id)];
            local_of[static_cast<std::size_t>(i)] = static_cast<int>(b.dofs.size());
            b.dofs.push_back(i);
        } else {
            reduced_of[static_cast<std::size_t>(i)] = static_cast<int>(reduced_.size());
            reduced_.push_back(i);
        }
    }

    std::vector<Mat> kbb(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto m = static_cast<Eigen::Index>(blocks_[b].dofs.size());
        kbb[b] = Mat::Zero(m, m);
    }
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(K.nonZeros()));
    for (int j = 0; j < n_; ++j) {
        if (is_eliminated(j)) continue;
        const int rj = reduced_of[static_cast<std::size_t>(j)];
        const int bj = block_of[static_cast<std::size_t>(j)];
        for (SpMat::InnerIterator it(K, j); it; ++it) {
            const int i = static_cast<int>(it.row());
            if (is_eliminated(i) || it.value() == 0.0) continue;
            const int ri = reduced_of[static_cast<std::size_t>(i)];
            const int bi = block_of[static_cast<std::size_t>(i)];
            if (ri >= 0 && rj >= 0) {
                trip.emplace_back(ri, rj, it.value());
            } else if (bi >= 0 && bj >= 0) {
                ANISO_REQUIRE(bi == bj, invalid_argument, "CondensedSolver: bubble unknowns couple across cells");
                kbb[static_cast<std::size_t>(bi)](local_of[static_cast<std::size_t>(i)], local_of[static_cast<std::size_t>(j)]) = it.value();
            } else if (ri >= 0) {
                blocks_[static_cast<std::size_t>(bj)].col.emplace_back(ri, local_of[static_cast<std::size_t>(j)], it.value());
            } else {
                blocks_[static_cast<std::size_t>(bi)].row.emplace_back(local_of[static_cast<std::size_t>(i)], rj, it.value());
            }
        }
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        Block& blk = blocks_[b];
        Eigen::FullPivLU<Mat> lu(kbb[b]);
        ANISO_REQUIRE(lu.isInvertible(), solver, "CondensedSolver: singular bubble block");
        blk.inv = lu.inverse();
        for (const auto& [ri, p, a] : blk.col)
            for (const auto& [q, cj, c] : blk.row) trip.emplace_back(ri, cj, -a * blk.inv(p, q) * c);
    }
    const auto nr = static_cast<Eigen::Index>(reduced_.size());
    SpMat S(nr, nr);
    S.setFromTriplets(trip.begin(), trip.end());
    trip.clear();
    trip.shrink_to_fit();
    lu_ = std::make_unique<SparseLu>(S);
}

Vec CondensedSolver::solve(const Vec& rhs, bool transpose) const
{
    ANISO_REQUIRE(rhs.size() == n_, invalid_argument, "CondensedSolver::solve: size mismatch");
    const auto nr = static_cast<Eigen::Index>(reduced_.size());
    Vec rr(nr);
    for (Eigen::Index k = 0; k < nr; ++k) rr(k) = rhs(reduced_[static_cast<std::size_t>(k)]);
    std::vector<Vec> yb(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Block& blk = blocks_[b];
        Vec r(static_cast<Eigen::Index>(blk.dofs.size()));
        for (std::size_t k = 0; k < blk.dofs.size(); ++k) r(static_cast<Eigen::Index>(k)) = rhs(blk.dofs[k]);
        yb[b] = transpose ? Vec(blk.inv.transpose() * r) : Vec(blk.inv * r);
        if (transpose) {
            for (const auto& [q, cj, c] : blk.row) rr(cj) -= c * yb[b](q);
        } else {
            for (const auto& [ri, p, a] : blk.col) rr(ri) -= a * yb[b](p);
        }
    }
    const Vec xr = lu_->solve(rr, transpose);
    Vec x = Vec::Zero(n_);
    for (Eigen::Index k = 0; k < nr; ++k) x(reduced_[static_cast<std::size_t>(k)]) = xr(k);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Block& blk = blocks_[b];
        Vec t(static_cast<Eigen::Index>(blk.dofs.size()));
        for (std::size_t k = 0; k < blk.dofs.size(); ++k) t(static_cast<Eigen::Index>(k)) = rhs(blk.dofs[k]);
        if (transpose) {
            for (const auto& [ri, p, a] : blk.col) t(p) -= a * xr(ri);
            t = blk.inv.transpose() * t;
        } else {
            for (const auto& [q, cj, c] : blk.row) t(q) -= c * xr(cj);
            t = blk.inv * t;
        }
        for (std::size_t k = 0; k < blk.dofs.size(); ++k) x(blk.dofs[k]) = t(static_cast<Eigen::Index>(k));
    }
    return x;
}

SolverOptions::Backend parse_backend(const std::string& name)
{
    if (name == "direct") return SolverOptions::Backend::direct;
    if (name == "uzawa") return SolverOptions::Backend::uzawa;
    throw Error(ErrorCategory::invalid_argument, "unknown solver backend '" + name + "'");
}

namespace {

std::vector<char> kkt_eliminated(const SaddleSystem& sys)
{
    std::vector<char> e(static_cast<std::size_t>(sys.kkt_size()), 0);
    std::copy(sys.fixed.begin(), sys.fixed.end(), e.begin());
    return e;
}

} // namespace

KktFactorization::KktFactorization(const SaddleSystem& sys)
{
    const auto t0 = std::chrono::steady_clock::now();
    const FunctionSpaces& sp = *sys.spaces;
    solver_ = std::make_unique<CondensedSolver>(sys.kkt_matrix(), kkt_eliminated(sys), sp.num_vertex_velocity(),
                                                 sp.num_velocity(), sp.dim());
    factor_seconds_ = seconds_since(t0);
}

Vec KktFactorization::solve(const Vec& rhs, bool transpose) const
{
    return solver_->solve(rhs, transpose);
}

int gmres(const LinearMap& apply, const LinearMap& precondition, const Vec& b, Vec& x, double tol, int max_iter,
          int restart)
{
    const double bnorm = b.norm();
    if (x.size() != b.size()) x = Vec::Zero(b.size());
    if (bnorm == 0.0) {
        x.setZero();
        return 0;
    }
    int total = 0;
    while (total < max_iter) {
        Vec r = b - apply(x);
        double beta = r.norm();
        if (beta <= tol * bnorm) return total;
        const int m = restart;
        Mat V(b.size(), m + 1);
        Mat Z(b.size(), m);
        Mat H = Mat::Zero(m + 1, m);
        Vec cs = Vec::Zero(m);
        Vec sn = Vec::Zero(m);
        Vec g = Vec::Zero(m + 1);
        g(0) = beta;
        V.col(0) = r / beta;
        int k = 0;
        for (; k < m && total < max_iter; ++k, ++total) {
            Z.col(k) = precondition(V.col(k));
            Vec w = apply(Z.col(k));
            for (int i = 0; i <= k; ++i) {
                H(i, k) = w.dot(V.col(i));
                w -= H(i, k) * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) > 0.0) V.col(k + 1) = w / H(k + 1, k);
            for (int i = 0; i < k; ++i) {
                const double t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
                H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
                H(i, k) = t;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            cs(k) = H(k, k) / denom;
            sn(k) = H(k + 1, k) / denom;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            g(k + 1) = -sn(k) * g(k);
            g(k) = cs(k) * g(k);
            if (std::abs(g(k + 1)) <= tol * bnorm) {
                ++k;
                ++total;
                break;
            }
        }
        const Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        x += Z.leftCols(k) * y;
        if (std::abs(g(k)) <= tol * bnorm) {
            if ((b - apply(x)).norm() <= 10.0 * tol * bnorm) return total;
        }
    }
    return -total;
}

namespace {

struct UzawaResult {
    Vec x;
    int iterations = 0;
};

UzawaResult solve_uzawa(const SaddleSystem& sys, const SolverOptions& opt)
{
    const FunctionSpaces& sp = *sys.spaces;
    const int nu = sys.num_velocity();
    const int np = sys.num_pressure();
    const int nc = static_cast<int>(sys.C.rows());
    const int ncp = static_cast<int>(sys.Cp.rows());

    std::vector<Triplet> t;
    for (int k = 0; k < sys.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(sys.A, k); it; ++it) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < sys.C.outerSize(); ++k)
        for (SpMat::InnerIterator it(sys.C, k); it; ++it) {
            t.emplace_back(nu + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
            t.emplace_back(static_cast<int>(it.col()), nu + static_cast<int>(it.row()), it.value());
        }
    SpMat Kv(nu + nc, nu + nc);
    Kv.setFromTriplets(t.begin(), t.end());
    std::vector<char> elim(static_cast<std::size_t>(nu + nc), 0);
    std::copy(sys.fixed.begin(), sys.fixed.end(), elim.begin());
    const CondensedSolver velocity(Kv, elim, sp.num_vertex_velocity(), nu, sp.dim());

    auto mask_fixed = [&](Vec v) {
        for (int i = 0; i < nu; ++i)
            if (sys.fixed[static_cast<std::size_t>(i)] != 0) v(i) = 0.0;
        return v;
    };
    auto velocity_solve = [&](const Vec& f) {
        Vec r = Vec::Zero(nu + nc);
        r.head(nu) = mask_fixed(f);
        return velocity.solve(r);
    };

    const SpMat Bt = sys.B.transpose();
    const SpMat Mp = assemble_pressure_mass(sp);
    const Vec diag = Mp.diagonal();

    const Vec w0 = velocity_solve(sys.F);
    Vec rhs(np + ncp);
    rhs.head(np) = sys.B * w0.head(nu) - sys.G;
    rhs.tail(ncp).setZero();

    auto apply = [&](const Vec& z) {
        const Vec pi = z.head(np);
        const Vec w = velocity_solve(Bt * pi);
        Vec out(np + ncp);
        out.head(np) = sys.B * w.head(nu);
        if (ncp > 0) {
            out.head(np) -= sys.Cp.transpose() * z.tail(ncp);
            out.tail(ncp) = sys.Cp * pi;
        }
        return out;
    };
    auto precondition = [&](const Vec& z) {
        Vec out = z;
        out.head(np) = z.head(np).cwiseQuotient(diag);
        return out;
    };
    Vec z = Vec::Zero(np + ncp);
    const int it = gmres(apply, precondition, rhs, z, std::min(opt.tol, 1e-12), opt.max_iter);
    if (it < 0) throw Error(ErrorCategory::convergence, "solve_saddle: Uzawa/GMRES did not converge");

    const Vec pi = z.head(np);
    const Vec w = velocity_solve(sys.F - Bt * pi);
    Vec x = Vec::Zero(sys.kkt_size());
    x.head(nu) = w.head(nu);
    x.segment(nu, np) = pi;
    x.segment(nu + np, nc) = w.tail(nc);
    if (ncp > 0) x.tail(ncp) = z.tail(ncp);
    return {x, it};
}

} // namespace

SaddleReport solve_saddle(const SaddleSystem& sys, const SolverOptions& options)
{
    const FunctionSpaces& sp = *sys.spaces;
    const int nu = sys.num_velocity();
    const int np = sys.num_pressure();
    const int nc = static_cast<int>(sys.C.rows());
    const int ncp = static_cast<int>(sys.Cp.rows());
    ANISO_REQUIRE(sys.F.allFinite() && sys.G.allFinite(), invalid_argument, "solve_saddle: non-finite data");

    SaddleReport rep;
    Vec x;
    if (options.backend == SolverOptions::Backend::direct) {
        rep.backend = "direct";
        const KktFactorization fac(sys);
        rep.factor_seconds = fac.factor_seconds();
        const auto t0 = std::chrono::steady_clock::now();
        x = fac.solve(sys.kkt_rhs(sys.F, sys.G));
        rep.solve_seconds = seconds_since(t0);
    } else {
        rep.backend = "uzawa";
        const auto t0 = std::chrono::steady_clock::now();
        auto res = solve_uzawa(sys, options);
        x = std::move(res.x);
        rep.iterations = res.iterations;
        rep.solve_seconds = seconds_since(t0);
    }
    rep.solution.u = x.head(nu);
    rep.solution.p = x.segment(nu, np);
    rep.solution.jump = Vec::Zero(sp.num_trace());
    rep.multipliers = x.tail(nc + ncp);

    Vec ru = sys.A * rep.solution.u + sys.B.transpose() * rep.solution.p - sys.F;
    if (nc > 0) ru += sys.C.transpose() * rep.multipliers.head(nc);
    for (int i = 0; i < nu; ++i)
        if (sys.fixed[static_cast<std::size_t>(i)] != 0) ru(i) = 0.0;
    Vec rp = sys.B * rep.solution.u - sys.G;
    if (ncp > 0) rp += sys.Cp.transpose() * rep.multipliers.tail(ncp);
    rep.residual_velocity = ru.norm();
    rep.residual_pressure = rp.norm();
    const double data = std::sqrt(sys.F.squaredNorm() + sys.G.squaredNorm());
    const double res = std::hypot(rep.residual_velocity, rep.residual_pressure);
    rep.relative_residual = data > 0.0 ? res / data : res;

    if (options.compute_stability) {
        const SpMat X = assemble_velocity_h1(sp, true);
        const SpMat M = assemble_pressure_mass(sp);
        const CondensedSolver xs(X, sys.fixed, sp.num_vertex_velocity(), nu, sp.dim());
        Vec F = sys.F;
        for (int i = 0; i < nu; ++i)
            if (sys.fixed[static_cast<std::size_t>(i)] != 0) F(i) = 0.0;
        Eigen::SimplicialLDLT<SpMat> ms(M);
        const double fu = std::sqrt(std::max(0.0, F.dot(xs.solve(F))));
        const double fp = std::sqrt(std::max(0.0, sys.G.dot(ms.solve(sys.G))));
        const double su = std::sqrt(std::max(0.0, rep.solution.u.dot(X * rep.solution.u)));
        const double spn = std::sqrt(std::max(0.0, rep.solution.p.dot(M * rep.solution.p)));
        if (fu + fp > 0.0) rep.stability_quotient = (su + spn) / (fu + fp);
    }
    if (options.compute_infsup) rep.beta = estimate_infsup(sys).beta;
    return rep;
}

InfSupReport estimate_infsup(const SaddleSystem& sys, int max_iter, double tol, std::uint64_t seed)
{
    const FunctionSpaces& sp = *sys.spaces;
    const int nu = sys.num_velocity();
    const int np = sys.num_pressure();
    SaddleSystem sx = sys;
    sx.A = assemble_velocity_h1(sp, true);
    sx.C.resize(0, nu);
    const SpMat M = assemble_pressure_mass(sp);

    InfSupReport rep;
    std::unique_ptr<KktFactorization> fac;
    try {
        fac = std::make_unique<KktFactorization>(sx);
    } catch (const Error& e) {
        if (e.category() != ErrorCategory::solver) throw;
        // an exact pressure kernel beyond the deflated constants: beta_h = 0
        rep.converged = true;
        rep.largest_ritz = std::numeric_limits<double>::infinity();
        return rep;
    }

    const bool deflate = sys.outer_bc == OuterBc::dirichlet;
    Vec one = Vec::Ones(np);
    one /= std::sqrt(one.dot(M * one));
    auto project = [&](Vec& x) {
        if (deflate) x -= one.dot(M * x) * one;
    };
    auto mnorm = [&](const Vec& x) { return std::sqrt(std::max(0.0, x.dot(M * x))); };
    auto apply = [&](const Vec& q) {
        Vec rhs = Vec::Zero(sx.kkt_size());
        rhs.segment(nu, np) = M * q;
        const Vec z = fac->solve(rhs);
        Vec w = -z.segment(nu, np);
        project(w);
        return w;
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec q(np);
    for (int i = 0; i < np; ++i) q(i) = normal(rng);
    project(q);
    q /= mnorm(q);

    std::vector<Vec> Q{q};
    std::vector<double> alpha;
    std::vector<double> beta;
    double theta = 0.0;
    const int kmax = std::min(max_iter, np);
    for (int j = 0; j < kmax; ++j) {
        Vec w = apply(Q.back());
        const Vec Mw = M * w;
        alpha.push_back(Q.back().dot(Mw));
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& qi : Q) w -= qi.dot(M * w) * qi;
        const double b = mnorm(w);
        const int m = static_cast<int>(alpha.size());
        Mat T = Mat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Mat> eig(T);
        theta = eig.eigenvalues()(m - 1);
        const double resid = std::abs(b * eig.eigenvectors()(m - 1, m - 1));
        rep.iterations = m;
        if (resid <= tol * std::abs(theta) || b <= 1e-14 * std::abs(theta)) {
            rep.converged = true;
            break;
        }
        beta.push_back(b);
        Q.push_back(w / b);
    }
    rep.largest_ritz = theta;
    rep.beta = theta > 0.0 ? 1.0 / std::sqrt(theta) : 0.0;
    if (!rep.converged) throw Error(ErrorCategory::convergence, "estimate_infsup: Lanczos iteration stagnated");
    return rep;
}

OperatorNormReport estimate_operator_norm(const LinearMap& apply, const LinearMap& apply_transpose, const LinearMap& out_norm,
                                          const LinearMap& in_norm, const LinearMap& in_norm_inverse, int input_size,
                                          std::uint64_t seed, int max_iter, double rel_tol)
{
    ANISO_REQUIRE(input_size > 0, invalid_argument, "estimate_operator_norm: empty input space");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec x(input_size);
    for (int i = 0; i < input_size; ++i) x(i) = normal(rng);
    auto in_len = [&](const Vec& v) { return std::sqrt(std::max(0.0, v.dot(in_norm(v)))); };
    x /= in_len(x);
    OperatorNormReport rep;
    double prev = -1.0;
    for (int k = 1; k <= max_iter; ++k) {
        const Vec y = apply(x);
        const Vec Ny = out_norm(y);
        const double sigma = std::sqrt(std::max(0.0, y.dot(Ny)));
        rep.value = sigma;
        rep.iterations = k;
        if (sigma == 0.0) {
            rep.converged = true;
            break;
        }
        if (prev >= 0.0 && std::abs(sigma - prev) <= rel_tol * sigma) {
            rep.converged = true;
            break;
        }
        prev = sigma;
        Vec z = in_norm_inverse(apply_transpose(Ny));
        const double len = in_len(z);
        if (len == 0.0) {
            rep.converged = true;
            break;
        }
        x = z / len;
    }
    return rep;
}

OperatorNormReport estimate_operator_norm(const Mat& T, const Mat& N_in, const Mat& N_out, std::uint64_t seed, int max_iter,
                                          double rel_tol)
{
    ANISO_REQUIRE(N_in.rows() == T.cols() && N_out.rows() == T.rows(), invalid_argument,
                  "estimate_operator_norm: dimension mismatch");
    const Eigen::LLT<Mat> llt(N_in);
    ANISO_REQUIRE(llt.info() == Eigen::Success, invalid_argument, "estimate_operator_norm: input norm not SPD");
    return estimate_operator_norm([&](const Vec& v) { return Vec(T * v); }, [&](const Vec& v) { return Vec(T.transpose() * v); },
                                  [&](const Vec& v) { return Vec(N_out * v); }, [&](const Vec& v) { return Vec(N_in * v); },
                                  [&](const Vec& v) { return Vec(llt.solve(v)); }, static_cast<int>(T.cols()), seed, max_iter,
                                  rel_tol);
}

} // namespace anisostokes
