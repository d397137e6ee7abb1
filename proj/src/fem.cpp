#include "fraclab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "fraclab/error.hpp"
#include "fraclab/rng.hpp"

namespace fraclab {

Eigen::VectorXd FemSystem::restrict_to_free(const Eigen::VectorXd& nodal) const {
    Eigen::VectorXd out(free_count());
    for (int i = 0; i < free_count(); ++i) out[i] = nodal[node_of_free[i]];
    return out;
}

Eigen::VectorXd FemSystem::prolong(const Eigen::VectorXd& free) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(node_count());
    for (int i = 0; i < free_count(); ++i) out[node_of_free[i]] = free[i];
    return out;
}

Eigen::VectorXd FemSystem::interpolate(const ScalarField& f) const {
    Eigen::VectorXd out(node_count());
    for (int i = 0; i < node_count(); ++i) out[i] = f(mesh.nodes[i].x, mesh.nodes[i].y);
    return out;
}

DiscreteField FemSystem::interpolate_v(const ScalarField& f) const {
    Eigen::VectorXd out = interpolate(f);
    for (int i = 0; i < node_count(); ++i)
        if (free_of_node[i] < 0) out[i] = 0.0;
    return {out};
}

const Eigen::SimplicialLDLT<SpMat>& FemSystem::S_factorization() const {
    if (!s_solver_) {
        s_solver_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
        s_solver_->compute(S);
        if (s_solver_->info() != Eigen::Success)
            throw SolverError(
                "V-form matrix is singular: no Dirichlet boundary and zero Robin "
                "coefficient leave the constant mode free");
    }
    return *s_solver_;
}

const Eigen::SimplicialLDLT<SpMat>& FemSystem::M_factorization() const {
    if (!m_solver_) {
        m_solver_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
        m_solver_->compute(M);
        if (m_solver_->info() != Eigen::Success)
            throw SolverError("mass matrix factorization failed");
    }
    return *m_solver_;
}

FemSystem assemble(const TaggedMesh& mesh, double robin_a, double sigma_weight) {
    if (robin_a < 0.0) throw ConfigError("robin coefficient must be >= 0");
    mesh.validate();

    FemSystem sys;
    sys.mesh = mesh;
    sys.robin_a = robin_a;
    sys.sigma_weight = sigma_weight;

    const int nn = static_cast<int>(mesh.nodes.size());
    std::vector<char> dirichlet(nn, 0);
    for (const auto& e : mesh.boundary)
        if (e.tag == BoundaryTag::Dirichlet) dirichlet[e.a] = dirichlet[e.b] = 1;

    sys.free_of_node.assign(nn, -1);
    for (int i = 0; i < nn; ++i) {
        if (!dirichlet[i]) {
            sys.free_of_node[i] = static_cast<int>(sys.node_of_free.size());
            sys.node_of_free.push_back(i);
        }
    }
    const int nf = sys.free_count();
    if (nf == 0) throw ConfigError("no free degrees of freedom");
    sys.singular_warning = (sys.node_of_free.size() == static_cast<size_t>(nn)) &&
                           (robin_a == 0.0 || mesh.boundary_length(BoundaryTag::Robin) == 0.0);

    using T = Eigen::Triplet<double>;
    std::vector<T> tm_full, tm, ta, tr;
    tm_full.reserve(mesh.triangles.size() * 9);
    tm.reserve(mesh.triangles.size() * 9);
    ta.reserve(mesh.triangles.size() * 9);

    for (const auto& tri : mesh.triangles) {
        const Vec2& p0 = mesh.nodes[tri[0]];
        const Vec2& p1 = mesh.nodes[tri[1]];
        const Vec2& p2 = mesh.nodes[tri[2]];
        const double area = 0.5 * orient2d(p0, p1, p2);
        // P1 gradients: grad lambda_i = perp(opposite edge) / (2 area).
        const Vec2 g[3] = {(p2 - p1).perp() * (0.5 / area), (p0 - p2).perp() * (0.5 / area),
                           (p1 - p0).perp() * (0.5 / area)};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double mass = area / 12.0 * (i == j ? 2.0 : 1.0);
                const double stiff = area * g[i].dot(g[j]);
                tm_full.emplace_back(tri[i], tri[j], mass);
                const int fi = sys.free_of_node[tri[i]];
                const int fj = sys.free_of_node[tri[j]];
                if (fi >= 0 && fj >= 0) {
                    tm.emplace_back(fi, fj, mass);
                    ta.emplace_back(fi, fj, stiff);
                }
            }
        }
    }
    for (const auto& e : mesh.boundary) {
        if (e.tag != BoundaryTag::Robin) continue;
        const double len = dist(mesh.nodes[e.a], mesh.nodes[e.b]);
        const int idx[2] = {e.a, e.b};
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const int fi = sys.free_of_node[idx[i]];
                const int fj = sys.free_of_node[idx[j]];
                if (fi >= 0 && fj >= 0)
                    tr.emplace_back(fi, fj, sigma_weight * len / 6.0 * (i == j ? 2.0 : 1.0));
            }
        }
    }

    sys.M_nodes.resize(nn, nn);
    sys.M_nodes.setFromTriplets(tm_full.begin(), tm_full.end());
    sys.M.resize(nf, nf);
    sys.M.setFromTriplets(tm.begin(), tm.end());
    sys.A.resize(nf, nf);
    sys.A.setFromTriplets(ta.begin(), ta.end());
    sys.R.resize(nf, nf);
    sys.R.setFromTriplets(tr.begin(), tr.end());
    sys.S = sys.A + robin_a * sys.R;
    sys.S.makeCompressed();
    return sys;
}

DiscreteField solve_poisson(const FemSystem& sys, const Eigen::VectorXd& f_nodal) {
    if (f_nodal.size() != sys.node_count())
        throw ConfigError("source vector size does not match the mesh");
    const Eigen::VectorXd rhs_nodal = sys.M_nodes * f_nodal;
    const Eigen::VectorXd rhs = sys.restrict_to_free(rhs_nodal);
    const Eigen::VectorXd u = sys.S_factorization().solve(rhs);
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0) {
        const double rel = (sys.S * u - rhs).norm() / rhs_norm;
        if (rel > 1e-10)
            throw SolverError("poisson solve residual " + std::to_string(rel) +
                              " exceeds 1e-10");
    }
    return {sys.prolong(u)};
}

DiscreteField solve_poisson(const FemSystem& sys, const ScalarField& f) {
    return solve_poisson(sys, sys.interpolate(f));
}

namespace {

/// Smallest eigenpairs of Op w = lambda M w, Op and M SPD on the free dofs.
/// Shift-invert (shift 0) block iteration with M-orthonormalization and
/// Rayleigh-Ritz extraction.
SpectralBasis eigen_smallest(const SpMat& Op, const SpMat& M, int count, double tol,
                             int max_iterations) {
    const int n = static_cast<int>(Op.rows());
    if (count < 1) throw ConfigError("eigenpair count must be >= 1");
    if (count > n) throw ConfigError("eigenpair count exceeds the free dof count");
    const int p = std::min(n, count + std::max(8, count / 2));

    Eigen::SimplicialLDLT<SpMat> inv(Op);
    if (inv.info() != Eigen::Success)
        throw SolverError("operator factorization failed in the eigensolver");

    Rng rng(0x5eedULL);
    Eigen::MatrixXd X(n, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) X(i, j) = rng.uniform(-1.0, 1.0);

    auto m_orthonormalize = [&](Eigen::MatrixXd& Y) {
        // Modified Gram-Schmidt in the M inner product, two passes; Z tracks M*Y.
        Eigen::MatrixXd Z = M * Y;
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < Y.cols(); ++j) {
                for (int i = 0; i < j; ++i) {
                    const double proj = Y.col(i).dot(Z.col(j));
                    Y.col(j) -= proj * Y.col(i);
                    Z.col(j) -= proj * Z.col(i);
                }
                const double nrm = std::sqrt(Y.col(j).dot(Z.col(j)));
                if (nrm < 1e-300) throw SolverError("rank collapse in the eigensolver");
                Y.col(j) /= nrm;
                Z.col(j) /= nrm;
            }
        }
    };

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p);
    double worst = 1.0;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::MatrixXd Y = inv.solve(M * X);
        m_orthonormalize(Y);
        // Rayleigh-Ritz on the subspace.
        const Eigen::MatrixXd H = Y.transpose() * (Op * Y).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
        X = Y * es.eigenvectors();
        lambda = es.eigenvalues();

        worst = 0.0;
        for (int j = 0; j < count; ++j) {
            const Eigen::VectorXd op_x = Op * X.col(j);
            const Eigen::VectorXd m_x = M * X.col(j);
            const double res = (op_x - lambda[j] * m_x).norm() /
                               (op_x.norm() + std::abs(lambda[j]) * m_x.norm());
            worst = std::max(worst, res);
        }
        if (worst < tol) break;
    }
    if (worst >= tol)
        throw SolverError("eigensolver did not converge: residual " + std::to_string(worst) +
                          " after " + std::to_string(max_iterations) + " iterations");

    SpectralBasis basis;
    basis.eigenvalues = lambda.head(count);
    basis.modes = X.leftCols(count);
    return basis;
}

}  // namespace

SpectralBasis solve_eigen(const FemSystem& sys, int count, double tol, int max_iterations) {
    return eigen_smallest(sys.S, sys.M, count, tol, max_iterations);
}

FieldNorms norms(const FemSystem& sys, const DiscreteField& u) {
    const Eigen::VectorXd uf = sys.restrict_to_free(u.values);
    FieldNorms out;
    const Eigen::VectorXd Mu = sys.M * uf;
    const Eigen::VectorXd Au = sys.A * uf;
    const Eigen::VectorXd Su = sys.S * uf;
    out.l2 = std::sqrt(std::max(0.0, uf.dot(Mu)));
    out.h1 = std::sqrt(std::max(0.0, uf.dot(Mu) + uf.dot(Au)));
    out.v = std::sqrt(std::max(0.0, uf.dot(Su)));
    // Discrete Riesz representative of -Delta u in the V form: M g = S u.
    const Eigen::VectorXd g = sys.M_factorization().solve(Su);
    out.laplacian_l2 = std::sqrt(std::max(0.0, g.dot(sys.M * g)));
    return out;
}

double poincare_constant(const FemSystem& sys) {
    if (sys.free_count() == sys.node_count())
        throw ConfigError("poincare constant needs a nonempty Dirichlet boundary");
    const auto basis = eigen_smallest(sys.A, sys.M, 1, 1e-9, 400);
    return 1.0 / std::sqrt(basis.eigenvalues[0]);
}

double l6_norm(const FemSystem& sys, const DiscreteField& u) {
    double acc = 0.0;
    for (const auto& tri : sys.mesh.triangles) {
        const double area = 0.5 * orient2d(sys.mesh.nodes[tri[0]], sys.mesh.nodes[tri[1]],
                                           sys.mesh.nodes[tri[2]]);
        const double v0 = u.values[tri[0]];
        const double v1 = u.values[tri[1]];
        const double v2 = u.values[tri[2]];
        // Edge-midpoint rule (degree-2 exact).
        const double m01 = 0.5 * (v0 + v1);
        const double m12 = 0.5 * (v1 + v2);
        const double m20 = 0.5 * (v2 + v0);
        acc += area / 3.0 *
               (std::pow(std::abs(m01), 6) + std::pow(std::abs(m12), 6) +
                std::pow(std::abs(m20), 6));
    }
    return std::pow(acc, 1.0 / 6.0);
}

std::pair<double, double> embedding_ratio_pair(const FemSystem& sys,
                                               const Eigen::VectorXd& f_nodal) {
    Eigen::VectorXd f = f_nodal;
    const double fl2 = std::sqrt(f.dot(sys.M_nodes * f));
    if (fl2 == 0.0) throw ConfigError("zero source in embedding_ratio_pair");
    f /= fl2;
    const DiscreteField u = solve_poisson(sys, f);
    const Eigen::VectorXd uf = sys.restrict_to_free(u.values);
    const double grad = std::sqrt(uf.dot(sys.A * uf));
    const double linf = u.values.cwiseAbs().maxCoeff();
    return {grad > 0.0 ? l6_norm(sys, u) / grad : 0.0, linf};
}

EmbeddingReport embedding_ratios(const FemSystem& sys, int trials, std::uint64_t seed) {
    if (trials < 1) throw ConfigError("embedding_ratios needs at least one trial");
    EmbeddingReport rep;
    rep.trials = trials;
    rep.seed = seed;
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd f(sys.node_count());
        for (int i = 0; i < sys.node_count(); ++i) f[i] = rng.uniform(-1.0, 1.0);
        const auto [l6, linf] = embedding_ratio_pair(sys, f);
        rep.l6_ratio_max = std::max(rep.l6_ratio_max, l6);
        rep.linf_ratio_max = std::max(rep.linf_ratio_max, linf);
    }
    return rep;
}

void write_matrix(const SpMat& m, std::ostream& os) {
    SpMat rm = m;
    rm.makeCompressed();
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(rm.nonZeros());
    for (int k = 0; k < rm.outerSize(); ++k)
        for (SpMat::InnerIterator it(rm, k); it; ++it)
            entries.emplace_back(it.row(), it.col(), it.value());
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
        return x.row() != y.row() ? x.row() < y.row() : x.col() < y.col();
    });
    char buf[96];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", e.row(), e.col(), e.value());
        os << buf;
    }
}

}  // namespace fraclab
