#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <memory>

#include "fraclab/mesh.hpp"

namespace fraclab {

using SpMat = Eigen::SparseMatrix<double>;

/// Nodal P1 field over the whole mesh; Dirichlet entries are kept at zero.
struct DiscreteField {
    Eigen::VectorXd values;
};

using ScalarField = std::function<double(double, double)>;

/// Assembled mass/stiffness/Robin-boundary-mass system with Dirichlet dofs
/// eliminated. S = A + a * R where R already carries the sigma weighting.
class FemSystem {
public:
    TaggedMesh mesh;
    double robin_a = 0.0;
    double sigma_weight = 1.0;
    bool singular_warning = false;  // no Dirichlet dofs and a = 0

    std::vector<int> free_of_node;  // -1 for Dirichlet nodes
    std::vector<int> node_of_free;

    SpMat M_nodes;         // mass over all nodes (source projection)
    SpMat M, A, R, S;      // free-dof blocks

    int free_count() const { return static_cast<int>(node_of_free.size()); }
    int node_count() const { return static_cast<int>(mesh.nodes.size()); }

    Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& nodal) const;
    Eigen::VectorXd prolong(const Eigen::VectorXd& free) const;

    /// Sample a scalar field at the nodes (no Dirichlet masking).
    Eigen::VectorXd interpolate(const ScalarField& f) const;
    /// Sample and zero the Dirichlet nodes: a V-conforming field.
    DiscreteField interpolate_v(const ScalarField& f) const;

    const Eigen::SimplicialLDLT<SpMat>& S_factorization() const;
    const Eigen::SimplicialLDLT<SpMat>& M_factorization() const;

private:
    mutable std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> s_solver_;
    mutable std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> m_solver_;
};

/// Exact P1 element matrices; R collects Robin-tagged edges scaled by sigma_weight.
FemSystem assemble(const TaggedMesh& mesh, double robin_a, double sigma_weight = 1.0);

/// Weak Poisson solve (u,v)_V = (f,v)_L2 by sparse LDLT on the free dofs.
DiscreteField solve_poisson(const FemSystem& sys, const Eigen::VectorXd& f_nodal);
DiscreteField solve_poisson(const FemSystem& sys, const ScalarField& f);

struct SpectralBasis {
    Eigen::VectorXd eigenvalues;  // ascending, strictly positive
    Eigen::MatrixXd modes;        // free-dof columns, M-orthonormal
};

/// k smallest eigenpairs of S w = lambda M w by shift-invert subspace iteration
/// with full reorthogonalization and Rayleigh-Ritz extraction.
SpectralBasis solve_eigen(const FemSystem& sys, int count, double tol = 1e-9,
                          int max_iterations = 400);

struct FieldNorms {
    double l2 = 0.0;
    double h1 = 0.0;
    double v = 0.0;
    double laplacian_l2 = 0.0;
};

FieldNorms norms(const FemSystem& sys, const DiscreteField& u);

/// Sharp discrete constant in ||u||_L2 <= C ||grad u||_L2 on the Dirichlet-free
/// subspace: 1/sqrt(lambda_1) of A w = lambda M w (Robin term excluded).
double poincare_constant(const FemSystem& sys);

struct EmbeddingReport {
    double l6_ratio_max = 0.0;    // ||u||_L6 / ||grad u||_L2
    double linf_ratio_max = 0.0;  // ||u||_Linf / ||f||_L2
    int trials = 0;
    std::uint64_t seed = 0;
};

/// Empirical Sobolev-embedding constants over seeded random Poisson solves.
EmbeddingReport embedding_ratios(const FemSystem& sys, int trials, std::uint64_t seed);

/// The two embedding ratios for one given nodal source (L2-normalized internally).
std::pair<double, double> embedding_ratio_pair(const FemSystem& sys,
                                               const Eigen::VectorXd& f_nodal);

/// L6 norm of a P1 field by per-triangle 3-point (edge midpoint) quadrature.
double l6_norm(const FemSystem& sys, const DiscreteField& u);

/// Coordinate-triplet export: "row col value" lines, sorted row-major.
void write_matrix(const SpMat& m, std::ostream& os);

}  // namespace fraclab
