// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hodgegp/complex.hpp"

namespace hodgegp {

enum class HodgeBlock { Harmonic, Gradient, Curl };

std::string to_string(HodgeBlock block);
HodgeBlock parse_hodge_block(const std::string& text);

/// Eigenpairs of one Hodge subspace; columns of `vectors` are orthonormal and
/// `values` is sorted ascending.
struct SpectralBlock {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;

    Index size() const { return values.size(); }
};

/// Eigendecomposition of L1 reorganized as [U_H U_G U_C].
struct HodgeSpectrum {
    Index num_edges = 0;
    SpectralBlock harmonic;
    SpectralBlock gradient;
    SpectralBlock curl;
    bool truncated = false;
    /// Number of largest eigenpairs requested when truncated; N1 otherwise.
    Index retained = 0;

    const SpectralBlock& block(HodgeBlock b) const;
    Index total() const { return harmonic.size() + gradient.size() + curl.size(); }
    double max_eigenvalue() const;
    /// Short identity string recorded in kernel provenance.
    std::string fingerprint() const;
};

/// Eigenpairs of a plain symmetric Laplacian (L0, L2, line graph).
struct LaplacianSpectrum {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
    std::string source;

    Index size() const { return values.size(); }
};

LaplacianSpectrum laplacian_spectrum(const Eigen::MatrixXd& laplacian, std::string source);

struct ClassifyTolerance {
    /// Eigenvalues at or below this are harmonic.
    double zero_eigenvalue = 0.0;
    /// Residual tolerance, scaled by sqrt(lambda), for the curl and divergence tests.
    double residual = 1e-8;
};

/// Default tolerance for a complex whose largest L1 eigenvalue is `lambda_max`:
/// lambda <= 1e-8 * lambda_max counts as zero.
ClassifyTolerance default_tolerance(double lambda_max);

/// Harmonic iff lambda <= tol.zero_eigenvalue; otherwise gradient iff
/// |B2^T u| <= tol * sqrt(lambda) and curl iff |B1 u| <= tol * sqrt(lambda).
/// Throws ClassificationError when `u` fails both residual tests.
HodgeBlock classify(const Eigen::VectorXd& u, double lambda, const SimplicialComplex2& sc,
                    const ClassifyTolerance& tol);

struct EigenOptions {
    /// Relative gap below which neighbouring eigenvalues are treated as one eigenspace.
    double cluster_tolerance = 1e-6;
    /// Convergence tolerance for the truncated solver (relative residual).
    double solver_tolerance = 1e-11;
    int max_iterations = 20000;
    std::uint64_t seed = 0x5eed;
};

/// Full (dense) or truncated eigendecomposition of L1 split into Hodge subspaces.
///
/// With `truncation = l`, only the l largest eigenpairs are computed with an
/// iterative solver and the exact harmonic basis from `harmonic_basis` is always
/// appended. Throws NumericalError if the iterative solver does not converge.
HodgeSpectrum eigendecompose(const SimplicialComplex2& sc,
                             std::optional<Index> truncation = std::nullopt,
                             const EigenOptions& options = {});

/// Orthonormal basis of ker(B1) ∩ ker(B2^T), built from the fundamental cycles of
/// a spanning forest.
Eigen::MatrixXd harmonic_basis(const SimplicialComplex2& sc);

struct TopEigenpairs {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;
    int iterations = 0;
};

/// Largest `count` eigenpairs of a symmetric PSD matrix by block subspace
/// iteration with Rayleigh-Ritz. Throws NumericalError with iteration
/// diagnostics when the residuals do not drop below tolerance.
TopEigenpairs largest_eigenpairs(const Eigen::MatrixXd& a, Index count,
                                 const EigenOptions& options = {});

struct HodgeComponents {
    Eigen::VectorXd harmonic;
    Eigen::VectorXd gradient;
    Eigen::VectorXd curl;
};

/// Least-squares Hodge decomposition against B1^T and B2. Factorizations are
/// computed once, so one decomposer serves many flows.
class HodgeDecomposer {
public:
    explicit HodgeDecomposer(const SimplicialComplex2& sc);

    HodgeComponents decompose(const Eigen::VectorXd& f1) const;

    Index num_edges() const { return num_edges_; }

private:
    Index num_edges_ = 0;
    Eigen::MatrixXd grad_op_;   // B1^T, N1 x N0
    Eigen::MatrixXd curl_op_;   // B2, N1 x N2
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> grad_ls_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> curl_ls_;
};

HodgeComponents hodge_decompose(const SimplicialComplex2& sc, const Cochain& f1);

/// exp(-t (mu L_d + gamma L_u)) phi0, evaluated block-wise on a full spectrum.
Cochain edge_diffusion(const HodgeSpectrum& spectrum, const Cochain& phi0, double mu,
                       double gamma, double t);
Cochain edge_diffusion(const SimplicialComplex2& sc, const Cochain& phi0, double mu,
                       double gamma, double t);

/// |(I - U_H U_H^T) f| / |f0|, how far a flow is from the harmonic space.
double harmonic_residual(const HodgeSpectrum& spectrum, const Eigen::VectorXd& f,
                         double reference_norm);

}  // namespace hodgegp
