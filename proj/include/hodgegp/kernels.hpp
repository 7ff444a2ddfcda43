// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hodgegp/complex.hpp"
#include "hodgegp/spectral.hpp"

namespace hodgegp {

enum class SpectrumFamily { Matern, Diffusion };

std::string to_string(SpectrumFamily family);
SpectrumFamily parse_spectrum_family(const std::string& text);

/// Spectral weight function.
///   matern:    psi(l) = variance * (2 nu / kappa^2 + l)^(-nu)
///   diffusion: psi(l) = variance * exp(-kappa^2 l / 2)
struct SpectrumFn {
    SpectrumFamily family = SpectrumFamily::Matern;
    double variance = 1.0;
    double lengthscale = 1.0;  // kappa
    double smoothness = 1.5;   // nu, matern only

    /// Throws UsageError on variance < 0, non-positive lengthscale (matern) or
    /// negative lengthscale (diffusion), or non-positive smoothness.
    void validate() const;

    double operator()(double lambda) const;
    Eigen::VectorXd operator()(const Eigen::VectorXd& lambda) const;

    /// Number of hyperparameters: 3 for matern, 2 for diffusion.
    int num_parameters() const { return family == SpectrumFamily::Matern ? 3 : 2; }

    /// d psi / d (variance, lengthscale[, smoothness]), one row per eigenvalue.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& lambda) const;
};

/// Matern or diffusion kernel on the graph Laplacian L0.
struct NodeKernel {
    SpectrumFn fn;
};

/// One spectral function of L1 shared by all three Hodge subspaces.
struct NonHcEdgeKernel {
    SpectrumFn fn;
};

/// K_H + K_G + K_C with independent parameters. The harmonic block is a plain
/// scaling of U_H U_H^T.
struct HcEdgeKernel {
    double harmonic_variance = 1.0;
    SpectrumFn gradient;
    SpectrumFn curl;
};

/// Kernel supported on a single Hodge subspace. For the harmonic block only
/// `fn.variance` is used.
struct SubspaceKernel {
    HodgeBlock block = HodgeBlock::Gradient;
    SpectrumFn fn;
};

/// Gradient of a node GP: B1^T K0 B1.
struct GradOfNodeKernel {
    SpectrumFn node;
};

/// K_H + B1^T K0 B1 + B2 K2 B2^T.
struct ComposedHcKernel {
    double harmonic_variance = 1.0;
    SpectrumFn node;
    SpectrumFn triangle;
};

/// variance * (L1^T L1)^+.
struct HodgeLaplacianPinvKernel {
    double variance = 1.0;
};

/// Node kernel on the line-graph Laplacian.
struct LineGraphKernel {
    SpectrumFn fn;
};

using KernelSpec = std::variant<NodeKernel, NonHcEdgeKernel, HcEdgeKernel, SubspaceKernel,
                                GradOfNodeKernel, ComposedHcKernel, HodgeLaplacianPinvKernel,
                                LineGraphKernel>;

/// "node", "non_hc_edge", "hc_edge", "subspace_edge", "grad_of_node",
/// "composed_hc", "hodge_laplacian_pinv" or "line_graph_node".
std::string kernel_kind(const KernelSpec& spec);

/// Kernel for a CLI name such as "hc-matern" or "line-graph-diffusion", with
/// unit variances and lengthscales and nu = 1.5.
KernelSpec kernel_from_name(const std::string& name);

void validate(const KernelSpec& spec);

/// Whether the kernel lives on edges (everything except NodeKernel).
bool is_edge_kernel(const KernelSpec& spec);

nlohmann::json to_json(const KernelSpec& spec);
KernelSpec kernel_spec_from_json(const nlohmann::json& j);

/// Flat view of the positive hyperparameters, in a fixed order per kind, e.g.
/// "harmonic.variance", "gradient.variance", "gradient.lengthscale", ...
std::vector<std::string> parameter_names(const KernelSpec& spec);
Eigen::VectorXd parameter_values(const KernelSpec& spec);
KernelSpec with_parameter_values(const KernelSpec& spec, const Eigen::VectorXd& values);
/// True at positions holding a matern smoothness nu.
std::vector<bool> smoothness_parameters(const KernelSpec& spec);

/// log(1 + e^x) and its inverse, used to map unconstrained parameters to (0, inf).
double softplus(double x);
double inverse_softplus(double y);
double sigmoid(double x);

struct KernelMatrix {
    Eigen::MatrixXd matrix;
    KernelSpec spec;
    /// Which spectrum or operator the matrix was built from.
    std::string provenance;
};

/// Throws NumericalError unless the matrix is symmetric within 1e-12 (relative
/// to its largest entry) and its smallest eigenvalue is >= -1e-8 * largest.
void check_psd(const KernelMatrix& k);

KernelMatrix node_kernel(const LaplacianSpectrum& l0, const NodeKernel& spec);
KernelMatrix non_hc_edge_kernel(const HodgeSpectrum& spectrum, const NonHcEdgeKernel& spec);
KernelMatrix subspace_kernel(const HodgeSpectrum& spectrum, HodgeBlock block,
                             const SpectrumFn& fn);
KernelMatrix hc_kernel(const HodgeSpectrum& spectrum, const HcEdgeKernel& spec);
/// Congruence path B1^T K0 B1 with K0 from the L0 eigendecomposition.
KernelMatrix grad_of_node_kernel(const SimplicialComplex2& sc, const GradOfNodeKernel& spec);
/// Spectral path U_G diag(lambda psi0(lambda)) U_G^T.
KernelMatrix grad_of_node_kernel(const HodgeSpectrum& spectrum, const GradOfNodeKernel& spec);
/// Congruence path: K_H from the spectrum, K0 from L0 and K2 from L2.
KernelMatrix composed_hc_kernel(const SimplicialComplex2& sc, const HodgeSpectrum& spectrum,
                                const ComposedHcKernel& spec);
KernelMatrix hodge_laplacian_pinv_kernel(const HodgeSpectrum& spectrum, double variance = 1.0);
KernelMatrix line_graph_kernel(const LaplacianSpectrum& line_graph, const LineGraphKernel& spec);

/// Spectra a kernel may be expressed in. Pointers are borrowed and must outlive
/// any SpectralForm built from them.
struct KernelSpectra {
    const HodgeSpectrum* hodge = nullptr;
    const LaplacianSpectrum* node = nullptr;        // L0
    const LaplacianSpectrum* line_graph = nullptr;  // line-graph Laplacian
};

/// One block U diag(w) U^T of a kernel. `jacobian(k, p)` is d w_k / d value_p
/// for the positive hyperparameter p in `parameter_values` order.
struct SpectralTerm {
    std::string label;  // harmonic, gradient, curl, node or line_graph
    const Eigen::MatrixXd* basis = nullptr;
    Eigen::VectorXd eigenvalues;
    Eigen::VectorXd weights;
    Eigen::MatrixXd jacobian;
};

/// K = sum over terms of U diag(w) U^T, where the bases are mutually orthogonal.
/// Every kernel kind has this form; the GP code works with it directly.
struct SpectralForm {
    Index dim = 0;
    Index num_parameters = 0;
    std::vector<SpectralTerm> terms;

    Eigen::MatrixXd dense() const;
    /// Sum of the terms whose label is `label` (zero matrix if none).
    Eigen::MatrixXd dense(const std::string& label) const;
    bool has_hodge_blocks() const;
};

/// Throws UsageError if the needed spectrum is missing from `spectra`.
SpectralForm spectral_form(const KernelSpec& spec, const KernelSpectra& spectra);

/// Dense kernel from the spectral form, with provenance.
KernelMatrix build_kernel(const KernelSpec& spec, const KernelSpectra& spectra);

}  // namespace hodgegp
