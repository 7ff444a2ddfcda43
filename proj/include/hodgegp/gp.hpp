// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgegp/kernels.hpp"

namespace hodgegp {

using IndexList = std::vector<Index>;

struct PosteriorComponents {
    Eigen::VectorXd mean_harmonic;
    Eigen::VectorXd mean_gradient;
    Eigen::VectorXd mean_curl;
    Eigen::VectorXd var_harmonic;
    Eigen::VectorXd var_gradient;
    Eigen::VectorXd var_curl;
};

struct PosteriorResult {
    IndexList test_indices;
    Eigen::VectorXd mean;
    /// Latent variance, clamped at zero.
    Eigen::VectorXd variance;
    /// Diagonal added to the training covariance (noise plus any jitter).
    double noise_variance = 0.0;
    std::optional<PosteriorComponents> components;
};

/// Exact GP conditioning on K restricted to the train/test indices, with
/// `noise` added to the training diagonal. Uses a Cholesky factorization; on
/// failure adds jitter 1e-8, 1e-6, 1e-4 times trace/n before giving up with
/// NumericalError.
PosteriorResult posterior(const Eigen::MatrixXd& k, const IndexList& train,
                          const Eigen::VectorXd& y, double noise, const IndexList& test);
PosteriorResult posterior(const KernelMatrix& k, const IndexList& train, const Eigen::VectorXd& y,
                          double noise, const IndexList& test);

/// Posterior of each Hodge component f_H, f_G, f_C given observations of their
/// sum. `form` must consist of harmonic/gradient/curl terms only.
PosteriorResult component_posterior(const SpectralForm& form, const IndexList& train,
                                    const Eigen::VectorXd& y, double noise,
                                    const IndexList& test);
PosteriorResult component_posterior(const HodgeSpectrum& spectrum, const HcEdgeKernel& spec,
                                    const IndexList& train, const Eigen::VectorXd& y,
                                    double noise, const IndexList& test);

/// log N(y | 0, K_train + noise I).
double log_marginal_likelihood(const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y,
                               double noise);

struct LmlEvaluation {
    double value = 0.0;
    /// d value / d raw parameter, kernel parameters first and noise last.
    Eigen::VectorXd gradient;
    double noise_variance = 0.0;
    double jitter = 0.0;
};

/// Log marginal likelihood as a function of unconstrained parameters. Kernel
/// parameters are softplus(raw); the noise variance is floor + softplus(raw)
/// with floor = 1e-6 var(y). With a truncated Hodge spectrum a jitter of
/// 1e-6 times the mean prior variance is added to the diagonal.
class MarginalLikelihood {
public:
    MarginalLikelihood(KernelSpec kernel, const KernelSpectra& spectra, IndexList train,
                       Eigen::VectorXd y);

    Index num_parameters() const { return num_kernel_parameters_ + 1; }
    Index num_kernel_parameters() const { return num_kernel_parameters_; }
    double noise_floor() const { return noise_floor_; }
    /// Kernel parameter names followed by "noise".
    std::vector<std::string> parameter_names() const;

    KernelSpec kernel_at(const Eigen::VectorXd& raw) const;
    double noise_at(const Eigen::VectorXd& raw) const;

    LmlEvaluation evaluate(const Eigen::VectorXd& raw, bool with_gradient = true) const;

private:
    KernelSpec kernel_;
    KernelSpectra spectra_;
    IndexList train_;
    Eigen::VectorXd y_;
    Index num_kernel_parameters_ = 0;
    double noise_floor_ = 0.0;
    bool truncated_ = false;
};

struct FitConfig {
    int iterations = 1000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    /// Draw unconstrained parameters from N(0, 1); otherwise start from the
    /// kernel's current values and noise softplus(0).
    bool random_init = true;
    /// Hold every matern smoothness at `smoothness` instead of learning it.
    bool fixed_smoothness = false;
    double smoothness = 1.5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct GPModel {
    KernelSpec kernel;
    std::vector<std::string> parameter_names;
    /// Unconstrained parameters, kernel first and noise last.
    Eigen::VectorXd raw_parameters;
    double noise_variance = 0.0;
    double noise_floor = 0.0;
    /// Extra diagonal used with truncated spectra.
    double jitter = 0.0;
    IndexList train_indices;
    Eigen::VectorXd train_values;
    bool fitted = false;
    /// Negative log marginal likelihood per training point, before every
    /// optimizer step and once after the last.
    std::vector<double> loss_trace;
    std::uint64_t seed = 0;
    FitConfig config;

    /// Posterior at `test`; with `components`, also the Hodge-component
    /// posteriors (kernels with harmonic/gradient/curl structure only).
    PosteriorResult predict(const KernelSpectra& spectra, const IndexList& test,
                            bool components = false) const;
};

/// Maximizes the log marginal likelihood with Adam. The kind and spectrum
/// families of `kernel` are kept; its values are only used when
/// `config.random_init` is false. Throws NumericalError (with a parameter
/// snapshot) if the loss or gradient becomes non-finite.
GPModel fit(const KernelSpec& kernel, const KernelSpectra& spectra, const IndexList& train,
            const Eigen::VectorXd& y, const FitConfig& config);

/// Prior samples U diag(sqrt(w)) v, one column per sample.
Eigen::MatrixXd sample_prior(const SpectralForm& form, std::uint64_t seed, Index count);
Eigen::MatrixXd sample_prior(const KernelSpec& spec, const KernelSpectra& spectra,
                             std::uint64_t seed, Index count);

struct Metrics {
    double rmse = 0.0;
    /// Mean over test points of -log N(truth | mean, variance + noise).
    double nlpd = 0.0;
};

Metrics metrics(const PosteriorResult& pred, const Eigen::VectorXd& truth);

}  // namespace hodgegp
