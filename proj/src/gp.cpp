// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hodgegp/errors.hpp"
#include "hodgegp/random.hpp"

namespace hodgegp {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_indices(const IndexList& idx, Index n, const char* what, bool unique)
{
    for (Index i : idx) {
        if (i < 0 || i >= n) {
            throw UsageError(std::string(what) + " index " + std::to_string(i) +
                             " out of range [0, " + std::to_string(n) + ")");
        }
    }
    if (unique) {
        IndexList sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw UsageError(std::string(what) + " indices are not unique");
        }
    }
}

struct Factor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

/// Cholesky of `c`, escalating diagonal jitter on failure.
Factor factorize(const Eigen::MatrixXd& c)
{
    if (!c.allFinite()) {
        throw NumericalError("covariance matrix has non-finite entries");
    }
    Factor f;
    f.llt.compute(c);
    if (f.llt.info() == Eigen::Success) {
        return f;
    }
    const Index n = c.rows();
    double scale = c.trace() / static_cast<double>(n);
    if (!(scale > 0.0)) scale = 1.0;
    for (double level : {1e-8, 1e-6, 1e-4}) {
        const double jitter = level * scale;
        f.llt.compute(c + jitter * Eigen::MatrixXd::Identity(n, n));
        if (f.llt.info() == Eigen::Success) {
            spdlog::warn("Cholesky needed jitter {:.3g} (level {:.0e} x trace/n)", jitter, level);
            f.jitter = jitter;
            return f;
        }
    }
    throw NumericalError("Cholesky factorization failed even with jitter 1e-4 x trace/n (" +
                         std::to_string(1e-4 * scale) + ")");
}

double log_det(const Factor& f)
{
    return 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd clamp_variance(Eigen::VectorXd v)
{
    for (Index i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0) {
            if (v[i] < -1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
                spdlog::debug("clamping negative posterior variance {:.3g}", v[i]);
            }
            v[i] = 0.0;
        }
    }
    return v;
}

struct Conditioned {
    Factor factor;
    Eigen::VectorXd alpha;
};

Conditioned condition(const Eigen::MatrixXd& k, const IndexList& train, const Eigen::VectorXd& y,
                      double noise)
{
    if (k.rows() != k.cols()) {
        throw UsageError("kernel matrix is not square");
    }
    check_indices(train, k.rows(), "train", true);
    if (static_cast<Index>(train.size()) != y.size()) {
        throw UsageError("train index count does not match observation count");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw UsageError("noise variance must be finite and >= 0");
    }
    if (!y.allFinite()) {
        throw UsageError("observations contain non-finite values");
    }
    Eigen::MatrixXd c = k(train, train);
    c.diagonal().array() += noise;
    Conditioned out{factorize(c), {}};
    out.alpha = out.factor.llt.solve(y);
    return out;
}

void predict_block(const Eigen::MatrixXd& k, const Conditioned& cond, const IndexList& train,
                   const IndexList& test, Eigen::VectorXd& mean, Eigen::VectorXd& var)
{
    const Eigen::MatrixXd cross = k(train, test);
    mean = cross.transpose() * cond.alpha;
    const Eigen::MatrixXd v = cond.factor.llt.matrixL().solve(cross);
    Eigen::VectorXd prior(static_cast<Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
        prior[static_cast<Index>(i)] = k(test[i], test[i]);
    }
    var = clamp_variance(prior - v.colwise().squaredNorm().transpose());
}

}  // namespace

PosteriorResult posterior(const Eigen::MatrixXd& k, const IndexList& train,
                          const Eigen::VectorXd& y, double noise, const IndexList& test)
{
    const Conditioned cond = condition(k, train, y, noise);
    check_indices(test, k.rows(), "test", false);
    PosteriorResult out;
    out.test_indices = test;
    out.noise_variance = noise + cond.factor.jitter;
    predict_block(k, cond, train, test, out.mean, out.variance);
    return out;
}

PosteriorResult posterior(const KernelMatrix& k, const IndexList& train, const Eigen::VectorXd& y,
                          double noise, const IndexList& test)
{
    return posterior(k.matrix, train, y, noise, test);
}

PosteriorResult component_posterior(const SpectralForm& form, const IndexList& train,
                                    const Eigen::VectorXd& y, double noise,
                                    const IndexList& test)
{
    if (!form.has_hodge_blocks()) {
        throw UsageError("component posteriors need a kernel built from Hodge subspaces");
    }
    const Eigen::MatrixXd kh = form.dense("harmonic");
    const Eigen::MatrixXd kg = form.dense("gradient");
    const Eigen::MatrixXd kc = form.dense("curl");
    const Eigen::MatrixXd k = kh + kg + kc;

    const Conditioned cond = condition(k, train, y, noise);
    check_indices(test, k.rows(), "test", false);
    PosteriorResult out;
    out.test_indices = test;
    out.noise_variance = noise + cond.factor.jitter;
    predict_block(k, cond, train, test, out.mean, out.variance);
    PosteriorComponents c;
    predict_block(kh, cond, train, test, c.mean_harmonic, c.var_harmonic);
    predict_block(kg, cond, train, test, c.mean_gradient, c.var_gradient);
    predict_block(kc, cond, train, test, c.mean_curl, c.var_curl);
    out.components = std::move(c);
    return out;
}

PosteriorResult component_posterior(const HodgeSpectrum& spectrum, const HcEdgeKernel& spec,
                                    const IndexList& train, const Eigen::VectorXd& y,
                                    double noise, const IndexList& test)
{
    KernelSpectra spectra;
    spectra.hodge = &spectrum;
    return component_posterior(spectral_form(spec, spectra), train, y, noise, test);
}

double log_marginal_likelihood(const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y,
                               double noise)
{
    IndexList all(static_cast<std::size_t>(k_train.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
    const Conditioned cond = condition(k_train, all, y, noise);
    const auto n = static_cast<double>(y.size());
    return -0.5 * y.dot(cond.alpha) - 0.5 * log_det(cond.factor) - 0.5 * n * kLog2Pi;
}

MarginalLikelihood::MarginalLikelihood(KernelSpec kernel, const KernelSpectra& spectra,
                                       IndexList train, Eigen::VectorXd y)
    : kernel_(std::move(kernel)), spectra_(spectra), train_(std::move(train)), y_(std::move(y))
{
    validate(kernel_);
    if (train_.empty()) {
        throw UsageError("marginal likelihood needs at least one training point");
    }
    if (static_cast<Index>(train_.size()) != y_.size()) {
        throw UsageError("train index count does not match observation count");
    }
    num_kernel_parameters_ = static_cast<Index>(hodgegp::parameter_names(kernel_).size());
    const double mean = y_.mean();
    const double var = (y_.array() - mean).square().mean();
    noise_floor_ = 1e-6 * var;
    truncated_ = spectra_.hodge != nullptr && spectra_.hodge->truncated && is_edge_kernel(kernel_) &&
                 !std::holds_alternative<LineGraphKernel>(kernel_);
}

std::vector<std::string> MarginalLikelihood::parameter_names() const
{
    auto names = hodgegp::parameter_names(kernel_);
    names.push_back("noise");
    return names;
}

KernelSpec MarginalLikelihood::kernel_at(const Eigen::VectorXd& raw) const
{
    return with_parameter_values(kernel_,
                                 raw.head(num_kernel_parameters_).unaryExpr(&softplus));
}

double MarginalLikelihood::noise_at(const Eigen::VectorXd& raw) const
{
    return noise_floor_ + softplus(raw[num_kernel_parameters_]);
}

LmlEvaluation MarginalLikelihood::evaluate(const Eigen::VectorXd& raw, bool with_gradient) const
{
    if (raw.size() != num_parameters()) {
        throw UsageError("expected " + std::to_string(num_parameters()) +
                         " unconstrained parameters, got " + std::to_string(raw.size()));
    }
    const SpectralForm form = spectral_form(kernel_at(raw), spectra_);
    const auto n = static_cast<Index>(train_.size());
    check_indices(train_, form.dim, "train", true);

    std::vector<Eigen::MatrixXd> rows;
    rows.reserve(form.terms.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : form.terms) {
        rows.push_back((*t.basis)(train_, Eigen::all));
        c += (rows.back() * t.weights.asDiagonal()) * rows.back().transpose();
    }
    c = 0.5 * (c + c.transpose());

    LmlEvaluation out;
    out.noise_variance = noise_at(raw);
    if (truncated_) {
        out.jitter = 1e-6 * c.trace() / static_cast<double>(n);
    }
    c.diagonal().array() += out.noise_variance + out.jitter;

    const Factor f = factorize(c);
    const Eigen::VectorXd alpha = f.llt.solve(y_);
    out.value = -0.5 * y_.dot(alpha) - 0.5 * log_det(f) - 0.5 * static_cast<double>(n) * kLog2Pi;
    if (!with_gradient) {
        return out;
    }

    // d/dp = 1/2 tr((alpha alpha^T - C^-1) dC/dp); for a term U diag(w) U^T the
    // trace is w'^T diag(U^T A U).
    const Eigen::MatrixXd a =
        alpha * alpha.transpose() - f.llt.solve(Eigen::MatrixXd::Identity(n, n));
    const double trace_a = a.trace();
    Eigen::VectorXd grad_values = Eigen::VectorXd::Zero(num_kernel_parameters_);
    for (std::size_t i = 0; i < form.terms.size(); ++i) {
        const auto& t = form.terms[i];
        const Eigen::MatrixXd& u = rows[i];
        const Eigen::VectorXd q = u.cwiseProduct(a * u).colwise().sum().transpose();
        grad_values += 0.5 * t.jacobian.transpose() * q;
        if (truncated_) {
            const Eigen::VectorXd s = u.cwiseAbs2().colwise().sum().transpose();
            grad_values +=
                0.5 * trace_a * 1e-6 / static_cast<double>(n) * (t.jacobian.transpose() * s);
        }
    }
    out.gradient.resize(num_parameters());
    for (Index p = 0; p < num_kernel_parameters_; ++p) {
        out.gradient[p] = grad_values[p] * sigmoid(raw[p]);
    }
    out.gradient[num_kernel_parameters_] = 0.5 * trace_a * sigmoid(raw[num_kernel_parameters_]);
    return out;
}

namespace {

std::string snapshot(const MarginalLikelihood& ml, const Eigen::VectorXd& raw)
{
    std::ostringstream os;
    const auto names = ml.parameter_names();
    for (Index p = 0; p < raw.size(); ++p) {
        const double value = p + 1 == raw.size() ? ml.noise_at(raw) : softplus(raw[p]);
        os << (p ? ", " : "") << names[static_cast<std::size_t>(p)] << "=" << value
           << " (raw " << raw[p] << ")";
    }
    return os.str();
}

}  // namespace

GPModel fit(const KernelSpec& kernel, const KernelSpectra& spectra, const IndexList& train,
            const Eigen::VectorXd& y, const FitConfig& config)
{
    if (config.iterations < 0) {
        throw UsageError("iteration count must be >= 0");
    }
    if (!(config.learning_rate > 0.0)) {
        throw UsageError("learning rate must be > 0");
    }
    const MarginalLikelihood ml(kernel, spectra, train, y);
    const Index np = ml.num_parameters();
    const Index nk = ml.num_kernel_parameters();

    Eigen::VectorXd raw(np);
    if (config.random_init) {
        Rng rng(config.seed);
        raw = rng.normal_vector(np);
    } else {
        const Eigen::VectorXd values = parameter_values(kernel);
        for (Index p = 0; p < nk; ++p) {
            raw[p] = inverse_softplus(std::max(values[p], 1e-12));
        }
        raw[nk] = 0.0;
    }
    std::vector<bool> trainable(static_cast<std::size_t>(np), true);
    if (config.fixed_smoothness) {
        if (!(config.smoothness > 0.0)) {
            throw UsageError("fixed smoothness must be > 0");
        }
        const auto mask = smoothness_parameters(kernel);
        for (Index p = 0; p < nk; ++p) {
            if (mask[static_cast<std::size_t>(p)]) {
                raw[p] = inverse_softplus(config.smoothness);
                trainable[static_cast<std::size_t>(p)] = false;
            }
        }
    }

    const auto n = static_cast<double>(train.size());
    GPModel model;
    model.loss_trace.reserve(static_cast<std::size_t>(config.iterations) + 1);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(np);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(np);

    auto loss_at = [&](const Eigen::VectorXd& r, Eigen::VectorXd* grad) {
        LmlEvaluation e;
        try {
            e = ml.evaluate(r, grad != nullptr);
        } catch (const NumericalError& err) {
            throw NumericalError(std::string(err.what()) + "; parameters: " + snapshot(ml, r));
        }
        const double loss = -e.value / n;
        if (!std::isfinite(loss) || (grad && !e.gradient.allFinite())) {
            throw NumericalError("non-finite loss or gradient at iteration " +
                                 std::to_string(model.loss_trace.size()) +
                                 "; parameters: " + snapshot(ml, r));
        }
        if (grad) *grad = -e.gradient / n;
        return loss;
    };

    Eigen::VectorXd grad(np);
    for (int it = 1; it <= config.iterations; ++it) {
        model.loss_trace.push_back(loss_at(raw, &grad));
        const double bc1 = 1.0 - std::pow(config.beta1, it);
        const double bc2 = 1.0 - std::pow(config.beta2, it);
        for (Index p = 0; p < np; ++p) {
            if (!trainable[static_cast<std::size_t>(p)]) continue;
            m[p] = config.beta1 * m[p] + (1.0 - config.beta1) * grad[p];
            v[p] = config.beta2 * v[p] + (1.0 - config.beta2) * grad[p] * grad[p];
            const double m_hat = m[p] / bc1;
            const double v_hat = v[p] / bc2;
            raw[p] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
    model.loss_trace.push_back(loss_at(raw, nullptr));

    model.kernel = ml.kernel_at(raw);
    model.parameter_names = ml.parameter_names();
    model.raw_parameters = raw;
    model.noise_variance = ml.noise_at(raw);
    model.noise_floor = ml.noise_floor();
    model.jitter = ml.evaluate(raw, false).jitter;
    model.train_indices = train;
    model.train_values = y;
    model.fitted = true;
    model.seed = config.seed;
    model.config = config;
    spdlog::debug("fit {}: loss {:.6g} -> {:.6g} over {} iterations", kernel_kind(kernel),
                  model.loss_trace.front(), model.loss_trace.back(), config.iterations);
    return model;
}

PosteriorResult GPModel::predict(const KernelSpectra& spectra, const IndexList& test,
                                 bool components) const
{
    const SpectralForm form = spectral_form(kernel, spectra);
    const double diag = noise_variance + jitter;
    if (components) {
        return component_posterior(form, train_indices, train_values, diag, test);
    }
    return posterior(form.dense(), train_indices, train_values, diag, test);
}

Eigen::MatrixXd sample_prior(const SpectralForm& form, std::uint64_t seed, Index count)
{
    if (count < 0) {
        throw UsageError("sample count must be >= 0");
    }
    Rng rng(seed);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(form.dim, count);
    for (Index c = 0; c < count; ++c) {
        for (const auto& t : form.terms) {
            const Eigen::VectorXd z = rng.normal_vector(t.weights.size());
            out.col(c) += *t.basis * t.weights.cwiseSqrt().cwiseProduct(z);
        }
    }
    return out;
}

Eigen::MatrixXd sample_prior(const KernelSpec& spec, const KernelSpectra& spectra,
                             std::uint64_t seed, Index count)
{
    return sample_prior(spectral_form(spec, spectra), seed, count);
}

Metrics metrics(const PosteriorResult& pred, const Eigen::VectorXd& truth)
{
    const Index n = pred.mean.size();
    if (n == 0) {
        throw UsageError("metrics need a non-empty test set");
    }
    if (truth.size() != n || pred.variance.size() != n) {
        throw UsageError("prediction and truth have different lengths");
    }
    Metrics m;
    double se = 0.0;
    double nlpd = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double r = truth[i] - pred.mean[i];
        const double s2 = pred.variance[i] + pred.noise_variance;
        if (!(s2 > 0.0)) {
            throw NumericalError("predictive variance is not positive at test point " +
                                 std::to_string(i));
        }
        se += r * r;
        nlpd += 0.5 * (kLog2Pi + std::log(s2)) + 0.5 * r * r / s2;
    }
    m.rmse = std::sqrt(se / static_cast<double>(n));
    m.nlpd = nlpd / static_cast<double>(n);
    return m;
}

}  // namespace hodgegp
