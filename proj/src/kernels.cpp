// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/kernels.hpp"

#include <cmath>
#include <sstream>

#include "hodgegp/errors.hpp"

namespace hodgegp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string to_string(SpectrumFamily family)
{
    return family == SpectrumFamily::Matern ? "matern" : "diffusion";
}

SpectrumFamily parse_spectrum_family(const std::string& text)
{
    if (text == "matern") return SpectrumFamily::Matern;
    if (text == "diffusion") return SpectrumFamily::Diffusion;
    throw UsageError("unknown spectrum family '" + text + "' (expected matern or diffusion)");
}

void SpectrumFn::validate() const
{
    if (!std::isfinite(variance) || variance < 0.0) {
        throw UsageError("spectrum variance must be finite and >= 0");
    }
    if (family == SpectrumFamily::Matern) {
        if (!std::isfinite(lengthscale) || lengthscale <= 0.0) {
            throw UsageError("matern lengthscale must be > 0");
        }
        if (!std::isfinite(smoothness) || smoothness <= 0.0) {
            throw UsageError("matern smoothness must be > 0");
        }
    } else if (!std::isfinite(lengthscale) || lengthscale < 0.0) {
        throw UsageError("diffusion lengthscale must be >= 0");
    }
}

double SpectrumFn::operator()(double lambda) const
{
    if (family == SpectrumFamily::Matern) {
        return variance * std::pow(2.0 * smoothness / (lengthscale * lengthscale) + lambda,
                                   -smoothness);
    }
    return variance * std::exp(-0.5 * lengthscale * lengthscale * lambda);
}

Eigen::VectorXd SpectrumFn::operator()(const Eigen::VectorXd& lambda) const
{
    return lambda.unaryExpr([this](double l) { return (*this)(l); });
}

Eigen::MatrixXd SpectrumFn::jacobian(const Eigen::VectorXd& lambda) const
{
    Eigen::MatrixXd jac(lambda.size(), num_parameters());
    const double k = lengthscale;
    for (Index i = 0; i < lambda.size(); ++i) {
        const double l = lambda[i];
        if (family == SpectrumFamily::Matern) {
            const double nu = smoothness;
            const double shift = 2.0 * nu / (k * k);
            const double a = shift + l;
            const double unit = std::pow(a, -nu);
            const double psi = variance * unit;
            jac(i, 0) = unit;
            jac(i, 1) = psi * 4.0 * nu * nu / (k * k * k * a);
            jac(i, 2) = psi * (-std::log(a) - shift / a);
        } else {
            const double unit = std::exp(-0.5 * k * k * l);
            jac(i, 0) = unit;
            jac(i, 1) = -variance * unit * k * l;
        }
    }
    return jac;
}

std::string kernel_kind(const KernelSpec& spec)
{
    return std::visit(overloaded{
                          [](const NodeKernel&) { return std::string("node"); },
                          [](const NonHcEdgeKernel&) { return std::string("non_hc_edge"); },
                          [](const HcEdgeKernel&) { return std::string("hc_edge"); },
                          [](const SubspaceKernel&) { return std::string("subspace_edge"); },
                          [](const GradOfNodeKernel&) { return std::string("grad_of_node"); },
                          [](const ComposedHcKernel&) { return std::string("composed_hc"); },
                          [](const HodgeLaplacianPinvKernel&) {
                              return std::string("hodge_laplacian_pinv");
                          },
                          [](const LineGraphKernel&) { return std::string("line_graph_node"); },
                      },
                      spec);
}

KernelSpec kernel_from_name(const std::string& name)
{
    const SpectrumFn matern{SpectrumFamily::Matern, 1.0, 1.0, 1.5};
    const SpectrumFn diffusion{SpectrumFamily::Diffusion, 1.0, 1.0, 1.5};
    if (name == "hc-matern") return HcEdgeKernel{1.0, matern, matern};
    if (name == "hc-diffusion") return HcEdgeKernel{1.0, diffusion, diffusion};
    if (name == "matern") return NonHcEdgeKernel{matern};
    if (name == "diffusion") return NonHcEdgeKernel{diffusion};
    if (name == "line-graph-matern") return LineGraphKernel{matern};
    if (name == "line-graph-diffusion") return LineGraphKernel{diffusion};
    if (name == "grad-of-node") return GradOfNodeKernel{matern};
    if (name == "composed-hc") return ComposedHcKernel{1.0, matern, matern};
    if (name == "hodge-pinv") return HodgeLaplacianPinvKernel{1.0};
    throw UsageError("unknown kernel '" + name + "'");
}

void validate(const KernelSpec& spec)
{
    auto check_variance = [](double v, const char* what) {
        if (!std::isfinite(v) || v < 0.0) {
            throw UsageError(std::string(what) + " must be finite and >= 0");
        }
    };
    std::visit(overloaded{
                   [](const NodeKernel& k) { k.fn.validate(); },
                   [](const NonHcEdgeKernel& k) { k.fn.validate(); },
                   [&](const HcEdgeKernel& k) {
                       check_variance(k.harmonic_variance, "harmonic variance");
                       k.gradient.validate();
                       k.curl.validate();
                   },
                   [](const SubspaceKernel& k) { k.fn.validate(); },
                   [](const GradOfNodeKernel& k) { k.node.validate(); },
                   [&](const ComposedHcKernel& k) {
                       check_variance(k.harmonic_variance, "harmonic variance");
                       k.node.validate();
                       k.triangle.validate();
                   },
                   [&](const HodgeLaplacianPinvKernel& k) {
                       check_variance(k.variance, "pseudoinverse kernel variance");
                   },
                   [](const LineGraphKernel& k) { k.fn.validate(); },
               },
               spec);
}

bool is_edge_kernel(const KernelSpec& spec)
{
    return !std::holds_alternative<NodeKernel>(spec);
}

namespace {

nlohmann::json fn_to_json(const SpectrumFn& fn)
{
    nlohmann::json j = {{"family", to_string(fn.family)},
                        {"variance", fn.variance},
                        {"lengthscale", fn.lengthscale}};
    if (fn.family == SpectrumFamily::Matern) {
        j["smoothness"] = fn.smoothness;
    }
    return j;
}

SpectrumFn fn_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw UsageError("spectrum function must be a JSON object");
    }
    SpectrumFn fn;
    fn.family = parse_spectrum_family(j.value("family", std::string("matern")));
    fn.variance = j.value("variance", 1.0);
    fn.lengthscale = j.value("lengthscale", 1.0);
    fn.smoothness = j.value("smoothness", 1.5);
    fn.validate();
    return fn;
}

const nlohmann::json& require(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key)) {
        throw UsageError(std::string("kernel spec is missing '") + key + "'");
    }
    return j.at(key);
}

}  // namespace

nlohmann::json to_json(const KernelSpec& spec)
{
    nlohmann::json j;
    j["kind"] = kernel_kind(spec);
    std::visit(overloaded{
                   [&](const NodeKernel& k) { j["fn"] = fn_to_json(k.fn); },
                   [&](const NonHcEdgeKernel& k) { j["fn"] = fn_to_json(k.fn); },
                   [&](const HcEdgeKernel& k) {
                       j["harmonic_variance"] = k.harmonic_variance;
                       j["gradient"] = fn_to_json(k.gradient);
                       j["curl"] = fn_to_json(k.curl);
                   },
                   [&](const SubspaceKernel& k) {
                       j["block"] = to_string(k.block);
                       j["fn"] = fn_to_json(k.fn);
                   },
                   [&](const GradOfNodeKernel& k) { j["node"] = fn_to_json(k.node); },
                   [&](const ComposedHcKernel& k) {
                       j["harmonic_variance"] = k.harmonic_variance;
                       j["node"] = fn_to_json(k.node);
                       j["triangle"] = fn_to_json(k.triangle);
                   },
                   [&](const HodgeLaplacianPinvKernel& k) { j["variance"] = k.variance; },
                   [&](const LineGraphKernel& k) { j["fn"] = fn_to_json(k.fn); },
               },
               spec);
    return j;
}

KernelSpec kernel_spec_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw UsageError("kernel spec must be an object with a string 'kind'");
    }
    const auto kind = j.at("kind").get<std::string>();
    KernelSpec spec;
    try {
        if (kind == "node") {
            spec = NodeKernel{fn_from_json(require(j, "fn"))};
        } else if (kind == "non_hc_edge") {
            spec = NonHcEdgeKernel{fn_from_json(require(j, "fn"))};
        } else if (kind == "hc_edge") {
            spec = HcEdgeKernel{j.value("harmonic_variance", 1.0),
                                fn_from_json(require(j, "gradient")),
                                fn_from_json(require(j, "curl"))};
        } else if (kind == "subspace_edge") {
            spec = SubspaceKernel{parse_hodge_block(require(j, "block").get<std::string>()),
                                  fn_from_json(require(j, "fn"))};
        } else if (kind == "grad_of_node") {
            spec = GradOfNodeKernel{fn_from_json(require(j, "node"))};
        } else if (kind == "composed_hc") {
            spec = ComposedHcKernel{j.value("harmonic_variance", 1.0),
                                    fn_from_json(require(j, "node")),
                                    fn_from_json(require(j, "triangle"))};
        } else if (kind == "hodge_laplacian_pinv") {
            spec = HodgeLaplacianPinvKernel{j.value("variance", 1.0)};
        } else if (kind == "line_graph_node") {
            spec = LineGraphKernel{fn_from_json(require(j, "fn"))};
        } else {
            throw UsageError("unknown kernel kind '" + kind + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed kernel spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

namespace {

void append_fn_names(std::vector<std::string>& names, const std::string& prefix,
                     const SpectrumFn& fn)
{
    names.push_back(prefix + "variance");
    names.push_back(prefix + "lengthscale");
    if (fn.family == SpectrumFamily::Matern) {
        names.push_back(prefix + "smoothness");
    }
}

void append_fn_values(std::vector<double>& values, const SpectrumFn& fn)
{
    values.push_back(fn.variance);
    values.push_back(fn.lengthscale);
    if (fn.family == SpectrumFamily::Matern) {
        values.push_back(fn.smoothness);
    }
}

void read_fn_values(const Eigen::VectorXd& values, Index& pos, SpectrumFn& fn)
{
    fn.variance = values[pos++];
    fn.lengthscale = values[pos++];
    if (fn.family == SpectrumFamily::Matern) {
        fn.smoothness = values[pos++];
    }
}

}  // namespace

std::vector<std::string> parameter_names(const KernelSpec& spec)
{
    std::vector<std::string> names;
    std::visit(overloaded{
                   [&](const NodeKernel& k) { append_fn_names(names, "", k.fn); },
                   [&](const NonHcEdgeKernel& k) { append_fn_names(names, "", k.fn); },
                   [&](const HcEdgeKernel& k) {
                       names.push_back("harmonic.variance");
                       append_fn_names(names, "gradient.", k.gradient);
                       append_fn_names(names, "curl.", k.curl);
                   },
                   [&](const SubspaceKernel& k) {
                       if (k.block == HodgeBlock::Harmonic) {
                           names.push_back("variance");
                       } else {
                           append_fn_names(names, "", k.fn);
                       }
                   },
                   [&](const GradOfNodeKernel& k) { append_fn_names(names, "node.", k.node); },
                   [&](const ComposedHcKernel& k) {
                       names.push_back("harmonic.variance");
                       append_fn_names(names, "node.", k.node);
                       append_fn_names(names, "triangle.", k.triangle);
                   },
                   [&](const HodgeLaplacianPinvKernel&) { names.push_back("variance"); },
                   [&](const LineGraphKernel& k) { append_fn_names(names, "", k.fn); },
               },
               spec);
    return names;
}

Eigen::VectorXd parameter_values(const KernelSpec& spec)
{
    std::vector<double> v;
    std::visit(overloaded{
                   [&](const NodeKernel& k) { append_fn_values(v, k.fn); },
                   [&](const NonHcEdgeKernel& k) { append_fn_values(v, k.fn); },
                   [&](const HcEdgeKernel& k) {
                       v.push_back(k.harmonic_variance);
                       append_fn_values(v, k.gradient);
                       append_fn_values(v, k.curl);
                   },
                   [&](const SubspaceKernel& k) {
                       if (k.block == HodgeBlock::Harmonic) {
                           v.push_back(k.fn.variance);
                       } else {
                           append_fn_values(v, k.fn);
                       }
                   },
                   [&](const GradOfNodeKernel& k) { append_fn_values(v, k.node); },
                   [&](const ComposedHcKernel& k) {
                       v.push_back(k.harmonic_variance);
                       append_fn_values(v, k.node);
                       append_fn_values(v, k.triangle);
                   },
                   [&](const HodgeLaplacianPinvKernel& k) { v.push_back(k.variance); },
                   [&](const LineGraphKernel& k) { append_fn_values(v, k.fn); },
               },
               spec);
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

KernelSpec with_parameter_values(const KernelSpec& spec, const Eigen::VectorXd& values)
{
    if (values.size() != static_cast<Index>(parameter_names(spec).size())) {
        throw UsageError("kernel " + kernel_kind(spec) + " takes " +
                         std::to_string(parameter_names(spec).size()) + " parameters, got " +
                         std::to_string(values.size()));
    }
    KernelSpec out = spec;
    Index pos = 0;
    std::visit(overloaded{
                   [&](NodeKernel& k) { read_fn_values(values, pos, k.fn); },
                   [&](NonHcEdgeKernel& k) { read_fn_values(values, pos, k.fn); },
                   [&](HcEdgeKernel& k) {
                       k.harmonic_variance = values[pos++];
                       read_fn_values(values, pos, k.gradient);
                       read_fn_values(values, pos, k.curl);
                   },
                   [&](SubspaceKernel& k) {
                       if (k.block == HodgeBlock::Harmonic) {
                           k.fn.variance = values[pos++];
                       } else {
                           read_fn_values(values, pos, k.fn);
                       }
                   },
                   [&](GradOfNodeKernel& k) { read_fn_values(values, pos, k.node); },
                   [&](ComposedHcKernel& k) {
                       k.harmonic_variance = values[pos++];
                       read_fn_values(values, pos, k.node);
                       read_fn_values(values, pos, k.triangle);
                   },
                   [&](HodgeLaplacianPinvKernel& k) { k.variance = values[pos++]; },
                   [&](LineGraphKernel& k) { read_fn_values(values, pos, k.fn); },
               },
               out);
    return out;
}

std::vector<bool> smoothness_parameters(const KernelSpec& spec)
{
    const auto names = parameter_names(spec);
    std::vector<bool> mask(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& n = names[i];
        mask[i] = n.size() >= 10 && n.compare(n.size() - 10, 10, "smoothness") == 0;
    }
    return mask;
}

double softplus(double x)
{
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

double inverse_softplus(double y)
{
    if (!(y > 0.0)) {
        throw UsageError("inverse softplus needs a positive value");
    }
    if (y > 30.0) return y;
    return y + std::log(-std::expm1(-y));
}

double sigmoid(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_psd(const KernelMatrix& k)
{
    const auto& m = k.matrix;
    if (m.rows() != m.cols()) {
        throw NumericalError("kernel matrix is not square");
    }
    if (m.size() == 0) {
        return;
    }
    if (!m.allFinite()) {
        throw NumericalError("kernel matrix has non-finite entries (" + k.provenance + ")");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        std::ostringstream os;
        os << "kernel matrix is not symmetric (max asymmetry " << asym << ", " << k.provenance
           << ")";
        throw NumericalError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    const double lo = solver.eigenvalues().minCoeff();
    const double hi = solver.eigenvalues().maxCoeff();
    if (lo < -1e-8 * std::max(hi, 0.0) && lo < 0.0) {
        std::ostringstream os;
        os << "kernel matrix is not PSD (min eigenvalue " << lo << ", max " << hi << ", "
           << k.provenance << ")";
        throw NumericalError(os.str());
    }
}

namespace {

Eigen::MatrixXd spectral_sum(const Eigen::MatrixXd& u, const Eigen::VectorXd& w)
{
    Eigen::MatrixXd k = (u * w.asDiagonal()) * u.transpose();
    return 0.5 * (k + k.transpose());
}

void check_weights(const Eigen::VectorXd& w, const std::string& what)
{
    if (!w.allFinite() || (w.size() > 0 && w.minCoeff() < 0.0)) {
        throw NumericalError("spectral weights of " + what + " are negative or non-finite");
    }
}

Eigen::MatrixXd zeros(Index n) { return Eigen::MatrixXd::Zero(n, n); }

Eigen::MatrixXd block_kernel(const SpectralBlock& block, const Eigen::VectorXd& w, Index n)
{
    if (block.size() == 0) {
        return zeros(n);
    }
    return spectral_sum(block.vectors, w);
}

std::string source(const HodgeSpectrum& s, const std::string& path)
{
    return s.fingerprint() + " " + path;
}

}  // namespace

KernelMatrix node_kernel(const LaplacianSpectrum& l0, const NodeKernel& spec)
{
    spec.fn.validate();
    const Eigen::VectorXd w = spec.fn(l0.values);
    check_weights(w, "node kernel");
    return {spectral_sum(l0.vectors, w), spec, l0.source + " spectral"};
}

KernelMatrix non_hc_edge_kernel(const HodgeSpectrum& spectrum, const NonHcEdgeKernel& spec)
{
    spec.fn.validate();
    const Index n = spectrum.num_edges;
    Eigen::MatrixXd k = zeros(n);
    for (auto b : {HodgeBlock::Harmonic, HodgeBlock::Gradient, HodgeBlock::Curl}) {
        const auto& block = spectrum.block(b);
        const Eigen::VectorXd w = spec.fn(block.values);
        check_weights(w, "non-HC edge kernel");
        k += block_kernel(block, w, n);
    }
    return {k, spec, source(spectrum, "spectral")};
}

KernelMatrix subspace_kernel(const HodgeSpectrum& spectrum, HodgeBlock block,
                             const SpectrumFn& fn)
{
    fn.validate();
    const auto& b = spectrum.block(block);
    Eigen::VectorXd w;
    if (block == HodgeBlock::Harmonic) {
        w = Eigen::VectorXd::Constant(b.size(), fn.variance);
    } else {
        w = fn(b.values);
    }
    check_weights(w, to_string(block) + " kernel");
    return {block_kernel(b, w, spectrum.num_edges), SubspaceKernel{block, fn},
            source(spectrum, to_string(block) + " block")};
}

KernelMatrix hc_kernel(const HodgeSpectrum& spectrum, const HcEdgeKernel& spec)
{
    validate(spec);
    SpectrumFn harmonic;
    harmonic.variance = spec.harmonic_variance;
    Eigen::MatrixXd k = subspace_kernel(spectrum, HodgeBlock::Harmonic, harmonic).matrix;
    k += subspace_kernel(spectrum, HodgeBlock::Gradient, spec.gradient).matrix;
    k += subspace_kernel(spectrum, HodgeBlock::Curl, spec.curl).matrix;
    return {k, spec, source(spectrum, "K_H + K_G + K_C")};
}

KernelMatrix grad_of_node_kernel(const SimplicialComplex2& sc, const GradOfNodeKernel& spec)
{
    spec.node.validate();
    const LaplacianSpectrum l0 = laplacian_spectrum(laplacians(sc).l0, "L0");
    const Eigen::MatrixXd k0 = node_kernel(l0, NodeKernel{spec.node}).matrix;
    const auto& b1 = sc.b1_real();
    Eigen::MatrixXd k = b1.transpose() * (k0 * b1);
    k = 0.5 * (k + k.transpose());
    KernelMatrix out{k, spec, "B1^T K0 B1 congruence"};
    check_psd(out);
    return out;
}

KernelMatrix grad_of_node_kernel(const HodgeSpectrum& spectrum, const GradOfNodeKernel& spec)
{
    spec.node.validate();
    const auto& g = spectrum.gradient;
    const Eigen::VectorXd w = g.values.cwiseProduct(spec.node(g.values));
    check_weights(w, "gradient-of-node kernel");
    return {block_kernel(g, w, spectrum.num_edges), spec,
            source(spectrum, "gradient block, lambda psi0(lambda)")};
}

KernelMatrix composed_hc_kernel(const SimplicialComplex2& sc, const HodgeSpectrum& spectrum,
                                const ComposedHcKernel& spec)
{
    validate(spec);
    SpectrumFn harmonic;
    harmonic.variance = spec.harmonic_variance;
    Eigen::MatrixXd k = subspace_kernel(spectrum, HodgeBlock::Harmonic, harmonic).matrix;
    k += grad_of_node_kernel(sc, GradOfNodeKernel{spec.node}).matrix;
    if (sc.num_triangles() > 0) {
        const LaplacianSpectrum l2 = laplacian_spectrum(laplacians(sc).l2, "L2");
        const Eigen::VectorXd w = spec.triangle(l2.values);
        check_weights(w, "triangle kernel");
        const Eigen::MatrixXd k2 = spectral_sum(l2.vectors, w);
        const auto& b2 = sc.b2_real();
        Eigen::MatrixXd t = b2 * (k2 * b2.transpose());
        k += 0.5 * (t + t.transpose());
    }
    KernelMatrix out{k, spec, source(spectrum, "K_H + B1^T K0 B1 + B2 K2 B2^T congruence")};
    check_psd(out);
    return out;
}

KernelMatrix hodge_laplacian_pinv_kernel(const HodgeSpectrum& spectrum, double variance)
{
    if (spectrum.truncated) {
        throw UsageError("the Hodge Laplacian pseudoinverse kernel needs the full spectrum");
    }
    if (!std::isfinite(variance) || variance < 0.0) {
        throw UsageError("pseudoinverse kernel variance must be finite and >= 0");
    }
    const Index n = spectrum.num_edges;
    Eigen::MatrixXd k = zeros(n);
    for (auto b : {HodgeBlock::Gradient, HodgeBlock::Curl}) {
        const auto& block = spectrum.block(b);
        const Eigen::VectorXd w = variance * block.values.array().square().inverse().matrix();
        k += block_kernel(block, w, n);
    }
    return {k, HodgeLaplacianPinvKernel{variance}, source(spectrum, "(L1^T L1)^+")};
}

KernelMatrix line_graph_kernel(const LaplacianSpectrum& line_graph, const LineGraphKernel& spec)
{
    spec.fn.validate();
    const Eigen::VectorXd w = spec.fn(line_graph.values);
    check_weights(w, "line-graph kernel");
    return {spectral_sum(line_graph.vectors, w), spec, line_graph.source + " spectral"};
}

Eigen::MatrixXd SpectralForm::dense() const
{
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& t : terms) {
        k += (*t.basis * t.weights.asDiagonal()) * t.basis->transpose();
    }
    return 0.5 * (k + k.transpose());
}

Eigen::MatrixXd SpectralForm::dense(const std::string& label) const
{
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& t : terms) {
        if (t.label == label) {
            k += (*t.basis * t.weights.asDiagonal()) * t.basis->transpose();
        }
    }
    return 0.5 * (k + k.transpose());
}

bool SpectralForm::has_hodge_blocks() const
{
    for (const auto& t : terms) {
        if (t.label != "harmonic" && t.label != "gradient" && t.label != "curl") {
            return false;
        }
    }
    return true;
}

namespace {

class FormBuilder {
public:
    FormBuilder(Index dim, Index num_parameters)
    {
        form_.dim = dim;
        form_.num_parameters = num_parameters;
    }

    /// Term with weights psi(lambda) (times lambda if `times_lambda`), parameters
    /// starting at `offset`.
    void spectrum(const std::string& label, const Eigen::MatrixXd& basis,
                  const Eigen::VectorXd& lambda, const SpectrumFn& fn, Index offset,
                  bool times_lambda = false)
    {
        if (lambda.size() == 0) return;
        SpectralTerm t = start(label, basis, lambda);
        t.weights = fn(lambda);
        const Eigen::MatrixXd jac = fn.jacobian(lambda);
        t.jacobian.middleCols(offset, jac.cols()) = jac;
        if (times_lambda) {
            t.weights = t.weights.cwiseProduct(lambda);
            t.jacobian = lambda.asDiagonal() * t.jacobian;
        }
        finish(std::move(t));
    }

    /// Term with weights variance * profile, where variance is parameter `offset`.
    void scaled(const std::string& label, const Eigen::MatrixXd& basis,
                const Eigen::VectorXd& lambda, const Eigen::VectorXd& profile, double variance,
                Index offset)
    {
        if (lambda.size() == 0) return;
        SpectralTerm t = start(label, basis, lambda);
        t.weights = variance * profile;
        t.jacobian.col(offset) = profile;
        finish(std::move(t));
    }

    SpectralForm take() { return std::move(form_); }

private:
    SpectralTerm start(const std::string& label, const Eigen::MatrixXd& basis,
                       const Eigen::VectorXd& lambda)
    {
        SpectralTerm t;
        t.label = label;
        t.basis = &basis;
        t.eigenvalues = lambda;
        t.jacobian = Eigen::MatrixXd::Zero(lambda.size(), form_.num_parameters);
        return t;
    }

    void finish(SpectralTerm t)
    {
        check_weights(t.weights, t.label + " term");
        form_.terms.push_back(std::move(t));
    }

    SpectralForm form_;
};

const HodgeSpectrum& need_hodge(const KernelSpectra& s, const KernelSpec& spec)
{
    if (s.hodge == nullptr) {
        throw UsageError("kernel " + kernel_kind(spec) + " needs the Hodge spectrum of L1");
    }
    return *s.hodge;
}

}  // namespace

SpectralForm spectral_form(const KernelSpec& spec, const KernelSpectra& spectra)
{
    validate(spec);
    const auto num_params = static_cast<Index>(parameter_names(spec).size());
    auto ones = [](Index n) { return Eigen::VectorXd::Ones(n); };

    return std::visit(
        overloaded{
            [&](const NodeKernel& k) {
                if (spectra.node == nullptr) {
                    throw UsageError("node kernel needs the L0 spectrum");
                }
                FormBuilder b(spectra.node->vectors.rows(), num_params);
                b.spectrum("node", spectra.node->vectors, spectra.node->values, k.fn, 0);
                return b.take();
            },
            [&](const NonHcEdgeKernel& k) {
                const auto& h = need_hodge(spectra, spec);
                FormBuilder b(h.num_edges, num_params);
                b.spectrum("harmonic", h.harmonic.vectors, h.harmonic.values, k.fn, 0);
                b.spectrum("gradient", h.gradient.vectors, h.gradient.values, k.fn, 0);
                b.spectrum("curl", h.curl.vectors, h.curl.values, k.fn, 0);
                return b.take();
            },
            [&](const HcEdgeKernel& k) {
                const auto& h = need_hodge(spectra, spec);
                FormBuilder b(h.num_edges, num_params);
                b.scaled("harmonic", h.harmonic.vectors, h.harmonic.values,
                         ones(h.harmonic.size()), k.harmonic_variance, 0);
                b.spectrum("gradient", h.gradient.vectors, h.gradient.values, k.gradient, 1);
                b.spectrum("curl", h.curl.vectors, h.curl.values, k.curl,
                           1 + k.gradient.num_parameters());
                return b.take();
            },
            [&](const SubspaceKernel& k) {
                const auto& h = need_hodge(spectra, spec);
                const auto& blk = h.block(k.block);
                const std::string label = to_string(k.block);
                FormBuilder b(h.num_edges, num_params);
                if (k.block == HodgeBlock::Harmonic) {
                    b.scaled(label, blk.vectors, blk.values, ones(blk.size()), k.fn.variance, 0);
                } else {
                    b.spectrum(label, blk.vectors, blk.values, k.fn, 0);
                }
                return b.take();
            },
            [&](const GradOfNodeKernel& k) {
                const auto& h = need_hodge(spectra, spec);
                FormBuilder b(h.num_edges, num_params);
                b.spectrum("gradient", h.gradient.vectors, h.gradient.values, k.node, 0, true);
                return b.take();
            },
            [&](const ComposedHcKernel& k) {
                const auto& h = need_hodge(spectra, spec);
                FormBuilder b(h.num_edges, num_params);
                b.scaled("harmonic", h.harmonic.vectors, h.harmonic.values,
                         ones(h.harmonic.size()), k.harmonic_variance, 0);
                b.spectrum("gradient", h.gradient.vectors, h.gradient.values, k.node, 1, true);
                b.spectrum("curl", h.curl.vectors, h.curl.values, k.triangle,
                           1 + k.node.num_parameters(), true);
                return b.take();
            },
            [&](const HodgeLaplacianPinvKernel& k) {
                const auto& h = need_hodge(spectra, spec);
                if (h.truncated) {
                    throw UsageError(
                        "the Hodge Laplacian pseudoinverse kernel needs the full spectrum");
                }
                FormBuilder b(h.num_edges, num_params);
                for (auto blk : {HodgeBlock::Gradient, HodgeBlock::Curl}) {
                    const auto& s = h.block(blk);
                    const Eigen::VectorXd profile = s.values.array().square().inverse();
                    b.scaled(to_string(blk), s.vectors, s.values, profile, k.variance, 0);
                }
                return b.take();
            },
            [&](const LineGraphKernel& k) {
                if (spectra.line_graph == nullptr) {
                    throw UsageError("line-graph kernel needs the line-graph spectrum");
                }
                FormBuilder b(spectra.line_graph->vectors.rows(), num_params);
                b.spectrum("line_graph", spectra.line_graph->vectors, spectra.line_graph->values,
                           k.fn, 0);
                return b.take();
            },
        },
        spec);
}

KernelMatrix build_kernel(const KernelSpec& spec, const KernelSpectra& spectra)
{
    const SpectralForm form = spectral_form(spec, spectra);
    std::string provenance;
    if (std::holds_alternative<LineGraphKernel>(spec)) {
        provenance = spectra.line_graph->source + " spectral";
    } else if (std::holds_alternative<NodeKernel>(spec)) {
        provenance = spectra.node->source + " spectral";
    } else {
        provenance = spectra.hodge->fingerprint() + " spectral";
    }
    return {form.dense(), spec, provenance};
}

}  // namespace hodgegp
