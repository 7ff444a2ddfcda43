// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hodgegp/errors.hpp"
#include "hodgegp/kernels.hpp"
#include "support.hpp"

using namespace hodgegp;

namespace {

using E = std::array<NodeLabel, 2>;
using T = std::array<NodeLabel, 3>;

NodeLabel n(std::int64_t i) { return NodeLabel{i}; }

SimplicialComplex2 triangle(bool filled)
{
    std::vector<T> tris;
    if (filled) tris.push_back(T{n(1), n(2), n(3)});
    return build_complex({n(1), n(2), n(3)}, {E{n(1), n(2)}, E{n(1), n(3)}, E{n(2), n(3)}}, tris);
}

SpectrumFn matern(double var, double kappa, double nu)
{
    return SpectrumFn{SpectrumFamily::Matern, var, kappa, nu};
}

SpectrumFn diffusion(double var, double kappa)
{
    return SpectrumFn{SpectrumFamily::Diffusion, var, kappa, 1.5};
}

SpectrumFn random_fn(Rng& rng)
{
    return SpectrumFn{rng.bernoulli(0.5) ? SpectrumFamily::Matern : SpectrumFamily::Diffusion,
                      0.2 + 2.0 * rng.uniform(), 0.3 + 2.0 * rng.uniform(),
                      0.3 + 3.0 * rng.uniform()};
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// U diag(psi(lambda)) U^T from an independent dense eigensolve.
Eigen::MatrixXd spectral_function(const Eigen::MatrixXd& lap, const SpectrumFn& fn)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    Eigen::VectorXd w(es.eigenvalues().size());
    for (Index i = 0; i < w.size(); ++i) w[i] = fn(std::max(0.0, es.eigenvalues()[i]));
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("spectrum functions")
{
    CHECK(matern(1.0, std::sqrt(2.0), 1.0)(1.0) == doctest::Approx(0.5));
    CHECK(diffusion(2.5, 0.0)(7.0) == 2.5);
    CHECK(diffusion(1.0, 2.0)(0.5) == doctest::Approx(std::exp(-1.0)));

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const SpectrumFn fn = random_fn(rng);
        double prev = fn(0.0);
        CHECK(prev > 0.0);
        for (double l = 0.25; l < 30.0; l += 0.25) {
            const double v = fn(l);
            CHECK(v > 0.0);
            CHECK(v <= prev);
            prev = v;
        }
    }

    // large nu with 2nu/kappa^2 held at 2: still non-increasing
    for (double nu : {5.0, 20.0, 80.0}) {
        const SpectrumFn fn = matern(1.0, std::sqrt(nu), nu);
        CHECK(fn(1.0) < fn(0.5));
    }

    CHECK_THROWS_AS(matern(-1.0, 1.0, 1.0).validate(), UsageError);
    CHECK_THROWS_AS(matern(1.0, 0.0, 1.0).validate(), UsageError);
    CHECK_THROWS_AS(matern(1.0, 1.0, 0.0).validate(), UsageError);
    CHECK_NOTHROW(diffusion(1.0, 0.0).validate());
    CHECK_THROWS_AS(diffusion(1.0, -0.5).validate(), UsageError);
}

TEST_CASE("spectrum function jacobian against finite differences")
{
    Rng rng(7);
    Eigen::VectorXd lambda(6);
    lambda << 0.0, 0.3, 1.0, 2.5, 7.0, 20.0;
    for (int trial = 0; trial < 20; ++trial) {
        const SpectrumFn fn = random_fn(rng);
        const Eigen::MatrixXd j = fn.jacobian(lambda);
        REQUIRE(j.cols() == fn.num_parameters());
        for (int p = 0; p < fn.num_parameters(); ++p) {
            SpectrumFn a = fn;
            SpectrumFn b = fn;
            const double h = 1e-6;
            double* pa = p == 0 ? &a.variance : p == 1 ? &a.lengthscale : &a.smoothness;
            double* pb = p == 0 ? &b.variance : p == 1 ? &b.lengthscale : &b.smoothness;
            *pa += h;
            *pb -= h;
            const Eigen::VectorXd fd = (a(lambda) - b(lambda)) / (2 * h);
            CHECK(test::relative_error(j.col(p), fd) < 1e-6);
        }
    }
}

TEST_CASE("node kernels")
{
    const auto sc = test::fig1a();
    const auto l0 = laplacian_spectrum(laplacians(sc).l0, "L0");
    const auto k = node_kernel(l0, NodeKernel{diffusion(1.7, 0.0)}).matrix;
    CHECK(max_abs(k - 1.7 * Eigen::MatrixXd::Identity(7, 7)) < 1e-12);

    const auto single = laplacian_spectrum(Eigen::MatrixXd::Zero(1, 1), "L0");
    const SpectrumFn fn = matern(2.0, 0.7, 1.3);
    CHECK(node_kernel(single, NodeKernel{fn}).matrix(0, 0) == doctest::Approx(fn(0.0)));

    const SpectrumFn m = matern(0.9, 1.2, 2.0);
    CHECK(max_abs(node_kernel(l0, NodeKernel{m}).matrix - spectral_function(laplacians(sc).l0, m)) <
          1e-12);
}

TEST_CASE("non-HC edge kernel")
{
    const auto s = eigendecompose(triangle(true));
    const auto k = non_hc_edge_kernel(s, NonHcEdgeKernel{matern(1.0, std::sqrt(2.0), 1.0)}).matrix;
    CHECK(max_abs(k - 0.25 * Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
    CHECK(max_abs(non_hc_edge_kernel(s, NonHcEdgeKernel{diffusion(0.6, 0.0)}).matrix -
                  0.6 * Eigen::MatrixXd::Identity(3, 3)) < 1e-12);

    const auto sc = test::fig1a();
    const SpectrumFn m = matern(1.3, 0.8, 1.7);
    CHECK(max_abs(non_hc_edge_kernel(eigendecompose(sc), NonHcEdgeKernel{m}).matrix -
                  spectral_function(laplacians(sc).l1, m)) < 1e-12);
}

TEST_CASE("subspace kernels")
{
    const auto filled = eigendecompose(triangle(true));
    CHECK(subspace_kernel(filled, HodgeBlock::Harmonic, matern(1.0, 1.0, 1.0)).matrix.isZero(0.0));

    const auto open = eigendecompose(triangle(false));
    const auto kh = subspace_kernel(open, HodgeBlock::Harmonic, matern(1.0, 1.0, 1.0)).matrix;
    const Eigen::Vector3d v(1, -1, 1);
    CHECK(max_abs(kh - v * v.transpose() / 3.0) < 1e-12);

    const auto s = eigendecompose(test::fig1a());
    const auto kg = subspace_kernel(s, HodgeBlock::Gradient, matern(1.0, 1.0, 2.0)).matrix;
    CHECK(max_abs(kg * s.curl.vectors) < 1e-12);
    CHECK(max_abs(kg * s.harmonic.vectors) < 1e-12);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kg);
    CHECK(lu.rank() == s.gradient.size());
}

TEST_CASE("HC kernel")
{
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sc = test::random_test_complex(rng, 6, 60);
        const auto s = eigendecompose(sc);
        SpectrumFn fn = random_fn(rng);
        const HcEdgeKernel same{fn(0.0), fn, fn};
        CHECK(max_abs(hc_kernel(s, same).matrix - non_hc_edge_kernel(s, NonHcEdgeKernel{fn}).matrix) <
              1e-8);

        HcEdgeKernel harmonic_only{0.8, fn, fn};
        harmonic_only.gradient.variance = 0.0;
        harmonic_only.curl.variance = 0.0;
        const auto kh = subspace_kernel(s, HodgeBlock::Harmonic, SpectrumFn{fn.family, 0.8}).matrix;
        CHECK(max_abs(hc_kernel(s, harmonic_only).matrix - kh) < 1e-14);
    }

    const auto s = eigendecompose(test::fig1a());
    for (int trial = 0; trial < 10; ++trial) {
        const HcEdgeKernel hc{0.1 + rng.uniform(), random_fn(rng), random_fn(rng)};
        const auto k = hc_kernel(s, hc);
        CHECK_NOTHROW(check_psd(k));
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k.matrix).eigenvalues();
        CHECK(ev.minCoeff() >= -1e-8 * ev.maxCoeff());
        // full rank with all three blocks switched on
        CHECK(ev.minCoeff() > 0.0);
    }
}

TEST_CASE("check_psd rejects asymmetric and indefinite matrices")
{
    KernelMatrix k;
    k.matrix = Eigen::Matrix2d{{1.0, 0.5}, {0.4, 1.0}};
    CHECK_THROWS_AS(check_psd(k), NumericalError);
    k.matrix = Eigen::Matrix2d{{1.0, 2.0}, {2.0, 1.0}};
    CHECK_THROWS_AS(check_psd(k), NumericalError);
    k.matrix = Eigen::Matrix2d{{2.0, 1.0}, {1.0, 2.0}};
    CHECK_NOTHROW(check_psd(k));
}

TEST_CASE("gradient of a node GP")
{
    const auto sc = triangle(true);
    const auto s = eigendecompose(sc);
    const GradOfNodeKernel g{matern(1.0, std::sqrt(2.0), 1.0)};
    const auto form = spectral_form(g, KernelSpectra{&s});
    REQUIRE(form.terms.size() == 1);
    CHECK(form.terms[0].label == "gradient");
    for (Index i = 0; i < form.terms[0].weights.size(); ++i) {
        CHECK(form.terms[0].weights[i] == doctest::Approx(0.75));
    }
    CHECK(max_abs(grad_of_node_kernel(s, g).matrix - 0.75 * s.gradient.vectors *
                                                         s.gradient.vectors.transpose()) < 1e-12);
    CHECK(max_abs(grad_of_node_kernel(sc, g).matrix - grad_of_node_kernel(s, g).matrix) < 1e-12);

    // a constant node function has zero gradient
    CHECK((sc.b1_real().transpose() * Eigen::VectorXd::Ones(3)).isZero(0.0));

    Rng rng(13);
    const auto fig = test::fig1a();
    const auto fs = eigendecompose(fig);
    for (int trial = 0; trial < 10; ++trial) {
        const GradOfNodeKernel r{random_fn(rng)};
        const Eigen::MatrixXd a = grad_of_node_kernel(fig, r).matrix;
        const Eigen::MatrixXd b = grad_of_node_kernel(fs, r).matrix;
        CHECK(max_abs(a - b) < 1e-10);
        CHECK(max_abs(a * fs.curl.vectors) < 1e-10);
        CHECK(max_abs(a * fs.harmonic.vectors) < 1e-10);
        // B1^T K0 B1 with K0 from an independent eigensolve
        const Eigen::MatrixXd b1 = fig.b1_real();
        const Eigen::MatrixXd k0 = spectral_function(laplacians(fig).l0, r.node);
        CHECK(max_abs(a - b1.transpose() * k0 * b1) < 1e-10);
    }
}

TEST_CASE("composed HC kernel")
{
    Rng rng(17);
    const auto filled = triangle(true);
    const auto fs = eigendecompose(filled);
    const SpectrumFn tri = matern(1.4, 0.9, 1.2);
    const double c = tri(3.0);
    ComposedHcKernel only_curl{0.0, matern(0.0, 1.0, 1.0), tri};
    const Eigen::Vector3d v(1, -1, 1);
    const auto k = composed_hc_kernel(filled, fs, only_curl).matrix;
    CHECK(max_abs(k - c * v * v.transpose()) < 1e-12);
    CHECK(max_abs(k * fs.gradient.vectors) < 1e-12);
    CHECK(max_abs(build_kernel(only_curl, KernelSpectra{&fs}).matrix - k) < 1e-12);

    // without triangles only the harmonic and gradient parts remain
    const auto open = triangle(false);
    const auto os = eigendecompose(open);
    const ComposedHcKernel comp{0.6, random_fn(rng), random_fn(rng)};
    const Eigen::MatrixXd expected =
        subspace_kernel(os, HodgeBlock::Harmonic, SpectrumFn{SpectrumFamily::Matern, 0.6}).matrix +
        grad_of_node_kernel(open, GradOfNodeKernel{comp.node}).matrix;
    CHECK(max_abs(composed_hc_kernel(open, os, comp).matrix - expected) < 1e-12);

    const auto fig = test::fig1a();
    const auto s = eigendecompose(fig);
    for (int trial = 0; trial < 10; ++trial) {
        const ComposedHcKernel r{0.1 + rng.uniform(), random_fn(rng), random_fn(rng)};
        const Eigen::MatrixXd a = composed_hc_kernel(fig, s, r).matrix;
        const Eigen::MatrixXd b = build_kernel(r, KernelSpectra{&s}).matrix;
        CHECK(max_abs(a - b) < 1e-10);
        const Eigen::MatrixXd b2 = fig.b2_real();
        const Eigen::MatrixXd k2 = spectral_function(laplacians(fig).l2, r.triangle);
        const Eigen::MatrixXd curl_part = b2 * k2 * b2.transpose();
        const Eigen::MatrixXd grad_part =
            grad_of_node_kernel(fig, GradOfNodeKernel{r.node}).matrix;
        const Eigen::MatrixXd harm =
            r.harmonic_variance * s.harmonic.vectors * s.harmonic.vectors.transpose();
        CHECK(max_abs(a - (harm + grad_part + curl_part)) < 1e-10);
    }
}

TEST_CASE("Hodge Laplacian pseudoinverse kernel")
{
    const auto filled = eigendecompose(triangle(true));
    CHECK(max_abs(hodge_laplacian_pinv_kernel(filled).matrix - Eigen::MatrixXd::Identity(3, 3) / 9.0) <
          1e-12);

    const auto sc = test::fig1a();
    const auto s = eigendecompose(sc);
    const Eigen::MatrixXd k = hodge_laplacian_pinv_kernel(s).matrix;
    CHECK(max_abs(k * s.harmonic.vectors) < 1e-12);
    const Eigen::MatrixXd l1 = laplacians(sc).l1;
    Rng rng(19);
    Eigen::VectorXd u = rng.normal_vector(10);
    u -= s.harmonic.vectors * (s.harmonic.vectors.transpose() * u);
    CHECK((k * l1.transpose() * l1 * u - u).norm() < 1e-10 * u.norm());
    const Eigen::MatrixXd pinv =
        (l1.transpose() * l1).completeOrthogonalDecomposition().pseudoInverse();
    CHECK(max_abs(k - pinv) < 1e-10);
    CHECK(max_abs(hodge_laplacian_pinv_kernel(s, 2.5).matrix - 2.5 * k) < 1e-12);
    CHECK_THROWS_AS(hodge_laplacian_pinv_kernel(eigendecompose(sc, 4)), UsageError);
}

TEST_CASE("line graph kernel")
{
    const auto sc = test::fig1a();
    const Eigen::MatrixXd llg = line_graph_laplacian(sc);
    const auto spec = laplacian_spectrum(llg, "line graph");
    const SpectrumFn m = matern(1.1, 1.3, 0.9);
    CHECK(max_abs(line_graph_kernel(spec, LineGraphKernel{m}).matrix - spectral_function(llg, m)) <
          1e-12);
    CHECK(max_abs(line_graph_kernel(spec, LineGraphKernel{diffusion(0.4, 0.0)}).matrix -
                  0.4 * Eigen::MatrixXd::Identity(10, 10)) < 1e-12);
}

TEST_CASE("spectral forms and parameters")
{
    const auto sc = test::fig1a();
    const auto hodge = eigendecompose(sc);
    const auto l0 = laplacian_spectrum(laplacians(sc).l0, "L0");
    const auto lg = laplacian_spectrum(line_graph_laplacian(sc), "line graph");
    const KernelSpectra spectra{&hodge, &l0, &lg};
    Rng rng(23);

    for (const char* name : {"hc-matern", "hc-diffusion", "matern", "diffusion", "line-graph-matern",
                             "line-graph-diffusion", "grad-of-node", "composed-hc", "hodge-pinv"}) {
        CAPTURE(name);
        const KernelSpec base = kernel_from_name(name);
        CHECK(is_edge_kernel(base));
        const auto names = parameter_names(base);
        Eigen::VectorXd values(static_cast<Index>(names.size()));
        for (Index i = 0; i < values.size(); ++i) values[i] = 0.3 + 1.5 * rng.uniform();
        const KernelSpec spec = with_parameter_values(base, values);
        CHECK((parameter_values(spec) - values).norm() == 0.0);

        const KernelSpec back = kernel_spec_from_json(to_json(spec));
        CHECK(to_json(back) == to_json(spec));
        CHECK(kernel_kind(back) == kernel_kind(spec));

        const auto form = spectral_form(spec, spectra);
        CHECK(form.num_parameters == values.size());
        CHECK(form.dim == 10);
        const auto k = build_kernel(spec, spectra);
        CHECK_NOTHROW(check_psd(k));
        CHECK(max_abs(form.dense() - k.matrix) < 1e-14);

        // weight jacobians against finite differences
        for (Index p = 0; p < values.size(); ++p) {
            Eigen::VectorXd a = values;
            Eigen::VectorXd b = values;
            a[p] += 1e-6;
            b[p] -= 1e-6;
            const auto fa = spectral_form(with_parameter_values(spec, a), spectra);
            const auto fb = spectral_form(with_parameter_values(spec, b), spectra);
            for (std::size_t t = 0; t < form.terms.size(); ++t) {
                const Eigen::VectorXd fd = (fa.terms[t].weights - fb.terms[t].weights) / 2e-6;
                CHECK(test::relative_error(form.terms[t].jacobian.col(p), fd) < 1e-6);
            }
        }
    }

    const auto smooth = smoothness_parameters(kernel_from_name("hc-matern"));
    CHECK(std::count(smooth.begin(), smooth.end(), true) == 2);
    CHECK_THROWS_AS(kernel_from_name("rbf"), UsageError);
    CHECK_THROWS_AS(spectral_form(kernel_from_name("line-graph-matern"), KernelSpectra{&hodge}),
                    UsageError);
    CHECK_FALSE(is_edge_kernel(NodeKernel{}));
}

TEST_CASE("softplus")
{
    for (double x : {-30.0, -2.0, 0.0, 0.5, 3.0, 40.0}) {
        CHECK(softplus(x) > 0.0);
        CHECK(inverse_softplus(softplus(x)) == doctest::Approx(x).epsilon(1e-9));
    }
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(sigmoid(0.0) == 0.5);
}
