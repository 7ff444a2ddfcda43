// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hodgegp/errors.hpp"
#include "hodgegp/gp.hpp"
#include "support.hpp"

using namespace hodgegp;

namespace {

const double kLog2Pi = std::log(2.0 * M_PI);

SpectrumFn random_fn(Rng& rng)
{
    return SpectrumFn{rng.bernoulli(0.5) ? SpectrumFamily::Matern : SpectrumFamily::Diffusion,
                      0.2 + 2.0 * rng.uniform(), 0.3 + 2.0 * rng.uniform(),
                      0.3 + 3.0 * rng.uniform()};
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

IndexList iota(Index n)
{
    IndexList v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

std::pair<IndexList, IndexList> random_split(Rng& rng, Index n, Index n_train)
{
    auto perm = iota(n);
    rng.shuffle(perm);
    return {IndexList(perm.begin(), perm.begin() + n_train), IndexList(perm.begin() + n_train, perm.end())};
}

SimplicialComplex2 complex_with_hole(Rng& rng, Index min_edges, Index max_edges)
{
    for (;;) {
        auto sc = test::random_test_complex(rng, min_edges, max_edges);
        if (harmonic_basis(sc).cols() > 0) return sc;
    }
}

}  // namespace

TEST_CASE("posterior basics")
{
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    const auto p = posterior(id, {0}, Eigen::VectorXd::Constant(1, 2.0), 1.0, {1});
    CHECK(p.mean[0] == 0.0);
    CHECK(p.variance[0] == doctest::Approx(1.0));

    Eigen::MatrixXd k(3, 3);
    k << 2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 3.0;
    const auto q = posterior(k, {0, 1}, Eigen::Vector2d(1.0, -1.0), 0.1, {2});
    CHECK(q.mean[0] == 0.0);
    CHECK(q.variance[0] == doctest::Approx(3.0));

    // near-interpolation at training points
    Rng rng(1);
    const Eigen::MatrixXd g = rng.normal_matrix(6, 6);
    const Eigen::MatrixXd spd = g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(6, 6);
    const Eigen::VectorXd y = rng.normal_vector(4);
    const auto r = posterior(spd, {0, 1, 2, 3}, y, 1e-10, {0, 1, 2, 3});
    CHECK((r.mean - y).norm() <= 1e-4 * y.norm());
    CHECK_THROWS_AS(posterior(spd, {0, 9}, Eigen::Vector2d(0, 0), 0.1, {1}), UsageError);
    CHECK_THROWS_AS(posterior(spd, {0, 1}, Eigen::Vector3d(0, 0, 0), 0.1, {1}), UsageError);
}

TEST_CASE("posterior against dense inverse")
{
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const auto sc = test::random_test_complex(rng, 6, 20);
        const auto s = eigendecompose(sc);
        const KernelSpec spec = rng.bernoulli(0.5)
                                    ? KernelSpec{HcEdgeKernel{0.5, random_fn(rng), random_fn(rng)}}
                                    : KernelSpec{NonHcEdgeKernel{random_fn(rng)}};
        const Eigen::MatrixXd k = build_kernel(spec, KernelSpectra{&s}).matrix;
        const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
        const Eigen::VectorXd y = rng.normal_vector(static_cast<Index>(train.size()));
        const double noise = 0.05 + rng.uniform();
        const auto got = posterior(k, train, y, noise, test);
        const auto want = test::brute_force_posterior(k, k, train, y, noise, test);
        CHECK(max_abs(got.mean - want.mean) < 1e-8);
        CHECK(max_abs(got.variance - want.variance) < 1e-8);
        for (std::size_t i = 0; i < test.size(); ++i) {
            CHECK(got.variance[static_cast<Index>(i)] <= k(test[i], test[i]) + 1e-8);
            CHECK(got.variance[static_cast<Index>(i)] >= 0.0);
        }
    }
}

TEST_CASE("component posteriors")
{
    Rng rng(3);
    const auto sc = complex_with_hole(rng, 8, 20);
    const auto s = eigendecompose(sc);
    const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
    const Eigen::VectorXd y = rng.normal_vector(static_cast<Index>(train.size()));

    HcEdgeKernel hc{0.0, random_fn(rng), random_fn(rng)};
    hc.curl.variance = 0.0;
    auto p = component_posterior(s, hc, train, y, 0.1, test);
    REQUIRE(p.components);
    CHECK(p.components->mean_curl.isZero(0.0));
    CHECK(p.components->mean_harmonic.isZero(0.0));
    CHECK(max_abs(p.components->mean_gradient - p.mean) < 1e-12);

    // gradient-flow training data with near-zero curl/harmonic priors
    const Cochain f0{0, rng.normal_vector(sc.num_nodes())};
    const Eigen::VectorXd flow = grad(sc, f0).values;
    Eigen::VectorXd yg(static_cast<Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) yg[static_cast<Index>(i)] = flow[train[i]];
    const HcEdgeKernel tiny{1e-8, SpectrumFn{SpectrumFamily::Matern, 1.0, 1.0, 1.0},
                            SpectrumFn{SpectrumFamily::Matern, 1e-8, 1.0, 1.0}};
    p = component_posterior(s, tiny, train, yg, 1e-4, test);
    const auto& c = *p.components;
    CHECK(c.mean_curl.norm() < 1e-3 * c.mean_gradient.norm());
    CHECK(c.mean_harmonic.norm() < 1e-3 * c.mean_gradient.norm());
    const Eigen::MatrixXd k = hc_kernel(s, tiny).matrix;
    const Eigen::MatrixXd kg =
        subspace_kernel(s, HodgeBlock::Gradient, tiny.gradient).matrix;
    const auto want = test::brute_force_posterior(k, kg, train, yg, 1e-4, test);
    CHECK(max_abs(c.mean_gradient - want.mean) < 1e-8);

    // sum identity through the SpectralForm overload
    for (int trial = 0; trial < 10; ++trial) {
        const HcEdgeKernel r{0.2 + rng.uniform(), random_fn(rng), random_fn(rng)};
        const auto form = spectral_form(r, KernelSpectra{&s});
        const auto q = component_posterior(form, train, y, 0.3, test);
        const auto& qc = *q.components;
        CHECK(max_abs(qc.mean_harmonic + qc.mean_gradient + qc.mean_curl - q.mean) <
              1e-8 * std::max(1.0, q.mean.norm()));
    }
    const auto lg = laplacian_spectrum(line_graph_laplacian(sc), "line graph");
    CHECK_THROWS_AS(component_posterior(spectral_form(LineGraphKernel{random_fn(rng)},
                                                      KernelSpectra{&s, nullptr, &lg}),
                                        train, y, 0.3, test),
                    UsageError);
}

TEST_CASE("log marginal likelihood")
{
    CHECK(log_marginal_likelihood(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), 0.0) ==
          doctest::Approx(-1.5 * kLog2Pi));

    Rng rng(4);
    const Eigen::MatrixXd g = rng.normal_matrix(5, 5);
    const Eigen::MatrixXd k = g * g.transpose();
    const Eigen::VectorXd y = rng.normal_vector(5);
    const double noise = 0.3;
    const double c = 2.7;
    const double base = log_marginal_likelihood(k, y, noise);
    const double scaled = log_marginal_likelihood(c * k, std::sqrt(c) * y, c * noise);
    CHECK(scaled - base == doctest::Approx(-2.5 * std::log(c)));

    // explicit density
    const Eigen::MatrixXd cov = k + noise * Eigen::MatrixXd::Identity(5, 5);
    const double direct = -0.5 * y.dot(cov.inverse() * y) - 0.5 * std::log(cov.determinant()) -
                          2.5 * kLog2Pi;
    CHECK(base == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("marginal likelihood gradients with h = 1e-4")
{
    Rng rng(5);
    for (const char* name : {"hc-matern", "hc-diffusion", "matern", "diffusion", "line-graph-matern",
                             "line-graph-diffusion", "grad-of-node", "composed-hc", "hodge-pinv"}) {
        CAPTURE(name);
        const auto sc = test::random_test_complex(rng, 8, 30);
        const auto hodge = eigendecompose(sc);
        const auto lg = laplacian_spectrum(line_graph_laplacian(sc), "line graph");
        const KernelSpectra spectra{&hodge, nullptr, &lg};
        const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
        const MarginalLikelihood lml(kernel_from_name(name), spectra, train,
                                     rng.normal_vector(static_cast<Index>(train.size())));
        CHECK(lml.parameter_names().back() == "noise");
        const Eigen::VectorXd raw = 0.5 * rng.normal_vector(lml.num_parameters());
        const auto ev = lml.evaluate(raw);
        const auto fd = test::finite_difference(
            [&](const Eigen::VectorXd& x) { return lml.evaluate(x, false).value; }, raw, 1e-4);
        CHECK(test::relative_error(ev.gradient, fd) < 1e-4);
        CHECK(ev.noise_variance == doctest::Approx(lml.noise_floor() + softplus(raw[raw.size() - 1])));
    }
}

TEST_CASE("truncated spectrum adds a jitter that the gradient accounts for")
{
    Rng rng(6);
    const auto sc = test::random_test_complex(rng, 30, 60);
    const auto hodge = eigendecompose(sc, sc.num_edges() / 2);
    const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
    const MarginalLikelihood lml(kernel_from_name("hc-matern"), KernelSpectra{&hodge}, train,
                                 rng.normal_vector(static_cast<Index>(train.size())));
    const Eigen::VectorXd raw = 0.5 * rng.normal_vector(lml.num_parameters());
    const auto ev = lml.evaluate(raw);
    CHECK(ev.jitter > 0.0);
    const auto fd = test::finite_difference(
        [&](const Eigen::VectorXd& x) { return lml.evaluate(x, false).value; }, raw);
    CHECK(test::relative_error(ev.gradient, fd) < 1e-5);
}

TEST_CASE("fit is deterministic and decreases the loss")
{
    Rng rng(7);
    const auto sc = test::random_test_complex(rng, 15, 40);
    const auto s = eigendecompose(sc);
    const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
    const Eigen::VectorXd y = rng.normal_vector(static_cast<Index>(train.size()));
    FitConfig cfg;
    cfg.iterations = 200;
    cfg.seed = 99;
    const auto a = fit(kernel_from_name("hc-matern"), KernelSpectra{&s}, train, y, cfg);
    const auto b = fit(kernel_from_name("hc-matern"), KernelSpectra{&s}, train, y, cfg);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.loss_trace.size() == 201);
    CHECK(a.loss_trace.back() <= a.loss_trace.front());
    CHECK(a.fitted);
    CHECK(a.noise_variance >= a.noise_floor);

    cfg.seed = 100;
    const auto c = fit(kernel_from_name("hc-matern"), KernelSpectra{&s}, train, y, cfg);
    CHECK(c.loss_trace != a.loss_trace);

    cfg.fixed_smoothness = true;
    cfg.smoothness = 2.5;
    const auto d = fit(kernel_from_name("matern"), KernelSpectra{&s}, train, y, cfg);
    CHECK(std::get<NonHcEdgeKernel>(d.kernel).fn.smoothness == doctest::Approx(2.5));
}

TEST_CASE("zero targets shrink the prior variance")
{
    Rng rng(8);
    const auto sc = test::random_test_complex(rng, 15, 40);
    const auto s = eigendecompose(sc);
    const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
    FitConfig cfg;
    cfg.iterations = 300;
    cfg.random_init = false;
    const KernelSpec start = NonHcEdgeKernel{SpectrumFn{SpectrumFamily::Matern, 1.0, 1.0, 1.5}};
    const auto m = fit(start, KernelSpectra{&s}, train,
                       Eigen::VectorXd::Zero(static_cast<Index>(train.size())), cfg);
    CHECK(std::get<NonHcEdgeKernel>(m.kernel).fn.variance < 1.0);
}

TEST_CASE("HC fit on curl-free data suppresses curl and harmonic blocks")
{
    Rng rng(9);
    const auto sc = complex_with_hole(rng, 30, 60);
    const auto s = eigendecompose(sc);
    const Cochain f0{0, 1.5 * rng.normal_vector(sc.num_nodes())};
    const Eigen::VectorXd flow = grad(sc, f0).values;
    const auto [train, test] = random_split(rng, sc.num_edges(), sc.num_edges() / 2);
    Eigen::VectorXd y(static_cast<Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) y[static_cast<Index>(i)] = flow[train[i]];

    FitConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.seed = 1;
    const auto m = fit(kernel_from_name("hc-matern"), KernelSpectra{&s}, train, y, cfg);
    const auto form = spectral_form(m.kernel, KernelSpectra{&s});
    double wh = 0.0;
    double wg = 0.0;
    double wc = 0.0;
    for (const auto& t : form.terms) {
        const double w = t.weights.size() ? t.weights.mean() : 0.0;
        (t.label == "harmonic" ? wh : t.label == "gradient" ? wg : wc) = w;
    }
    CHECK(wc < 0.05 * wg);
    CHECK(wh < 0.05 * wg);

    Eigen::VectorXd truth(static_cast<Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) truth[static_cast<Index>(i)] = flow[test[i]];
    const auto pred = m.predict(KernelSpectra{&s}, test, true);
    CHECK(metrics(pred, truth).rmse < 0.05 * std::sqrt(truth.squaredNorm() / truth.size()));
    REQUIRE(pred.components);
    CHECK(max_abs(pred.components->mean_gradient - pred.mean) < 1e-2 * pred.mean.norm());
}

TEST_CASE("prior samples")
{
    Rng rng(10);
    const auto sc = complex_with_hole(rng, 15, 30);
    const auto s = eigendecompose(sc);
    const KernelSpectra spectra{&s};

    const HcEdgeKernel zero{0.0, SpectrumFn{SpectrumFamily::Matern, 0.0}, SpectrumFn{SpectrumFamily::Diffusion, 0.0}};
    CHECK(sample_prior(zero, spectra, 1, 5).isZero(0.0));

    const HcEdgeKernel hc{0.7, SpectrumFn{SpectrumFamily::Matern, 2.0, 1.2, 1.1},
                          SpectrumFn{SpectrumFamily::Diffusion, 1.5, 0.6}};
    const Index count = 10000;
    const Eigen::MatrixXd x = sample_prior(hc, spectra, 42, count);
    CHECK(x == sample_prior(hc, spectra, 42, count));
    const Eigen::MatrixXd k = hc_kernel(s, hc).matrix;
    const Eigen::VectorXd var = x.rowwise().squaredNorm() / static_cast<double>(count);
    for (Index e = 0; e < sc.num_edges(); ++e) {
        CHECK(std::abs(var[e] - k(e, e)) < 0.1 * k(e, e));
    }

    const HodgeDecomposer dec(sc);
    double eh = 0.0;
    double eg = 0.0;
    double ec = 0.0;
    for (Index j = 0; j < count; ++j) {
        const auto p = dec.decompose(x.col(j));
        eh += p.harmonic.squaredNorm();
        eg += p.gradient.squaredNorm();
        ec += p.curl.squaredNorm();
    }
    const double n1 = static_cast<double>(sc.num_edges() * count);
    const auto tr = [&](HodgeBlock b, const SpectrumFn& fn) {
        return subspace_kernel(s, b, fn).matrix.trace() / static_cast<double>(sc.num_edges());
    };
    CHECK(std::abs(eh / n1 - tr(HodgeBlock::Harmonic, SpectrumFn{SpectrumFamily::Matern, 0.7})) <
          0.15 * tr(HodgeBlock::Harmonic, SpectrumFn{SpectrumFamily::Matern, 0.7}));
    CHECK(std::abs(eg / n1 - tr(HodgeBlock::Gradient, hc.gradient)) <
          0.15 * tr(HodgeBlock::Gradient, hc.gradient));
    CHECK(std::abs(ec / n1 - tr(HodgeBlock::Curl, hc.curl)) < 0.15 * tr(HodgeBlock::Curl, hc.curl));

    const Eigen::MatrixXd grads = sample_prior(
        SubspaceKernel{HodgeBlock::Gradient, SpectrumFn{}}, KernelSpectra{&s}, 3, 100);
    for (Index j = 0; j < grads.cols(); ++j) {
        CHECK((sc.b2_real().transpose() * grads.col(j)).norm() < 1e-6 * grads.col(j).norm());
    }
}

TEST_CASE("metrics")
{
    PosteriorResult p;
    p.mean = Eigen::Vector3d(1.0, 2.0, 3.0);
    p.variance = Eigen::Vector3d::Ones();
    p.noise_variance = 0.0;
    auto m = metrics(p, p.mean);
    CHECK(m.rmse == 0.0);
    CHECK(m.nlpd == doctest::Approx(0.5 * kLog2Pi));

    p.variance = Eigen::Vector3d::Constant(3.0);
    p.noise_variance = 1.0;
    m = metrics(p, p.mean + Eigen::Vector3d(2.0, -2.0, 2.0));
    CHECK(m.rmse == doctest::Approx(2.0));
    CHECK(m.nlpd == doctest::Approx(0.5 * std::log(2 * M_PI * 4.0) + 0.5));

    p.variance = Eigen::Vector3d::Ones();
    p.noise_variance = 0.0;
    m = metrics(p, p.mean.array() - 0.7);
    CHECK(m.rmse == doctest::Approx(0.7));

    PosteriorResult empty;
    CHECK_THROWS_AS(metrics(empty, Eigen::VectorXd()), UsageError);
    p.variance = Eigen::Vector3d::Zero();
    CHECK_THROWS_AS(metrics(p, p.mean), NumericalError);
}
