// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <sstream>

#include <CLI11.hpp>

#include "hodgegp/errors.hpp"
#include "hodgegp/io.hpp"
#include "hodgegp/random.hpp"
#include "hodgegp/spectral.hpp"

namespace hodgegp::cli {

namespace fs = std::filesystem;

nlohmann::json RunConfig::to_json() const
{
    nlohmann::json j = {{"command", command},
                        {"complex", complex_path},
                        {"flow", flow_path},
                        {"dataset", dataset_dir},
                        {"kernel", kernel},
                        {"kernel_spec", kernel_spec_path},
                        {"orientation", orientation},
                        {"train_ratio", train_ratio},
                        {"restarts", restarts},
                        {"iters", iters},
                        {"lr", lr},
                        {"seed", seed},
                        {"components", components},
                        {"select_best", select_best},
                        {"fixed_nu", fixed_nu},
                        {"nu", nu},
                        {"out", out_dir}};
    j["truncate"] = truncate ? nlohmann::json(*truncate) : nlohmann::json(nullptr);
    return j;
}

KernelSpectra PreparedSpectra::view() const
{
    KernelSpectra s;
    s.hodge = &hodge;
    if (line_graph) s.line_graph = &*line_graph;
    return s;
}

PreparedSpectra prepare_spectra(const SimplicialComplex2& sc, const KernelSpec& kernel,
                                std::optional<Index> truncate)
{
    if (!is_edge_kernel(kernel)) {
        throw UsageError("node kernels do not model edge flows");
    }
    PreparedSpectra p;
    p.hodge = eigendecompose(sc, truncate);
    if (std::holds_alternative<LineGraphKernel>(kernel)) {
        p.line_graph = laplacian_spectrum(line_graph_laplacian(sc), "line graph");
    }
    return p;
}

nlohmann::json block_weights(const SpectralForm& form)
{
    if (!form.has_hodge_blocks()) {
        return nullptr;
    }
    nlohmann::json j = {{"harmonic", 0.0}, {"gradient", 0.0}, {"curl", 0.0}};
    for (const auto& t : form.terms) {
        if (t.weights.size() > 0) j[t.label] = t.weights.mean();
    }
    return j;
}

namespace {

nlohmann::json mean_std(const std::vector<double>& v)
{
    if (v.empty()) return {{"mean", nullptr}, {"std", nullptr}};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {{"mean", mean}, {"std", std::sqrt(var)}};
}

nlohmann::json parameter_json(const GPModel& m)
{
    nlohmann::json j;
    const Eigen::VectorXd values = parameter_values(m.kernel);
    for (Index p = 0; p < values.size(); ++p) {
        j[m.parameter_names[static_cast<std::size_t>(p)]] = values[p];
    }
    j["noise"] = m.noise_variance;
    return j;
}

}  // namespace

FitPredictReport fit_predict(const Dataset& dataset, const KernelSpec& kernel,
                             const RunConfig& config, const PreparedSpectra& spectra)
{
    if (config.restarts < 1) {
        throw UsageError("restarts must be >= 1");
    }
    const KernelSpectra view = spectra.view();
    FitPredictReport report;
    nlohmann::json rows = nlohmann::json::array();
    std::vector<double> rmse;
    std::vector<double> nlpd;

    for (int r = 0; r < config.restarts; ++r) {
        RestartOutcome o;
        o.restart = r;
        o.split_seed = Rng::derive(config.seed, 2 * static_cast<std::uint64_t>(r)).next();
        o.init_seed = Rng::derive(config.seed, 2 * static_cast<std::uint64_t>(r) + 1).next();
        const Dataset d =
            dataset.has_split() ? dataset : split(dataset, config.train_ratio, o.split_seed);
        o.train = d.train_indices();
        o.test = d.test_indices();
        const Eigen::VectorXd y = d.observations(o.train);
        nlohmann::json row = {{"restart", r},
                              {"split_seed", o.split_seed},
                              {"init_seed", o.init_seed},
                              {"num_train", o.train.size()},
                              {"num_test", o.test.size()}};
        try {
            FitConfig fc;
            fc.iterations = config.iters;
            fc.learning_rate = config.lr;
            fc.seed = o.init_seed;
            fc.fixed_smoothness = config.fixed_nu;
            fc.smoothness = config.nu;
            o.model = fit(kernel, view, o.train, y, fc);
            const PosteriorResult pred = o.model.predict(view, o.test);
            o.metrics = metrics(pred, d.observations(o.test));
            if (!std::isfinite(o.metrics.rmse) || !std::isfinite(o.metrics.nlpd)) {
                throw NumericalError("non-finite test metrics");
            }
            o.ok = true;
            rmse.push_back(o.metrics.rmse);
            nlpd.push_back(o.metrics.nlpd);
            row["status"] = "ok";
            row["rmse"] = o.metrics.rmse;
            row["nlpd"] = o.metrics.nlpd;
            row["initial_loss"] = o.model.loss_trace.front();
            row["final_loss"] = o.model.loss_trace.back();
            row["parameters"] = parameter_json(o.model);
            row["block_weights"] = block_weights(spectral_form(o.model.kernel, view));
        } catch (const NumericalError& e) {
            o.ok = false;
            o.error = e.what();
            row["status"] = "failed";
            row["error"] = o.error;
        }
        rows.push_back(row);
        report.restarts.push_back(std::move(o));
    }

    for (std::size_t i = 0; i < report.restarts.size(); ++i) {
        const auto& o = report.restarts[i];
        if (!o.ok) continue;
        if (report.selected < 0) {
            report.selected = static_cast<int>(i);
            if (!config.select_best) break;
        } else if (o.model.loss_trace.back() <
                   report.restarts[static_cast<std::size_t>(report.selected)]
                       .model.loss_trace.back()) {
            report.selected = static_cast<int>(i);
        }
    }

    const auto succeeded = static_cast<int>(rmse.size());
    report.results = {
        {"command", "fit-predict"},
        {"kernel", config.kernel},
        {"kernel_spec", to_json(kernel)},
        {"config", config.to_json()},
        {"dataset", dataset.provenance},
        {"spectrum", spectra.hodge.fingerprint()},
        {"restarts", rows},
        {"aggregate",
         {{"rmse", mean_std(rmse)},
          {"nlpd", mean_std(nlpd)},
          {"succeeded", succeeded},
          {"failed", config.restarts - succeeded}}},
        {"selected_restart", report.selected >= 0 ? nlohmann::json(report.selected) : nullptr},
        {"selection", config.select_best ? "lowest final loss" : "first successful"}};
    return report;
}

namespace {

Dataset load_input(const RunConfig& c)
{
    if (!c.dataset_dir.empty()) {
        return read_dataset(c.dataset_dir);
    }
    if (c.complex_path.empty() || c.flow_path.empty()) {
        throw UsageError("give --dataset, or both --complex and --flow");
    }
    OrientationPolicy policy = OrientationPolicy::Resign;
    if (c.orientation == "strict") {
        policy = OrientationPolicy::Strict;
    } else if (c.orientation != "resign") {
        throw UsageError("--orientation must be resign or strict");
    }
    return load_flow_csv(c.complex_path, c.flow_path, policy);
}

KernelSpec load_kernel(const RunConfig& c)
{
    if (!c.kernel_spec_path.empty()) {
        return kernel_spec_from_json(read_json(c.kernel_spec_path));
    }
    return kernel_from_name(c.kernel);
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw UsageError("cannot create output directory " + dir + ": " + ec.message());
    }
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    return out;
}

int cmd_decompose(const RunConfig& c, std::ostream& out)
{
    if (c.complex_path.empty() || c.flow_path.empty()) {
        throw UsageError("decompose needs --complex and --flow");
    }
    const SimplicialComplex2 sc = read_complex(c.complex_path);
    const Cochain f = read_cochain(sc, 1, c.flow_path);
    const HodgeComponents parts = hodge_decompose(sc, f);
    const Eigen::VectorXd recon = parts.harmonic + parts.gradient + parts.curl;

    ensure_dir(c.out_dir);
    auto csv = open_out(fs::path(c.out_dir) / "components.csv");
    csv << "simplex,value,harmonic,gradient,curl,reconstruction\n";
    for (Index e = 0; e < sc.num_edges(); ++e) {
        csv << sc.edge_name(e) << "," << format_double(f.values[e]) << ","
            << format_double(parts.harmonic[e]) << "," << format_double(parts.gradient[e]) << ","
            << format_double(parts.curl[e]) << "," << format_double(recon[e]) << "\n";
    }

    const double total = f.values.squaredNorm();
    const double norm = std::sqrt(total);
    nlohmann::json energy;
    if (total > 0.0) {
        energy = {{"harmonic", parts.harmonic.squaredNorm() / total},
                  {"gradient", parts.gradient.squaredNorm() / total},
                  {"curl", parts.curl.squaredNorm() / total},
                  {"reconstruction_error", (recon - f.values).norm() / norm},
                  {"orthogonality",
                   std::max({std::abs(parts.harmonic.dot(parts.gradient)),
                             std::abs(parts.harmonic.dot(parts.curl)),
                             std::abs(parts.gradient.dot(parts.curl))}) /
                       total}};
    } else {
        energy = {{"harmonic", 0.0}, {"gradient", 0.0},           {"curl", 0.0},
                  {"reconstruction_error", 0.0}, {"orthogonality", 0.0}};
    }
    energy["total_energy"] = total;
    write_json(fs::path(c.out_dir) / "energy.json", energy);
    out << "energy harmonic=" << energy["harmonic"].get<double>()
        << " gradient=" << energy["gradient"].get<double>()
        << " curl=" << energy["curl"].get<double>() << "\n";
    return kOk;
}

int cmd_fit_predict(const RunConfig& c, std::ostream& out)
{
    const Dataset dataset = load_input(c);
    const KernelSpec kernel = load_kernel(c);
    const PreparedSpectra spectra = prepare_spectra(dataset.complex, kernel, c.truncate);
    const KernelSpectra view = spectra.view();
    if (c.components && !spectral_form(kernel, view).has_hodge_blocks()) {
        throw UsageError("--components needs a kernel built from Hodge subspaces");
    }

    const auto start = std::chrono::steady_clock::now();
    const FitPredictReport report = fit_predict(dataset, kernel, c, spectra);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ensure_dir(c.out_dir);
    const fs::path dir(c.out_dir);
    write_json(dir / "run_config.json", c.to_json());
    write_json(dir / "results.json", report.results);

    if (report.selected >= 0) {
        const auto& best = report.restarts[static_cast<std::size_t>(report.selected)];
        const Index n1 = dataset.complex.num_edges();
        IndexList all(static_cast<std::size_t>(n1));
        std::vector<std::string> labels(static_cast<std::size_t>(n1), "unobserved");
        for (Index e = 0; e < n1; ++e) {
            all[static_cast<std::size_t>(e)] = e;
            if (dataset.observed[static_cast<std::size_t>(e)]) {
                labels[static_cast<std::size_t>(e)] = "test";
            }
        }
        for (Index e : best.train) labels[static_cast<std::size_t>(e)] = "train";
        const PosteriorResult pred = best.model.predict(view, all, c.components);
        write_predictions_csv(dataset.complex, pred, labels, dir / "predictions.csv");
        write_kernel_spectrum_csv(spectral_form(best.model.kernel, view),
                                  dir / "kernel_spectrum.csv");
        write_json(dir / "checkpoint.json", checkpoint_to_json(best.model));
    }

    const auto& agg = report.results["aggregate"];
    out << "fit-predict " << c.kernel << ": " << agg["succeeded"].get<int>() << "/"
        << c.restarts << " restarts ok";
    if (agg["succeeded"].get<int>() > 0) {
        out << ", rmse " << agg["rmse"]["mean"].get<double>() << " +- "
            << agg["rmse"]["std"].get<double>() << ", nlpd " << agg["nlpd"]["mean"].get<double>()
            << " +- " << agg["nlpd"]["std"].get<double>();
    }
    out << " (" << seconds << " s)\n";

    const int failed = agg["failed"].get<int>();
    if (failed == c.restarts) return kNumerical;
    if (failed > 0) return kPartialFailure;
    return kOk;
}

int cmd_sample(const RunConfig& c, Index count, std::ostream& out)
{
    if (c.complex_path.empty()) {
        throw UsageError("sample needs --complex");
    }
    const SimplicialComplex2 sc = read_complex(c.complex_path);
    const KernelSpec kernel = load_kernel(c);
    const PreparedSpectra spectra = prepare_spectra(sc, kernel, c.truncate);
    const Eigen::MatrixXd samples = sample_prior(kernel, spectra.view(), c.seed, count);

    ensure_dir(c.out_dir);
    auto csv = open_out(fs::path(c.out_dir) / "samples.csv");
    csv << "simplex";
    for (Index s = 0; s < count; ++s) csv << ",s" << s;
    csv << "\n";
    for (Index e = 0; e < sc.num_edges(); ++e) {
        csv << sc.edge_name(e);
        for (Index s = 0; s < count; ++s) csv << "," << format_double(samples(e, s));
        csv << "\n";
    }
    double worst_curl = 0.0;
    double worst_div = 0.0;
    for (Index s = 0; s < count; ++s) {
        const double n = samples.col(s).norm();
        if (n == 0.0) continue;
        worst_curl = std::max(worst_curl, (sc.b2_real().transpose() * samples.col(s)).norm() / n);
        worst_div = std::max(worst_div, (sc.b1_real() * samples.col(s)).norm() / n);
    }
    out << "sampled " << count << " flows; max |curl|/|f| = " << worst_curl
        << ", max |div|/|f| = " << worst_div << "\n";
    return kOk;
}

std::vector<double> parse_times(const std::string& text)
{
    std::vector<double> times;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = parse_double(item);
        if (!v || *v < 0.0) {
            throw UsageError("invalid time '" + item + "'");
        }
        times.push_back(*v);
    }
    if (times.empty()) {
        throw UsageError("--times is empty");
    }
    return times;
}

int cmd_diffuse(const RunConfig& c, double mu, double gamma, const std::string& times_text,
                std::ostream& out)
{
    if (c.complex_path.empty() || c.flow_path.empty()) {
        throw UsageError("diffuse needs --complex and --flow (initial condition)");
    }
    if (!(mu > 0.0) || !(gamma > 0.0)) {
        throw UsageError("--mu and --gamma must be positive");
    }
    const auto times = parse_times(times_text);
    const SimplicialComplex2 sc = read_complex(c.complex_path);
    const Cochain phi0 = read_cochain(sc, 1, c.flow_path);
    const HodgeSpectrum spectrum = eigendecompose(sc);

    ensure_dir(c.out_dir);
    auto csv = open_out(fs::path(c.out_dir) / "trajectory.csv");
    csv << "t,simplex,value\n";
    nlohmann::json residuals = nlohmann::json::array();
    const double ref = phi0.values.norm();
    for (double t : times) {
        const Cochain phi = edge_diffusion(spectrum, phi0, mu, gamma, t);
        for (Index e = 0; e < sc.num_edges(); ++e) {
            csv << format_double(t) << "," << sc.edge_name(e) << "," << format_double(phi.values[e])
                << "\n";
        }
        residuals.push_back(ref > 0.0 ? harmonic_residual(spectrum, phi.values, ref) : 0.0);
    }
    write_json(fs::path(c.out_dir) / "diffusion.json",
               {{"mu", mu}, {"gamma", gamma}, {"times", times}, {"harmonic_residual", residuals}});
    out << "diffused over " << times.size() << " times; final harmonic residual "
        << residuals.back().get<double>() << "\n";
    return kOk;
}

struct GenerateOptions {
    std::string generator = "forex";
    Index currencies = 25;
    double pair_prob = 1.0;
    double potential_scale = 1.75;
    Index nodes = 30;
    double edge_prob = 0.2;
    double fill = 0.5;
    std::string flow_kind = "gradient";
    std::vector<double> weights = {1.0, 1.0, 1.0};
    double noise = 0.01;
    bool absolute_noise = false;
};

int cmd_generate(const RunConfig& c, const GenerateOptions& g, bool pre_split,
                 std::ostream& out)
{
    const Noise noise{g.noise, !g.absolute_noise};
    Dataset d;
    if (g.generator == "forex") {
        d = synth_forex(g.currencies, g.pair_prob, g.potential_scale, noise, c.seed);
    } else if (g.generator == "hodge-flow") {
        if (g.weights.size() != 3) {
            throw UsageError("--weights takes three values: harmonic gradient curl");
        }
        const auto sc = random_complex(g.nodes, g.edge_prob, g.fill, c.seed);
        FlowSpec spec{parse_flow_kind(g.flow_kind), g.weights[0], g.weights[1], g.weights[2]};
        d = sample_hodge_flow(sc, spec, Rng::derive(c.seed, 1).next(), noise);
        d.provenance["complex"] = {{"nodes", g.nodes},
                                   {"edge_prob", g.edge_prob},
                                   {"fill", g.fill},
                                   {"seed", c.seed}};
    } else {
        throw UsageError("--generator must be forex or hodge-flow");
    }
    if (pre_split) {
        d = split(d, c.train_ratio, Rng::derive(c.seed, 2).next());
    }
    write_dataset(d, c.out_dir);
    out << "generated " << g.generator << " dataset: N0=" << d.complex.num_nodes()
        << " N1=" << d.complex.num_edges() << " N2=" << d.complex.num_triangles() << " -> "
        << c.out_dir << "\n";
    return kOk;
}

int cmd_spectrum(const RunConfig& c, bool vectors, std::ostream& out)
{
    if (c.complex_path.empty()) {
        throw UsageError("spectrum needs --complex");
    }
    const SimplicialComplex2 sc = read_complex(c.complex_path);
    const HodgeSpectrum s = eigendecompose(sc, c.truncate);
    ensure_dir(c.out_dir);
    write_json(fs::path(c.out_dir) / "spectrum.json", spectrum_to_json(s));
    if (vectors) {
        write_eigenvectors_csv(sc, s, fs::path(c.out_dir) / "eigenvectors.csv");
    }
    out << s.fingerprint() << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gaussian processes on the edges of simplicial 2-complexes", "hodgegp"};
    app.require_subcommand(1);
    RunConfig c;
    Index truncate = -1;
    Index count = 10;
    double mu = 1.0;
    double gamma = 1.0;
    std::string times = "0,1,10,100";
    bool vectors = false;
    bool pre_split = false;
    GenerateOptions g;

    auto add_complex = [&](CLI::App* s) {
        s->add_option("--complex", c.complex_path, "Complex JSON file");
    };
    auto add_out = [&](CLI::App* s) {
        s->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
    };
    auto add_kernel = [&](CLI::App* s) {
        s->add_option("--kernel", c.kernel, "Kernel name")
            ->check(CLI::IsMember({"hc-matern", "hc-diffusion", "matern", "diffusion",
                                   "line-graph-matern", "line-graph-diffusion", "grad-of-node",
                                   "composed-hc", "hodge-pinv"}))
            ->capture_default_str();
        s->add_option("--kernel-spec", c.kernel_spec_path,
                      "Kernel spec JSON; overrides --kernel");
        s->add_option("--truncate", truncate, "Keep only the l largest L1 eigenpairs");
    };

    auto* decompose = app.add_subcommand("decompose", "Hodge-decompose an edge flow");
    add_complex(decompose);
    decompose->add_option("--flow", c.flow_path, "Edge flow CSV (simplex,value)");
    add_out(decompose);

    auto* fitp = app.add_subcommand("fit-predict", "Fit GP hyperparameters and predict test edges");
    add_complex(fitp);
    fitp->add_option("--flow", c.flow_path, "Edge flow CSV (simplex,value[,split])");
    fitp->add_option("--dataset", c.dataset_dir, "Dataset bundle directory");
    fitp->add_option("--orientation", c.orientation, "resign or strict")->capture_default_str();
    add_kernel(fitp);
    fitp->add_option("--train-ratio", c.train_ratio, "Fraction of observed edges for training")
        ->capture_default_str();
    fitp->add_option("--restarts", c.restarts, "Random restarts")->capture_default_str();
    fitp->add_option("--iters", c.iters, "Optimizer iterations")->capture_default_str();
    fitp->add_option("--lr", c.lr, "Learning rate")->capture_default_str();
    fitp->add_option("--seed", c.seed, "Master seed")->capture_default_str();
    fitp->add_flag("--components", c.components, "Also output Hodge-component posteriors");
    fitp->add_flag("--select-best", c.select_best,
                   "Predict with the lowest-loss restart instead of the first");
    fitp->add_option("--fixed-nu", c.nu, "Hold matern smoothness at this value");
    add_out(fitp);

    auto* sample = app.add_subcommand("sample", "Draw prior edge-flow samples");
    add_complex(sample);
    add_kernel(sample);
    sample->add_option("--count", count, "Number of samples")->capture_default_str();
    sample->add_option("--seed", c.seed, "Seed")->capture_default_str();
    add_out(sample);

    auto* diffuse = app.add_subcommand("diffuse", "Edge diffusion exp(-t(mu Ld + gamma Lu)) phi0");
    add_complex(diffuse);
    diffuse->add_option("--flow", c.flow_path, "Initial edge flow CSV");
    diffuse->add_option("--mu", mu, "Down (gradient) rate")->capture_default_str();
    diffuse->add_option("--gamma", gamma, "Up (curl) rate")->capture_default_str();
    diffuse->add_option("--times", times, "Comma-separated time grid")->capture_default_str();
    add_out(diffuse);

    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset bundle");
    generate->add_option("--generator", g.generator, "forex or hodge-flow")->capture_default_str();
    generate->add_option("--currencies", g.currencies, "forex: currencies")->capture_default_str();
    generate->add_option("--pair-prob", g.pair_prob, "forex: pair probability")
        ->capture_default_str();
    generate->add_option("--potential-scale", g.potential_scale, "forex: log-valuation std")
        ->capture_default_str();
    generate->add_option("--nodes", g.nodes, "hodge-flow: nodes")->capture_default_str();
    generate->add_option("--edge-prob", g.edge_prob, "hodge-flow: edge probability")
        ->capture_default_str();
    generate->add_option("--fill", g.fill, "hodge-flow: triangle fill ratio")
        ->capture_default_str();
    generate->add_option("--flow-kind", g.flow_kind, "gradient, curl, harmonic or mixed")
        ->capture_default_str();
    generate->add_option("--weights", g.weights, "mixed: harmonic gradient curl weights")
        ->expected(3);
    generate->add_option("--noise", g.noise, "Noise std, relative to the flow std by default")
        ->capture_default_str();
    generate->add_flag("--absolute-noise", g.absolute_noise, "Treat --noise as an absolute std");
    generate->add_option("--seed", c.seed, "Seed")->capture_default_str();
    auto* ratio = generate->add_option("--train-ratio", c.train_ratio, "Also write a split");
    add_out(generate);

    auto* spectrum = app.add_subcommand("spectrum", "Hodge spectrum of L1");
    add_complex(spectrum);
    spectrum->add_option("--truncate", truncate, "Keep only the l largest eigenpairs");
    spectrum->add_flag("--vectors", vectors, "Also write eigenvectors.csv");
    add_out(spectrum);

    std::vector<const char*> argv = {"hodgegp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (truncate >= 0) c.truncate = truncate;
        c.fixed_nu = fitp->count("--fixed-nu") > 0;
        pre_split = ratio->count() > 0;
        if (decompose->parsed()) {
            c.command = "decompose";
            return cmd_decompose(c, out);
        }
        if (fitp->parsed()) {
            c.command = "fit-predict";
            return cmd_fit_predict(c, out);
        }
        if (sample->parsed()) {
            c.command = "sample";
            return cmd_sample(c, count, out);
        }
        if (diffuse->parsed()) {
            c.command = "diffuse";
            return cmd_diffuse(c, mu, gamma, times, out);
        }
        if (generate->parsed()) {
            c.command = "generate";
            return cmd_generate(c, g, pre_split, out);
        }
        if (spectrum->parsed()) {
            c.command = "spectrum";
            return cmd_spectrum(c, vectors, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const GenerationError& e) {
        err << "generation error: " << e.what() << "\n";
        return kUsage;
    } catch (const IngestionError& e) {
        err << "ingestion error: " << e.what() << "\n";
        return kIngestion;
    } catch (const StructuralError& e) {
        err << "ingestion error: " << e.what() << "\n";
        return kIngestion;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::bad_alloc&) {
        err << "numerical error: out of memory (dense N1 x N1 matrices are used)\n";
        return kNumerical;
    }
    return kUsage;
}

}  // namespace hodgegp::cli
