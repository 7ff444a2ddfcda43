// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hodgegp/errors.hpp"
#include "hodgegp/io.hpp"
#include "hodgegp/random.hpp"

namespace hodgegp {

namespace fs = std::filesystem;

std::vector<Index> Dataset::train_indices() const
{
    std::vector<Index> out;
    for (std::size_t i = 0; i < train_mask.size(); ++i) {
        if (train_mask[i]) out.push_back(static_cast<Index>(i));
    }
    return out;
}

std::vector<Index> Dataset::test_indices() const
{
    std::vector<Index> out;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const bool train = !train_mask.empty() && train_mask[i];
        if (observed[i] && !train) out.push_back(static_cast<Index>(i));
    }
    return out;
}

namespace {

using RawEdge = std::pair<Index, Index>;

/// Largest connected component of the graph on n nodes; ties go to the
/// component with the smallest node.
std::vector<bool> largest_component(Index n, const std::vector<RawEdge>& edges)
{
    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (const auto& [a, b] : edges) {
        const Index ra = find(a);
        const Index rb = find(b);
        if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
    std::vector<Index> size(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) ++size[static_cast<std::size_t>(find(i))];
    Index best = 0;
    for (Index i = 0; i < n; ++i) {
        if (size[static_cast<std::size_t>(i)] > size[static_cast<std::size_t>(best)]) best = i;
    }
    std::vector<bool> keep(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) keep[static_cast<std::size_t>(i)] = find(i) == best;
    return keep;
}

std::vector<RawEdge> random_pairs(Index n, double p, Rng& rng)
{
    std::vector<RawEdge> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
        }
    }
    return edges;
}

/// Restricts to the largest component; throws GenerationError if it has no edge.
void restrict_to_giant(Index n, const std::vector<RawEdge>& edges,
                       const std::vector<NodeLabel>& labels, std::vector<NodeLabel>& nodes,
                       std::vector<std::array<NodeLabel, 2>>& kept)
{
    const auto keep = largest_component(n, edges);
    for (Index i = 0; i < n; ++i) {
        if (keep[static_cast<std::size_t>(i)]) nodes.push_back(labels[static_cast<std::size_t>(i)]);
    }
    for (const auto& [a, b] : edges) {
        if (keep[static_cast<std::size_t>(a)]) {
            kept.push_back({labels[static_cast<std::size_t>(a)], labels[static_cast<std::size_t>(b)]});
        }
    }
    if (kept.empty()) {
        throw GenerationError("the largest connected component has no edges");
    }
}

double population_std(const Eigen::VectorXd& v)
{
    if (v.size() == 0) return 0.0;
    return std::sqrt((v.array() - v.mean()).square().mean());
}

/// Adds observation noise and fills the common dataset fields.
void observe(Dataset& d, const Noise& noise, Rng& rng)
{
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
        throw UsageError("noise sigma must be finite and >= 0");
    }
    const double sd = noise.relative ? noise.sigma * population_std(d.flow.values) : noise.sigma;
    d.observations = d.flow.values;
    if (sd > 0.0) {
        d.observations += sd * rng.normal_vector(d.flow.values.size());
    }
    d.noise_level = sd;
    d.observed.assign(static_cast<std::size_t>(d.flow.values.size()), true);
    d.provenance["noise"] = {{"sigma", noise.sigma}, {"relative", noise.relative}, {"std", sd}};
}

}  // namespace

SimplicialComplex2 random_complex(Index n_nodes, double edge_prob, double triangle_fill_ratio,
                                  std::uint64_t seed)
{
    if (n_nodes < 1) {
        throw UsageError("random complex needs at least one node");
    }
    if (!(edge_prob > 0.0 && edge_prob <= 1.0)) {
        throw UsageError("edge probability must be in (0, 1]");
    }
    if (!(triangle_fill_ratio >= 0.0 && triangle_fill_ratio <= 1.0)) {
        throw UsageError("triangle fill ratio must be in [0, 1]");
    }
    Rng rng(seed);
    const auto edges = random_pairs(n_nodes, edge_prob, rng);
    std::vector<NodeLabel> labels;
    for (Index i = 0; i < n_nodes; ++i) labels.emplace_back(std::int64_t{i + 1});
    std::vector<NodeLabel> nodes;
    std::vector<std::array<NodeLabel, 2>> kept;
    restrict_to_giant(n_nodes, edges, labels, nodes, kept);

    const SimplicialComplex2 clique = build_complex(nodes, kept, {}, true);
    std::vector<std::size_t> order(clique.triangles().size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto count =
        static_cast<std::size_t>(std::llround(triangle_fill_ratio * static_cast<double>(order.size())));
    std::vector<std::array<NodeLabel, 3>> triangles;
    for (std::size_t t = 0; t < count; ++t) {
        const auto& [i, j, k] = clique.triangles()[order[t]];
        triangles.push_back({clique.nodes()[i], clique.nodes()[j], clique.nodes()[k]});
    }
    return build_complex(nodes, kept, triangles, false);
}

std::string to_string(FlowKind kind)
{
    switch (kind) {
    case FlowKind::Gradient: return "gradient";
    case FlowKind::Curl: return "curl";
    case FlowKind::Harmonic: return "harmonic";
    case FlowKind::Mixed: return "mixed";
    }
    return "unknown";
}

FlowKind parse_flow_kind(const std::string& text)
{
    if (text == "gradient") return FlowKind::Gradient;
    if (text == "curl") return FlowKind::Curl;
    if (text == "harmonic") return FlowKind::Harmonic;
    if (text == "mixed") return FlowKind::Mixed;
    throw UsageError("unknown flow kind '" + text + "'");
}

Dataset sample_hodge_flow(const SimplicialComplex2& sc, const FlowSpec& spec, std::uint64_t seed,
                          const Noise& noise)
{
    const bool mixed = spec.kind == FlowKind::Mixed;
    const double wg = mixed ? spec.weight_gradient : (spec.kind == FlowKind::Gradient ? 1.0 : 0.0);
    const double wc = mixed ? spec.weight_curl : (spec.kind == FlowKind::Curl ? 1.0 : 0.0);
    const double wh = mixed ? spec.weight_harmonic : (spec.kind == FlowKind::Harmonic ? 1.0 : 0.0);
    if (!std::isfinite(wg) || !std::isfinite(wc) || !std::isfinite(wh)) {
        throw UsageError("flow weights must be finite");
    }
    const Index n1 = sc.num_edges();
    Rng rng(seed);
    HodgeComponents parts{Eigen::VectorXd::Zero(n1), Eigen::VectorXd::Zero(n1),
                          Eigen::VectorXd::Zero(n1)};

    if (wg != 0.0) {
        if (n1 == 0) {
            throw GenerationError("gradient flow requested on a complex without edges");
        }
        const Eigen::VectorXd z0 = rng.normal_vector(sc.num_nodes());
        parts.gradient = wg * (sc.b1_real().transpose() * z0);
    }
    if (wc != 0.0) {
        if (sc.num_triangles() == 0) {
            throw GenerationError("curl flow requested on a complex without triangles");
        }
        const Eigen::VectorXd z2 = rng.normal_vector(sc.num_triangles());
        parts.curl = wc * (sc.b2_real() * z2);
    }
    if (wh != 0.0) {
        const Eigen::MatrixXd uh = harmonic_basis(sc);
        if (uh.cols() == 0) {
            throw GenerationError("harmonic flow requested but the complex has n_H = 0");
        }
        parts.harmonic = wh * (uh * rng.normal_vector(uh.cols()));
    }

    Dataset d;
    d.complex = sc;
    d.flow = {1, parts.harmonic + parts.gradient + parts.curl};
    d.components = parts;
    d.provenance = {{"generator", "hodge_flow"},
                    {"kind", to_string(spec.kind)},
                    {"weights", {{"harmonic", wh}, {"gradient", wg}, {"curl", wc}}},
                    {"seed", seed}};
    observe(d, noise, rng);
    return d;
}

std::vector<std::string> currency_codes(Index n)
{
    static const std::vector<std::string> major = {
        "AUD", "BRL", "CAD", "CHF", "CNY", "CZK", "DKK", "EUR", "GBP", "HKD", "HUF", "INR", "JPY",
        "KRW", "MXN", "NOK", "NZD", "PLN", "RUB", "SEK", "SGD", "THB", "TRY", "USD", "ZAR"};
    static const std::vector<std::string> extra = {"AED", "ARS", "CLP", "COP", "IDR",
                                                   "ILS", "MYR", "PHP", "SAR", "TWD"};
    if (n < 0) {
        throw UsageError("currency count must be >= 0");
    }
    std::vector<std::string> codes;
    for (Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (k < major.size()) {
            codes.push_back(major[k]);
        } else if (k < major.size() + extra.size()) {
            codes.push_back(extra[k - major.size()]);
        } else {
            codes.push_back("X" + std::to_string(1000 + i));
        }
    }
    std::sort(codes.begin(), codes.end());
    return codes;
}

Dataset synth_forex(Index n_currencies, double pair_prob, double potential_scale,
                    const Noise& noise, std::uint64_t seed)
{
    if (n_currencies < 3) {
        throw UsageError("a forex market needs at least 3 currencies");
    }
    if (!(pair_prob > 0.0 && pair_prob <= 1.0)) {
        throw UsageError("pair probability must be in (0, 1]");
    }
    if (!(potential_scale >= 0.0) || !std::isfinite(potential_scale)) {
        throw UsageError("potential scale must be finite and >= 0");
    }
    Rng rng(seed);
    const auto codes = currency_codes(n_currencies);
    const auto pairs = random_pairs(n_currencies, pair_prob, rng);
    std::vector<NodeLabel> labels(codes.begin(), codes.end());
    std::vector<NodeLabel> nodes;
    std::vector<std::array<NodeLabel, 2>> kept;
    restrict_to_giant(n_currencies, pairs, labels, nodes, kept);

    Dataset d;
    d.complex = build_complex(nodes, kept, {}, true);
    const Eigen::VectorXd log_value = potential_scale * rng.normal_vector(d.complex.num_nodes());
    d.flow = {1, d.complex.b1_real().transpose() * log_value};
    const Index n1 = d.complex.num_edges();
    d.components = HodgeComponents{Eigen::VectorXd::Zero(n1), d.flow.values,
                                   Eigen::VectorXd::Zero(n1)};
    d.provenance = {{"generator", "synth_forex"},
                    {"currencies", n_currencies},
                    {"pair_prob", pair_prob},
                    {"potential_scale", potential_scale},
                    {"seed", seed}};
    observe(d, noise, rng);
    return d;
}

namespace {

struct EdgeTable {
    Eigen::VectorXd values;
    std::vector<bool> observed;
    std::vector<bool> train;  // empty without a split column
};

EdgeTable read_edge_table(const SimplicialComplex2& sc, const fs::path& path,
                          OrientationPolicy policy)
{
    const CsvTable table = read_csv(path);
    const auto sc_col = table.column("simplex");
    const auto val_col = table.column("value");
    const auto split_col = table.column("split");
    if (!sc_col || !val_col) {
        throw IngestionError(path.string() + ": header must contain simplex,value");
    }
    const Index n1 = sc.num_edges();
    EdgeTable out{Eigen::VectorXd::Zero(n1), std::vector<bool>(static_cast<std::size_t>(n1)), {}};
    if (split_col) out.train.assign(static_cast<std::size_t>(n1), false);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + " line " + std::to_string(table.lines[r]);
        const auto s = find_simplex(sc, row[*sc_col], 1);
        if (!s) {
            throw IngestionError(where + ": unknown simplex '" + row[*sc_col] + "'");
        }
        const auto [e, sign] = *s;
        if (sign < 0 && policy == OrientationPolicy::Strict) {
            throw IngestionError(where + ": '" + row[*sc_col] +
                                 "' is against the canonical orientation " + sc.edge_name(e));
        }
        const auto v = parse_double(row[*val_col]);
        if (!v || !std::isfinite(*v)) {
            throw IngestionError(where + ": invalid value '" + row[*val_col] + "'");
        }
        if (out.observed[static_cast<std::size_t>(e)]) {
            throw IngestionError(where + ": duplicate row for edge " + sc.edge_name(e));
        }
        out.observed[static_cast<std::size_t>(e)] = true;
        out.values[e] = sign * *v;
        if (split_col) {
            const auto& label = row[*split_col];
            if (label == "train" || label == "1") {
                out.train[static_cast<std::size_t>(e)] = true;
            } else if (label != "test" && label != "0") {
                throw IngestionError(where + ": split must be train or test, got '" + label + "'");
            }
        }
    }
    return out;
}

void check_split(const Dataset& d, const std::string& where)
{
    const auto train = d.train_indices().size();
    const auto test = d.test_indices().size();
    if (train < 2 || test < 2) {
        throw IngestionError(where + ": split has " + std::to_string(train) + " train and " +
                             std::to_string(test) + " test edges; need at least 2 of each");
    }
}

}  // namespace

Dataset load_flow_csv(const fs::path& complex_file, const fs::path& flow_file,
                      OrientationPolicy policy)
{
    Dataset d;
    d.complex = read_complex(complex_file);
    EdgeTable t = read_edge_table(d.complex, flow_file, policy);
    d.flow = {1, t.values};
    d.observations = t.values;
    d.observed = std::move(t.observed);
    d.train_mask = std::move(t.train);
    d.provenance = {{"source", "csv"},
                    {"complex", complex_file.string()},
                    {"flow", flow_file.string()},
                    {"orientation_policy", policy == OrientationPolicy::Strict ? "strict" : "resign"}};
    if (d.has_split()) {
        check_split(d, flow_file.string());
    }
    return d;
}

Dataset split(const Dataset& dataset, double train_ratio, std::uint64_t seed)
{
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw UsageError("train ratio must be in (0, 1)");
    }
    std::vector<Index> observed;
    for (std::size_t i = 0; i < dataset.observed.size(); ++i) {
        if (dataset.observed[i]) observed.push_back(static_cast<Index>(i));
    }
    const auto n = static_cast<double>(observed.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * n));
    if (n_train < 2 || observed.size() - n_train < 2) {
        throw UsageError("train ratio " + format_double(train_ratio) + " on " +
                         std::to_string(observed.size()) + " observed edges gives " +
                         std::to_string(n_train) + " train edges; need >= 2 train and >= 2 test");
    }
    Rng rng(seed);
    rng.shuffle(observed);
    Dataset out = dataset;
    out.train_mask.assign(dataset.observed.size(), false);
    for (std::size_t i = 0; i < n_train; ++i) {
        out.train_mask[static_cast<std::size_t>(observed[i])] = true;
    }
    out.provenance["split"] = {{"train_ratio", train_ratio}, {"seed", seed}};
    return out;
}

void write_dataset(const Dataset& dataset, const fs::path& dir)
{
    fs::create_directories(dir);
    const auto& sc = dataset.complex;
    write_complex(sc, dir / "complex.json");
    write_cochain(sc, {1, dataset.observations}, dir / "flow.csv", &dataset.observed);
    write_cochain(sc, dataset.flow, dir / "truth.csv");

    std::ofstream mask(dir / "mask.csv");
    if (!mask) {
        throw UsageError("cannot write " + (dir / "mask.csv").string());
    }
    mask << "simplex,split\n";
    for (Index e = 0; e < sc.num_edges(); ++e) {
        const auto i = static_cast<std::size_t>(e);
        std::string label = "unobserved";
        if (dataset.observed[i]) {
            label = !dataset.has_split() ? "observed" : (dataset.train_mask[i] ? "train" : "test");
        }
        mask << sc.edge_name(e) << "," << label << "\n";
    }
    nlohmann::json prov = dataset.provenance;
    prov["noise_level"] = dataset.noise_level;
    write_json(dir / "provenance.json", prov);
}

Dataset read_dataset(const fs::path& dir)
{
    Dataset d;
    d.complex = read_complex(dir / "complex.json");
    const EdgeTable obs = read_edge_table(d.complex, dir / "flow.csv", OrientationPolicy::Strict);
    d.observations = obs.values;
    d.observed = obs.observed;
    if (fs::exists(dir / "truth.csv")) {
        d.flow = read_cochain(d.complex, 1, dir / "truth.csv");
    } else {
        d.flow = {1, obs.values};
    }
    if (fs::exists(dir / "mask.csv")) {
        const CsvTable mask = read_csv(dir / "mask.csv");
        const auto sc_col = mask.column("simplex");
        const auto split_col = mask.column("split");
        if (!sc_col || !split_col) {
            throw IngestionError((dir / "mask.csv").string() + ": header must be simplex,split");
        }
        std::vector<bool> train(static_cast<std::size_t>(d.complex.num_edges()), false);
        bool any_split = false;
        for (std::size_t r = 0; r < mask.rows.size(); ++r) {
            const auto s = find_simplex(d.complex, mask.rows[r][*sc_col], 1);
            if (!s) {
                throw IngestionError((dir / "mask.csv").string() + " line " +
                                     std::to_string(mask.lines[r]) + ": unknown simplex");
            }
            const auto& label = mask.rows[r][*split_col];
            if (label == "train" || label == "test") any_split = true;
            train[static_cast<std::size_t>(s->first)] = label == "train";
        }
        if (any_split) d.train_mask = std::move(train);
    }
    if (fs::exists(dir / "provenance.json")) {
        d.provenance = read_json(dir / "provenance.json");
        d.noise_level = d.provenance.value("noise_level", 0.0);
    }
    return d;
}

}  // namespace hodgegp
