// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hodgegp/complex.hpp"
#include "hodgegp/spectral.hpp"

namespace hodgegp {

/// An edge-flow regression problem.
struct Dataset {
    SimplicialComplex2 complex;
    /// Ground-truth flow (noise free for generated data).
    Cochain flow;
    /// What a user observes: `flow` plus noise. Predictions are scored against it.
    Eigen::VectorXd observations;
    /// Edges with an observed value. All true for generated data.
    std::vector<bool> observed;
    /// Training edges; empty until `split` is applied or a split column is read.
    std::vector<bool> train_mask;
    double noise_level = 0.0;
    /// Generating Hodge components, when the generator knows them.
    std::optional<HodgeComponents> components;
    /// Generator or source name, parameters and seed.
    nlohmann::json provenance;

    bool has_split() const { return !train_mask.empty(); }
    std::vector<Index> train_indices() const;
    /// Observed edges that are not in the training set.
    std::vector<Index> test_indices() const;
};

/// Erdos-Renyi graph G(n, p) on nodes 1..n, restricted to its largest
/// connected component, with round(fill * #3-cliques) of its 3-cliques chosen
/// uniformly as triangles. Throws GenerationError if the largest component has
/// no edge.
SimplicialComplex2 random_complex(Index n_nodes, double edge_prob, double triangle_fill_ratio,
                                  std::uint64_t seed);

enum class FlowKind { Gradient, Curl, Harmonic, Mixed };

std::string to_string(FlowKind kind);
FlowKind parse_flow_kind(const std::string& text);

/// Observation noise; with `relative`, the standard deviation is
/// sigma * std(flow).
struct Noise {
    double sigma = 0.0;
    bool relative = false;
};

struct FlowSpec {
    FlowKind kind = FlowKind::Gradient;
    /// Harmonic, gradient, curl weights for FlowKind::Mixed.
    double weight_harmonic = 1.0;
    double weight_gradient = 1.0;
    double weight_curl = 1.0;
};

/// Gradient flows are B1^T z0, curl flows B2 z2 and harmonic flows U_H z with
/// standard normal z; mixed flows add the three with the given weights.
/// Throws GenerationError when a requested block is empty on `sc`.
Dataset sample_hodge_flow(const SimplicialComplex2& sc, const FlowSpec& spec, std::uint64_t seed,
                          const Noise& noise);

/// Three-letter currency codes in alphabetical order, as node labels.
std::vector<std::string> currency_codes(Index n);

/// Arbitrage-free exchange market: each currency pair is traded with
/// probability `pair_prob`, every 3-clique is a triangle, and log rates are the
/// gradient of log valuations drawn from N(0, potential_scale^2).
Dataset synth_forex(Index n_currencies, double pair_prob, double potential_scale,
                    const Noise& noise, std::uint64_t seed);

enum class OrientationPolicy {
    /// Rows against the canonical orientation are negated.
    Resign,
    /// Rows must use the canonical orientation.
    Strict,
};

/// Reads a complex (JSON) and an edge flow (CSV with header simplex,value and
/// an optional split column of train/test). Edges missing from the file are
/// unobserved. Throws IngestionError naming the row on unknown simplices,
/// duplicates, unparsable values and orientation violations.
Dataset load_flow_csv(const std::filesystem::path& complex_file,
                      const std::filesystem::path& flow_file,
                      OrientationPolicy policy = OrientationPolicy::Resign);

/// Uniformly random train/test split of the observed edges with
/// round(ratio * #observed) training edges. Throws UsageError unless
/// 0 < ratio < 1 and both sides get at least two edges.
Dataset split(const Dataset& dataset, double train_ratio, std::uint64_t seed);

/// Dataset bundle: complex.json, flow.csv (observations), truth.csv, mask.csv
/// and provenance.json.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace hodgegp
