// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hodgegp/data.hpp"
#include "hodgegp/gp.hpp"
#include "hodgegp/kernels.hpp"

namespace hodgegp::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIngestion = 2,
    kNumerical = 3,
    kPartialFailure = 4,
};

struct RunConfig {
    std::string command;
    std::string complex_path;
    std::string flow_path;
    std::string dataset_dir;
    std::string kernel = "hc-matern";
    std::string kernel_spec_path;
    std::string orientation = "resign";
    double train_ratio = 0.2;
    int restarts = 10;
    int iters = 1000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::optional<Index> truncate;
    bool components = false;
    bool select_best = false;
    bool fixed_nu = false;
    double nu = 1.5;
    std::string out_dir = ".";

    nlohmann::json to_json() const;
};

struct RestartOutcome {
    int restart = 0;
    bool ok = false;
    std::string error;
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;
    Metrics metrics;
    GPModel model;
    IndexList train;
    IndexList test;
};

struct FitPredictReport {
    std::vector<RestartOutcome> restarts;
    /// Index into `restarts` of the model used for predictions, -1 if none.
    int selected = -1;
    nlohmann::json results;
};

/// Mean spectral weight of each Hodge block (0 for an empty block) for the
/// fitted kernel; null unless the kernel is built from Hodge subspaces.
nlohmann::json block_weights(const SpectralForm& form);

/// Spectra needed by a kernel: the Hodge spectrum always, the line-graph
/// spectrum for line-graph kernels.
struct PreparedSpectra {
    HodgeSpectrum hodge;
    std::optional<LaplacianSpectrum> line_graph;

    KernelSpectra view() const;
};

PreparedSpectra prepare_spectra(const SimplicialComplex2& sc, const KernelSpec& kernel,
                                std::optional<Index> truncate);

/// Runs the restarts of the fit/predict protocol on `dataset`. Each restart
/// draws its split (unless the dataset carries one) and its initialization
/// from streams derived from (config.seed, restart).
FitPredictReport fit_predict(const Dataset& dataset, const KernelSpec& kernel,
                             const RunConfig& config, const PreparedSpectra& spectra);

/// Entry point shared by the executable and the tests; `args` excludes the
/// program name. Returns an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hodgegp::cli
