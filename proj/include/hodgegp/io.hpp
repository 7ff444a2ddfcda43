// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hodgegp/complex.hpp"
#include "hodgegp/gp.hpp"
#include "hodgegp/kernels.hpp"
#include "hodgegp/spectral.hpp"

namespace hodgegp {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);
/// Parses a whole field as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(const std::string& text);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// {"nodes": [...], "edges": [[i, j], ...], "triangles": [[i, j, k], ...]},
/// plus an optional "infer_triangles" flag.
nlohmann::json to_json(const SimplicialComplex2& sc);
SimplicialComplex2 complex_from_json(const nlohmann::json& j);
/// Wraps parse and structural errors in IngestionError naming the file.
SimplicialComplex2 read_complex(const std::filesystem::path& path);
void write_complex(const SimplicialComplex2& sc, const std::filesystem::path& path);

/// Index and orientation sign (+1 canonical, -1 reversed) of a simplex written
/// as "i-j" or "i-j-k". nullopt if it is not in the complex.
std::optional<std::pair<Index, int>> find_simplex(const SimplicialComplex2& sc,
                                                  const std::string& text, int degree);

/// A parsed CSV file: header fields and data rows, with 1-based line numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;

    /// Column position of `name`, or nullopt.
    std::optional<std::size_t> column(const std::string& name) const;
};

/// Comma-separated, fields trimmed, blank lines skipped. Throws IngestionError
/// on rows whose field count differs from the header.
CsvTable read_csv(const std::filesystem::path& path);

/// Reads a complete cochain (every simplex exactly once) with header
/// simplex,value, re-signing rows given against the canonical orientation.
Cochain read_cochain(const SimplicialComplex2& sc, int degree, const std::filesystem::path& path);
/// Writes header simplex,value in canonical order; rows with observed[i] false
/// are skipped when a mask is given.
void write_cochain(const SimplicialComplex2& sc, const Cochain& c,
                   const std::filesystem::path& path, const std::vector<bool>* observed = nullptr);

/// Per-block eigenvalues and counts.
nlohmann::json spectrum_to_json(const HodgeSpectrum& spectrum);
/// simplex followed by one column per eigenvector, named H0.., G0.., C0...
void write_eigenvectors_csv(const SimplicialComplex2& sc, const HodgeSpectrum& spectrum,
                            const std::filesystem::path& path);

/// lambda,psi,block for every eigenvalue of every term of a kernel.
void write_kernel_spectrum_csv(const SpectralForm& form, const std::filesystem::path& path);

nlohmann::json checkpoint_to_json(const GPModel& model);
GPModel checkpoint_from_json(const nlohmann::json& j);

/// simplex,split,mean,variance and, when present, mean/var per Hodge component.
/// `split_labels[i]` describes prediction i.
void write_predictions_csv(const SimplicialComplex2& sc, const PosteriorResult& pred,
                           const std::vector<std::string>& split_labels,
                           const std::filesystem::path& path);

}  // namespace hodgegp
