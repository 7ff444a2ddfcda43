// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hodgegp/errors.hpp"

namespace hodgegp {

namespace fs = std::filesystem;

std::string format_double(double x)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) {
        throw UsageError("cannot format floating-point value");
    }
    return std::string(buf, ptr);
}

std::optional<double> parse_double(const std::string& text)
{
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
        return std::nullopt;
    }
    return value;
}

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IngestionError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IngestionError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

namespace {

nlohmann::json label_to_json(const NodeLabel& label)
{
    if (const auto* i = std::get_if<std::int64_t>(&label)) {
        return *i;
    }
    return std::get<std::string>(label);
}

NodeLabel label_from_json(const nlohmann::json& j)
{
    if (j.is_number_integer()) {
        return j.get<std::int64_t>();
    }
    if (j.is_string()) {
        return j.get<std::string>();
    }
    throw StructuralError("node labels must be integers or strings, got " + j.dump());
}

template <std::size_t N>
std::vector<std::array<NodeLabel, N>> simplices_from_json(const nlohmann::json& j,
                                                          const char* key)
{
    std::vector<std::array<NodeLabel, N>> out;
    if (!j.contains(key)) {
        return out;
    }
    const auto& list = j.at(key);
    if (!list.is_array()) {
        throw StructuralError(std::string("'") + key + "' must be an array");
    }
    for (const auto& item : list) {
        if (!item.is_array() || item.size() != N) {
            throw StructuralError(std::string("every entry of '") + key + "' must list " +
                                  std::to_string(N) + " nodes, got " + item.dump());
        }
        std::array<NodeLabel, N> s;
        for (std::size_t i = 0; i < N; ++i) {
            s[i] = label_from_json(item[i]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

nlohmann::json to_json(const SimplicialComplex2& sc)
{
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : sc.nodes()) nodes.push_back(label_to_json(n));
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [i, j] : sc.edges()) {
        edges.push_back({label_to_json(sc.nodes()[i]), label_to_json(sc.nodes()[j])});
    }
    nlohmann::json triangles = nlohmann::json::array();
    for (const auto& [i, j, k] : sc.triangles()) {
        triangles.push_back({label_to_json(sc.nodes()[i]), label_to_json(sc.nodes()[j]),
                             label_to_json(sc.nodes()[k])});
    }
    return {{"nodes", nodes}, {"edges", edges}, {"triangles", triangles}};
}

SimplicialComplex2 complex_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array()) {
        throw StructuralError("complex must be an object with a 'nodes' array");
    }
    std::vector<NodeLabel> nodes;
    for (const auto& n : j.at("nodes")) {
        nodes.push_back(label_from_json(n));
    }
    const bool infer = j.contains("infer_triangles") && j.at("infer_triangles").is_boolean() &&
                       j.at("infer_triangles").get<bool>();
    return build_complex(nodes, simplices_from_json<2>(j, "edges"),
                         simplices_from_json<3>(j, "triangles"), infer);
}

SimplicialComplex2 read_complex(const fs::path& path)
{
    const auto j = read_json(path);
    try {
        return complex_from_json(j);
    } catch (const StructuralError& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

void write_complex(const SimplicialComplex2& sc, const fs::path& path)
{
    write_json(path, to_json(sc));
}

namespace {

std::optional<Index> lookup_label(const SimplicialComplex2& sc, const std::string& text)
{
    if (text.empty()) return std::nullopt;
    const NodeLabel label = parse_node_label(text);
    if (auto i = sc.find_node(label)) return i;
    if (std::holds_alternative<std::int64_t>(label)) {
        return sc.find_node(NodeLabel{text});
    }
    return std::nullopt;
}

std::vector<std::string> split_on(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::pair<Index, int>> find_simplex(const SimplicialComplex2& sc,
                                                  const std::string& text, int degree)
{
    const auto parts = split_on(text, '-');
    if (static_cast<int>(parts.size()) != degree + 1) {
        return std::nullopt;
    }
    std::vector<Index> idx;
    for (const auto& p : parts) {
        auto i = lookup_label(sc, p);
        if (!i) return std::nullopt;
        idx.push_back(*i);
    }
    if (degree == 0) {
        return std::make_pair(idx[0], 1);
    }
    if (degree == 1) {
        if (idx[0] == idx[1]) return std::nullopt;
        auto e = sc.find_edge(idx[0], idx[1]);
        if (!e) return std::nullopt;
        return std::make_pair(*e, idx[0] < idx[1] ? 1 : -1);
    }
    if (degree == 2) {
        if (idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2]) return std::nullopt;
        auto t = sc.find_triangle(idx[0], idx[1], idx[2]);
        if (!t) return std::nullopt;
        int inversions = 0;
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                if (idx[static_cast<std::size_t>(a)] > idx[static_cast<std::size_t>(b)]) {
                    ++inversions;
                }
            }
        }
        return std::make_pair(*t, inversions % 2 == 0 ? 1 : -1);
    }
    return std::nullopt;
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IngestionError("cannot open " + path.string());
    }
    CsvTable table;
    std::string line;
    int number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        auto fields = split_on(line, ',');
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw IngestionError(path.string() + " line " + std::to_string(number) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.lines.push_back(number);
    }
    if (!have_header) {
        throw IngestionError(path.string() + ": empty file");
    }
    return table;
}

Cochain read_cochain(const SimplicialComplex2& sc, int degree, const fs::path& path)
{
    const CsvTable table = read_csv(path);
    const auto sc_col = table.column("simplex");
    const auto val_col = table.column("value");
    if (!sc_col || !val_col) {
        throw IngestionError(path.string() + ": header must contain simplex,value");
    }
    Index expected = 0;
    switch (degree) {
    case 0: expected = sc.num_nodes(); break;
    case 1: expected = sc.num_edges(); break;
    case 2: expected = sc.num_triangles(); break;
    default: throw UsageError("cochain degree must be 0, 1 or 2");
    }
    Cochain c{degree, Eigen::VectorXd::Zero(expected)};
    std::vector<bool> seen(static_cast<std::size_t>(expected), false);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + " line " + std::to_string(table.lines[r]);
        const auto s = find_simplex(sc, row[*sc_col], degree);
        if (!s) {
            throw IngestionError(where + ": unknown simplex '" + row[*sc_col] + "'");
        }
        const auto v = parse_double(row[*val_col]);
        if (!v || !std::isfinite(*v)) {
            throw IngestionError(where + ": invalid value '" + row[*val_col] + "'");
        }
        if (seen[static_cast<std::size_t>(s->first)]) {
            throw IngestionError(where + ": duplicate row for simplex " +
                                 sc.simplex_name(degree, s->first));
        }
        seen[static_cast<std::size_t>(s->first)] = true;
        c.values[s->first] = s->second * *v;
    }
    const auto missing = std::count(seen.begin(), seen.end(), false);
    if (missing > 0) {
        throw IngestionError(path.string() + ": " + std::to_string(missing) +
                             " simplices have no value");
    }
    return c;
}

void write_cochain(const SimplicialComplex2& sc, const Cochain& c, const fs::path& path,
                   const std::vector<bool>* observed)
{
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    out << "simplex,value\n";
    for (Index i = 0; i < c.values.size(); ++i) {
        if (observed && !(*observed)[static_cast<std::size_t>(i)]) continue;
        out << sc.simplex_name(c.degree, i) << "," << format_double(c.values[i]) << "\n";
    }
}

nlohmann::json spectrum_to_json(const HodgeSpectrum& spectrum)
{
    nlohmann::json counts;
    nlohmann::json values;
    for (auto b : {HodgeBlock::Harmonic, HodgeBlock::Gradient, HodgeBlock::Curl}) {
        const auto& block = spectrum.block(b);
        counts[to_string(b)] = block.size();
        values[to_string(b)] = std::vector<double>(block.values.data(),
                                                   block.values.data() + block.values.size());
    }
    return {{"num_edges", spectrum.num_edges},
            {"truncated", spectrum.truncated},
            {"retained", spectrum.retained},
            {"fingerprint", spectrum.fingerprint()},
            {"counts", counts},
            {"eigenvalues", values}};
}

void write_eigenvectors_csv(const SimplicialComplex2& sc, const HodgeSpectrum& spectrum,
                            const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    const std::pair<const char*, const SpectralBlock*> blocks[] = {
        {"H", &spectrum.harmonic}, {"G", &spectrum.gradient}, {"C", &spectrum.curl}};
    out << "simplex";
    for (const auto& [prefix, block] : blocks) {
        for (Index c = 0; c < block->size(); ++c) out << "," << prefix << c;
    }
    out << "\n";
    for (Index e = 0; e < spectrum.num_edges; ++e) {
        out << sc.edge_name(e);
        for (const auto& [prefix, block] : blocks) {
            for (Index c = 0; c < block->size(); ++c) {
                out << "," << format_double(block->vectors(e, c));
            }
        }
        out << "\n";
    }
}

void write_kernel_spectrum_csv(const SpectralForm& form, const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    out << "lambda,psi,block\n";
    for (const auto& t : form.terms) {
        for (Index i = 0; i < t.weights.size(); ++i) {
            out << format_double(t.eigenvalues[i]) << "," << format_double(t.weights[i]) << ","
                << t.label << "\n";
        }
    }
}

namespace {

template <class V>
std::vector<double> to_vector(const V& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

nlohmann::json checkpoint_to_json(const GPModel& model)
{
    nlohmann::json params;
    const Eigen::VectorXd values = parameter_values(model.kernel);
    for (Index p = 0; p < values.size(); ++p) {
        params[model.parameter_names[static_cast<std::size_t>(p)]] = values[p];
    }
    const auto& c = model.config;
    return {{"kernel", to_json(model.kernel)},
            {"parameters", params},
            {"parameter_names", model.parameter_names},
            {"raw_parameters", to_vector(model.raw_parameters)},
            {"noise_variance", model.noise_variance},
            {"noise_floor", model.noise_floor},
            {"jitter", model.jitter},
            {"train_indices", model.train_indices},
            {"train_values", to_vector(model.train_values)},
            {"fitted", model.fitted},
            {"seed", model.seed},
            {"loss_trace", model.loss_trace},
            {"config",
             {{"iterations", c.iterations},
              {"learning_rate", c.learning_rate},
              {"random_init", c.random_init},
              {"fixed_smoothness", c.fixed_smoothness},
              {"smoothness", c.smoothness},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon}}}};
}

GPModel checkpoint_from_json(const nlohmann::json& j)
{
    try {
        GPModel m;
        m.kernel = kernel_spec_from_json(j.at("kernel"));
        m.parameter_names = j.at("parameter_names").get<std::vector<std::string>>();
        m.raw_parameters = from_vector(j.at("raw_parameters").get<std::vector<double>>());
        m.noise_variance = j.at("noise_variance").get<double>();
        m.noise_floor = j.at("noise_floor").get<double>();
        m.jitter = j.value("jitter", 0.0);
        m.train_indices = j.at("train_indices").get<IndexList>();
        m.train_values = from_vector(j.at("train_values").get<std::vector<double>>());
        m.fitted = j.at("fitted").get<bool>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
        const auto& c = j.at("config");
        m.config.iterations = c.at("iterations").get<int>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.random_init = c.at("random_init").get<bool>();
        m.config.fixed_smoothness = c.at("fixed_smoothness").get<bool>();
        m.config.smoothness = c.at("smoothness").get<double>();
        m.config.beta1 = c.at("beta1").get<double>();
        m.config.beta2 = c.at("beta2").get<double>();
        m.config.epsilon = c.at("epsilon").get<double>();
        m.config.seed = m.seed;
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed checkpoint: ") + e.what());
    }
}

void write_predictions_csv(const SimplicialComplex2& sc, const PosteriorResult& pred,
                           const std::vector<std::string>& split_labels, const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    const bool comps = pred.components.has_value();
    out << "simplex,split,mean,variance";
    if (comps) {
        out << ",mean_H,mean_G,mean_C,var_H,var_G,var_C";
    }
    out << "\n";
    for (std::size_t i = 0; i < pred.test_indices.size(); ++i) {
        const auto r = static_cast<Index>(i);
        out << sc.edge_name(pred.test_indices[i]) << "," << split_labels.at(i) << ","
            << format_double(pred.mean[r]) << "," << format_double(pred.variance[r]);
        if (comps) {
            const auto& c = *pred.components;
            for (const Eigen::VectorXd* v : {&c.mean_harmonic, &c.mean_gradient, &c.mean_curl,
                                             &c.var_harmonic, &c.var_gradient, &c.var_curl}) {
                out << "," << format_double((*v)[r]);
            }
        }
        out << "\n";
    }
}

}  // namespace hodgegp
