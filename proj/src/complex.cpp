// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/complex.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "hodgegp/errors.hpp"

namespace hodgegp {

std::string to_string(const NodeLabel& label)
{
    if (const auto* i = std::get_if<std::int64_t>(&label)) {
        return std::to_string(*i);
    }
    return std::get<std::string>(label);
}

NodeLabel parse_node_label(const std::string& text)
{
    std::int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc() && ptr == last && !text.empty()) {
        return value;
    }
    return text;
}

void validate_cochain(const SimplicialComplex2& sc, const Cochain& c, int degree)
{
    if (c.degree != degree) {
        throw UsageError("expected a degree-" + std::to_string(degree) + " cochain, got degree " +
                         std::to_string(c.degree));
    }
    Index expected = 0;
    switch (degree) {
    case 0: expected = sc.num_nodes(); break;
    case 1: expected = sc.num_edges(); break;
    case 2: expected = sc.num_triangles(); break;
    default: throw UsageError("cochain degree must be 0, 1 or 2");
    }
    if (c.values.size() != expected) {
        throw UsageError("degree-" + std::to_string(degree) + " cochain has " +
                         std::to_string(c.values.size()) + " values, complex has " +
                         std::to_string(expected) + " simplices");
    }
    if (!c.values.allFinite()) {
        throw UsageError("cochain contains non-finite values");
    }
}

std::optional<Index> SimplicialComplex2::find_node(const NodeLabel& label) const
{
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), label);
    if (it == nodes_.end() || *it != label) {
        return std::nullopt;
    }
    return static_cast<Index>(it - nodes_.begin());
}

std::optional<Index> SimplicialComplex2::find_edge(Index i, Index j) const
{
    const Edge key{std::min(i, j), std::max(i, j)};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key) {
        return std::nullopt;
    }
    return static_cast<Index>(it - edges_.begin());
}

std::optional<Index> SimplicialComplex2::find_triangle(Index i, Index j, Index k) const
{
    Triangle key{i, j, k};
    std::sort(key.begin(), key.end());
    auto it = std::lower_bound(triangles_.begin(), triangles_.end(), key);
    if (it == triangles_.end() || *it != key) {
        return std::nullopt;
    }
    return static_cast<Index>(it - triangles_.begin());
}

std::string SimplicialComplex2::edge_name(Index e) const
{
    const auto& [i, j] = edges_.at(static_cast<std::size_t>(e));
    return to_string(nodes_[i]) + "-" + to_string(nodes_[j]);
}

std::string SimplicialComplex2::triangle_name(Index t) const
{
    const auto& [i, j, k] = triangles_.at(static_cast<std::size_t>(t));
    return to_string(nodes_[i]) + "-" + to_string(nodes_[j]) + "-" + to_string(nodes_[k]);
}

std::string SimplicialComplex2::simplex_name(int degree, Index s) const
{
    switch (degree) {
    case 0: return to_string(nodes_.at(static_cast<std::size_t>(s)));
    case 1: return edge_name(s);
    case 2: return triangle_name(s);
    default: throw UsageError("simplex degree must be 0, 1 or 2");
    }
}

namespace {

Index lookup_node(const std::vector<NodeLabel>& sorted, const NodeLabel& label, const char* what)
{
    auto it = std::lower_bound(sorted.begin(), sorted.end(), label);
    if (it == sorted.end() || *it != label) {
        throw StructuralError(std::string(what) + " references undeclared node '" +
                              to_string(label) + "'");
    }
    return static_cast<Index>(it - sorted.begin());
}

void check_labels(const std::vector<NodeLabel>& nodes)
{
    if (nodes.empty()) {
        return;
    }
    const auto kind = nodes.front().index();
    for (const auto& n : nodes) {
        if (n.index() != kind) {
            throw StructuralError("node labels mix integers and strings");
        }
        const std::string text = to_string(n);
        if (text.empty() || text.find_first_of("-,\n") != std::string::npos) {
            throw StructuralError("node label '" + text +
                                  "' is empty or contains '-', ',' or a newline");
        }
    }
}

}  // namespace

SimplicialComplex2 build_complex(const std::vector<NodeLabel>& nodes,
                                 const std::vector<std::array<NodeLabel, 2>>& edges,
                                 const std::vector<std::array<NodeLabel, 3>>& triangles,
                                 bool infer_triangles)
{
    SimplicialComplex2 sc;

    check_labels(nodes);
    sc.nodes_ = nodes;
    std::sort(sc.nodes_.begin(), sc.nodes_.end());
    if (auto dup = std::adjacent_find(sc.nodes_.begin(), sc.nodes_.end()); dup != sc.nodes_.end()) {
        throw StructuralError("duplicate node '" + to_string(*dup) + "'");
    }

    sc.edges_.reserve(edges.size());
    for (const auto& e : edges) {
        Index a = lookup_node(sc.nodes_, e[0], "edge");
        Index b = lookup_node(sc.nodes_, e[1], "edge");
        if (a == b) {
            throw StructuralError("self-loop at node '" + to_string(e[0]) + "'");
        }
        sc.edges_.push_back({std::min(a, b), std::max(a, b)});
    }
    std::sort(sc.edges_.begin(), sc.edges_.end());
    if (auto dup = std::adjacent_find(sc.edges_.begin(), sc.edges_.end()); dup != sc.edges_.end()) {
        throw StructuralError("duplicate edge " + to_string(sc.nodes_[(*dup)[0]]) + "-" +
                              to_string(sc.nodes_[(*dup)[1]]));
    }

    sc.triangles_.reserve(triangles.size());
    for (const auto& t : triangles) {
        SimplicialComplex2::Triangle tri{lookup_node(sc.nodes_, t[0], "triangle"),
                                         lookup_node(sc.nodes_, t[1], "triangle"),
                                         lookup_node(sc.nodes_, t[2], "triangle")};
        std::sort(tri.begin(), tri.end());
        if (tri[0] == tri[1] || tri[1] == tri[2]) {
            throw StructuralError("degenerate triangle with a repeated node");
        }
        sc.triangles_.push_back(tri);
    }
    std::sort(sc.triangles_.begin(), sc.triangles_.end());
    if (auto dup = std::adjacent_find(sc.triangles_.begin(), sc.triangles_.end());
        dup != sc.triangles_.end()) {
        throw StructuralError("duplicate triangle " + to_string(sc.nodes_[(*dup)[0]]) + "-" +
                              to_string(sc.nodes_[(*dup)[1]]) + "-" +
                              to_string(sc.nodes_[(*dup)[2]]));
    }

    if (infer_triangles) {
        std::vector<std::vector<Index>> higher(sc.nodes_.size());
        for (const auto& [i, j] : sc.edges_) {
            higher[static_cast<std::size_t>(i)].push_back(j);
        }
        // Edges are sorted, so each neighbour list is already increasing.
        std::vector<SimplicialComplex2::Triangle> cliques;
        for (const auto& [i, j] : sc.edges_) {
            const auto& ni = higher[static_cast<std::size_t>(i)];
            const auto& nj = higher[static_cast<std::size_t>(j)];
            std::vector<Index> common;
            std::set_intersection(ni.begin(), ni.end(), nj.begin(), nj.end(),
                                  std::back_inserter(common));
            for (Index k : common) {
                cliques.push_back({i, j, k});
            }
        }
        std::vector<SimplicialComplex2::Triangle> merged;
        merged.reserve(cliques.size() + sc.triangles_.size());
        std::sort(cliques.begin(), cliques.end());
        std::set_union(cliques.begin(), cliques.end(), sc.triangles_.begin(),
                       sc.triangles_.end(), std::back_inserter(merged));
        sc.triangles_ = std::move(merged);
    }

    const Index n0 = sc.num_nodes();
    const Index n1 = sc.num_edges();
    const Index n2 = sc.num_triangles();

    std::vector<Eigen::Triplet<int>> t1;
    t1.reserve(static_cast<std::size_t>(2 * n1));
    for (Index e = 0; e < n1; ++e) {
        const auto& [i, j] = sc.edges_[static_cast<std::size_t>(e)];
        t1.emplace_back(i, e, -1);
        t1.emplace_back(j, e, 1);
    }
    sc.b1_.resize(n0, n1);
    sc.b1_.setFromTriplets(t1.begin(), t1.end());

    std::vector<Eigen::Triplet<int>> t2;
    t2.reserve(static_cast<std::size_t>(3 * n2));
    for (Index t = 0; t < n2; ++t) {
        const auto& [i, j, k] = sc.triangles_[static_cast<std::size_t>(t)];
        const auto ij = sc.find_edge(i, j);
        const auto ik = sc.find_edge(i, k);
        const auto jk = sc.find_edge(j, k);
        if (!ij || !ik || !jk) {
            throw StructuralError("triangle " + sc.triangle_name(t) +
                                  " has a boundary edge that is not declared");
        }
        t2.emplace_back(*ij, t, 1);
        t2.emplace_back(*ik, t, -1);
        t2.emplace_back(*jk, t, 1);
    }
    sc.b2_.resize(n1, n2);
    sc.b2_.setFromTriplets(t2.begin(), t2.end());

    sc.b1_real_ = sc.b1_.cast<double>();
    sc.b2_real_ = sc.b2_.cast<double>();
    return sc;
}

Laplacians laplacians(const SimplicialComplex2& sc)
{
    const auto& b1 = sc.b1_real();
    const auto& b2 = sc.b2_real();
    Laplacians l;
    l.l0 = Eigen::MatrixXd(b1 * b1.transpose());
    l.down = Eigen::MatrixXd(b1.transpose() * b1);
    l.up = Eigen::MatrixXd(b2 * b2.transpose());
    l.l2 = Eigen::MatrixXd(b2.transpose() * b2);
    l.l1 = l.down + l.up;
    return l;
}

Cochain grad(const SimplicialComplex2& sc, const Cochain& f0)
{
    validate_cochain(sc, f0, 0);
    return {1, sc.b1_real().transpose() * f0.values};
}

Cochain div(const SimplicialComplex2& sc, const Cochain& f1)
{
    validate_cochain(sc, f1, 1);
    return {0, sc.b1_real() * f1.values};
}

Cochain curl(const SimplicialComplex2& sc, const Cochain& f1)
{
    validate_cochain(sc, f1, 1);
    return {2, sc.b2_real().transpose() * f1.values};
}

Cochain curl_adjoint(const SimplicialComplex2& sc, const Cochain& f2)
{
    validate_cochain(sc, f2, 2);
    return {1, sc.b2_real() * f2.values};
}

Eigen::MatrixXd line_graph_laplacian(const SimplicialComplex2& sc)
{
    const auto& b1 = sc.b1_real();
    Eigen::MatrixXd adjacency = Eigen::MatrixXd(b1.transpose() * b1);
    adjacency.diagonal().array() -= 2.0;
    adjacency = adjacency.cwiseAbs();
    Eigen::MatrixXd lap = -adjacency;
    lap.diagonal() += adjacency.rowwise().sum();
    return lap;
}

}  // namespace hodgegp
