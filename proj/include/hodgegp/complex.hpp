// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hodgegp {

using Index = Eigen::Index;

/// Node identifier. Integers order numerically, strings lexicographically.
/// A complex never mixes the two kinds.
using NodeLabel = std::variant<std::int64_t, std::string>;

std::string to_string(const NodeLabel& label);

/// Parses "12" as an integer label and anything else as a string label.
NodeLabel parse_node_label(const std::string& text);

/// Real-valued function on the nodes (0), edges (1) or triangles (2) of a complex.
struct Cochain {
    int degree = 0;
    Eigen::VectorXd values;
};

class SimplicialComplex2;

/// Throws UsageError unless `c` has degree `degree`, matching length and finite values.
void validate_cochain(const SimplicialComplex2& sc, const Cochain& c, int degree);

/// Oriented simplicial 2-complex. Nodes are kept sorted; edges [i,j] with i<j and
/// triangles [i,j,k] with i<j<k are stored in lexicographic order of node indices,
/// which is also the order of node labels. Immutable once built.
class SimplicialComplex2 {
public:
    using Edge = std::array<Index, 2>;
    using Triangle = std::array<Index, 3>;

    Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles_.size()); }

    const std::vector<NodeLabel>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }

    /// Node-to-edge incidence, N0 x N1, entries in {-1, 0, +1}.
    const Eigen::SparseMatrix<int>& b1() const { return b1_; }
    /// Edge-to-triangle incidence, N1 x N2.
    const Eigen::SparseMatrix<int>& b2() const { return b2_; }
    const Eigen::SparseMatrix<double>& b1_real() const { return b1_real_; }
    const Eigen::SparseMatrix<double>& b2_real() const { return b2_real_; }
    Eigen::MatrixXi b1_dense() const { return Eigen::MatrixXi(b1_); }
    Eigen::MatrixXi b2_dense() const { return Eigen::MatrixXi(b2_); }

    std::optional<Index> find_node(const NodeLabel& label) const;
    /// Edge index for the unordered node pair {i, j}, whatever order it is given in.
    std::optional<Index> find_edge(Index i, Index j) const;
    std::optional<Index> find_triangle(Index i, Index j, Index k) const;

    /// "i-j" / "i-j-k" using node labels; the encoding used by cochain files.
    std::string edge_name(Index e) const;
    std::string triangle_name(Index t) const;
    std::string simplex_name(int degree, Index s) const;

private:
    friend SimplicialComplex2 build_complex(const std::vector<NodeLabel>&,
                                            const std::vector<std::array<NodeLabel, 2>>&,
                                            const std::vector<std::array<NodeLabel, 3>>&,
                                            bool);

    std::vector<NodeLabel> nodes_;
    std::vector<Edge> edges_;
    std::vector<Triangle> triangles_;
    Eigen::SparseMatrix<int> b1_;
    Eigen::SparseMatrix<int> b2_;
    Eigen::SparseMatrix<double> b1_real_;
    Eigen::SparseMatrix<double> b2_real_;
};

/// Builds a complex with canonical (increasing-label) orientations.
///
/// Edges and triangles may be listed with their labels in any order. When
/// `infer_triangles` is set, every 3-clique of the graph becomes a triangle in
/// addition to the listed ones; otherwise only listed triangles are faces.
///
/// Throws StructuralError on dangling references, self-loops, repeated
/// simplices, mixed label kinds, labels containing '-', and triangles whose
/// boundary edges are not all declared.
SimplicialComplex2 build_complex(const std::vector<NodeLabel>& nodes,
                                 const std::vector<std::array<NodeLabel, 2>>& edges,
                                 const std::vector<std::array<NodeLabel, 3>>& triangles,
                                 bool infer_triangles = false);

struct Laplacians {
    Eigen::MatrixXd l0;    // B1 B1^T
    Eigen::MatrixXd l1;    // ld + lu
    Eigen::MatrixXd down;  // B1^T B1
    Eigen::MatrixXd up;    // B2 B2^T
    Eigen::MatrixXd l2;    // B2^T B2
};

Laplacians laplacians(const SimplicialComplex2& sc);

/// B1^T f0: the difference f0(j) - f0(i) on every edge [i,j].
Cochain grad(const SimplicialComplex2& sc, const Cochain& f0);
/// B1 f1: net flow through every node.
Cochain div(const SimplicialComplex2& sc, const Cochain& f1);
/// B2^T f1: circulation around every triangle.
Cochain curl(const SimplicialComplex2& sc, const Cochain& f1);
/// B2 f2: the curl adjoint, lifting a triangle function to a div-free edge flow.
Cochain curl_adjoint(const SimplicialComplex2& sc, const Cochain& f2);

/// Laplacian of the line graph, A = |B1^T B1 - 2I|, L = diag(A 1) - A.
/// Triangles are ignored.
Eigen::MatrixXd line_graph_laplacian(const SimplicialComplex2& sc);

}  // namespace hodgegp
