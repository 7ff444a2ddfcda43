// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and brute-force oracles for the test binaries.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "hodgegp/complex.hpp"
#include "hodgegp/data.hpp"
#include "hodgegp/random.hpp"

namespace hodgegp::test {

/// The 7-node complex with triangles [1,2,3], [2,3,5], [3,5,6] and a single
/// hole bounded by 1-3-4.
inline SimplicialComplex2 fig1a()
{
    std::vector<NodeLabel> nodes;
    for (std::int64_t i = 1; i <= 7; ++i) nodes.emplace_back(i);
    const std::vector<std::array<int, 2>> e = {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 5},
                                               {3, 4}, {3, 5}, {3, 6}, {5, 6}, {5, 7}};
    const std::vector<std::array<int, 3>> t = {{1, 2, 3}, {2, 3, 5}, {3, 5, 6}};
    std::vector<std::array<NodeLabel, 2>> edges;
    for (const auto& [a, b] : e) edges.push_back({std::int64_t{a}, std::int64_t{b}});
    std::vector<std::array<NodeLabel, 3>> tris;
    for (const auto& [a, b, c] : t) tris.push_back({std::int64_t{a}, std::int64_t{b}, std::int64_t{c}});
    return build_complex(nodes, edges, tris);
}

/// B1 of fig1a, rows nodes 1..7, columns edges in listed order.
inline Eigen::MatrixXi fig1a_b1()
{
    Eigen::MatrixXi b(7, 10);
    b << -1, -1, -1, 0, 0, 0, 0, 0, 0, 0,
          1, 0, 0, -1, -1, 0, 0, 0, 0, 0,
          0, 1, 0, 1, 0, -1, -1, -1, 0, 0,
          0, 0, 1, 0, 0, 1, 0, 0, 0, 0,
          0, 0, 0, 0, 1, 0, 1, 0, -1, -1,
          0, 0, 0, 0, 0, 0, 0, 1, 1, 0,
          0, 0, 0, 0, 0, 0, 0, 0, 0, 1;
    return b;
}

inline Eigen::MatrixXi fig1a_b2()
{
    Eigen::MatrixXi b(10, 3);
    b << 1, 0, 0,
        -1, 0, 0,
         0, 0, 0,
         1, 1, 0,
         0, -1, 0,
         0, 0, 0,
         0, 1, 1,
         0, 0, -1,
         0, 0, 1,
         0, 0, 0;
    return b;
}

/// Random connected complex with triangles, drawn from G(n, p) with a random
/// fill ratio. Sizes stay between `min_edges` and `max_edges`.
inline SimplicialComplex2 random_test_complex(Rng& rng, Index min_edges = 6, Index max_edges = 60)
{
    for (;;) {
        const Index n = 5 + static_cast<Index>(rng.uniform_index(14));
        const double p = 0.25 + 0.4 * rng.uniform();
        const double fill = 0.2 + 0.8 * rng.uniform();
        try {
            auto sc = random_complex(n, p, fill, rng.next());
            if (sc.num_edges() >= min_edges && sc.num_edges() <= max_edges &&
                sc.num_triangles() > 0) {
                return sc;
            }
        } catch (const std::exception&) {
        }
    }
}

struct BruteForcePosterior {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Joint-Gaussian conditioning with an explicit LU inverse. `cross` is the
/// covariance between the predicted quantity and f; pass `k` itself to
/// predict f.
inline BruteForcePosterior brute_force_posterior(const Eigen::MatrixXd& k,
                                                 const Eigen::MatrixXd& cross,
                                                 const std::vector<Index>& train,
                                                 const Eigen::VectorXd& y, double noise,
                                                 const std::vector<Index>& test)
{
    const auto nt = static_cast<Index>(train.size());
    const auto ns = static_cast<Index>(test.size());
    Eigen::MatrixXd ktt(nt, nt);
    Eigen::MatrixXd kst(ns, nt);
    Eigen::MatrixXd kss(ns, ns);
    for (Index i = 0; i < nt; ++i) {
        for (Index j = 0; j < nt; ++j) ktt(i, j) = k(train[i], train[j]);
    }
    for (Index i = 0; i < ns; ++i) {
        for (Index j = 0; j < nt; ++j) kst(i, j) = cross(test[i], train[j]);
        for (Index j = 0; j < ns; ++j) kss(i, j) = cross(test[i], test[j]);
    }
    ktt += noise * Eigen::MatrixXd::Identity(nt, nt);
    const Eigen::MatrixXd inv = ktt.fullPivLu().inverse();
    BruteForcePosterior r;
    r.mean = kst * inv * y;
    r.variance = (kss - kst * inv * kst.transpose()).diagonal();
    return r;
}

/// Central differences of a scalar function.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h = 1e-5)
{
    Eigen::VectorXd g(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x;
        Eigen::VectorXd b = x;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double scale = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / scale;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hodgegp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace hodgegp::test
