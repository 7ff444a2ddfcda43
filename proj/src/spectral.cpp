// SPDX-License-Identifier: Apache-2.0

#include "hodgegp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "hodgegp/errors.hpp"
#include "hodgegp/random.hpp"
#include <spdlog/spdlog.h>

namespace hodgegp {

std::string to_string(HodgeBlock block)
{
    switch (block) {
    case HodgeBlock::Harmonic: return "harmonic";
    case HodgeBlock::Gradient: return "gradient";
    case HodgeBlock::Curl: return "curl";
    }
    return "unknown";
}

HodgeBlock parse_hodge_block(const std::string& text)
{
    if (text == "harmonic" || text == "H") return HodgeBlock::Harmonic;
    if (text == "gradient" || text == "G") return HodgeBlock::Gradient;
    if (text == "curl" || text == "C") return HodgeBlock::Curl;
    throw UsageError("unknown Hodge block '" + text + "'");
}

const SpectralBlock& HodgeSpectrum::block(HodgeBlock b) const
{
    switch (b) {
    case HodgeBlock::Harmonic: return harmonic;
    case HodgeBlock::Gradient: return gradient;
    case HodgeBlock::Curl: return curl;
    }
    throw UsageError("unknown Hodge block");
}

double HodgeSpectrum::max_eigenvalue() const
{
    double m = 0.0;
    if (gradient.size() > 0) m = std::max(m, gradient.values.maxCoeff());
    if (curl.size() > 0) m = std::max(m, curl.values.maxCoeff());
    return m;
}

std::string HodgeSpectrum::fingerprint() const
{
    std::ostringstream os;
    os << "L1[N1=" << num_edges << ",nH=" << harmonic.size() << ",nG=" << gradient.size()
       << ",nC=" << curl.size();
    if (truncated) {
        os << ",l=" << retained;
    }
    os << "]";
    return os.str();
}

LaplacianSpectrum laplacian_spectrum(const Eigen::MatrixXd& laplacian, std::string source)
{
    LaplacianSpectrum s;
    s.source = std::move(source);
    if (laplacian.rows() == 0) {
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver failed on " + s.source);
    }
    s.values = solver.eigenvalues();
    s.vectors = solver.eigenvectors();
    return s;
}

ClassifyTolerance default_tolerance(double lambda_max)
{
    ClassifyTolerance tol;
    tol.zero_eigenvalue = 1e-8 * lambda_max;
    return tol;
}

HodgeBlock classify(const Eigen::VectorXd& u, double lambda, const SimplicialComplex2& sc,
                    const ClassifyTolerance& tol)
{
    if (lambda <= tol.zero_eigenvalue) {
        return HodgeBlock::Harmonic;
    }
    const double bound = tol.residual * std::sqrt(lambda);
    const double curl_norm = (sc.b2_real().transpose() * u).norm();
    if (curl_norm <= bound) {
        return HodgeBlock::Gradient;
    }
    const double div_norm = (sc.b1_real() * u).norm();
    if (div_norm <= bound) {
        return HodgeBlock::Curl;
    }
    std::ostringstream os;
    os << "eigenvector at lambda=" << lambda << " is mixed (|curl|=" << curl_norm
       << ", |div|=" << div_norm << ", bound=" << bound
       << "); split its eigenspace by projecting onto im(B1^T) and im(B2)";
    throw ClassificationError(os.str());
}

namespace {

struct BlockBuilder {
    std::vector<Eigen::VectorXd> vectors;
    std::vector<double> values;

    void add(const Eigen::VectorXd& v, double lambda)
    {
        vectors.push_back(v);
        values.push_back(lambda);
    }

    SpectralBlock finish(Index rows) const
    {
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        SpectralBlock block;
        block.vectors.resize(rows, static_cast<Index>(order.size()));
        block.values.resize(static_cast<Index>(order.size()));
        for (std::size_t c = 0; c < order.size(); ++c) {
            block.vectors.col(static_cast<Index>(c)) = vectors[order[c]];
            block.values[static_cast<Index>(c)] = values[order[c]];
        }
        return block;
    }
};

// Only the edge operators; L2 can be far larger than L1.
Laplacians edge_laplacians(const SimplicialComplex2& sc)
{
    Laplacians l;
    l.down = Eigen::MatrixXd(sc.b1_real().transpose() * sc.b1_real());
    l.up = Eigen::MatrixXd(sc.b2_real() * sc.b2_real().transpose());
    l.l1 = l.down + l.up;
    return l;
}

// Rayleigh-Ritz of `l1` on an orthonormal basis.
void rayleigh_ritz(const Eigen::MatrixXd& l1, const Eigen::MatrixXd& basis,
                   Eigen::MatrixXd& vectors, Eigen::VectorXd& values)
{
    if (basis.cols() == 0) {
        vectors.resize(basis.rows(), 0);
        values.resize(0);
        return;
    }
    Eigen::MatrixXd h = basis.transpose() * l1 * basis;
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    vectors = basis * solver.eigenvectors();
    values = solver.eigenvalues();
}

// Splits an eigenspace cluster into pure gradient and curl eigenvectors. The
// span of a cluster is invariant under L_d, whose restriction has eigenvalues
// near lambda on gradient directions and near 0 on curl directions.
void split_cluster(const SimplicialComplex2& sc, const Laplacians& lap,
                   const Eigen::MatrixXd& cluster, double lambda_min,
                   const ClassifyTolerance& tol, BlockBuilder& gradient, BlockBuilder& curl)
{
    Eigen::MatrixXd h = cluster.transpose() * lap.down * cluster;
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed while splitting an L1 eigenspace");
    }
    const Eigen::VectorXd& d = solver.eigenvalues();
    Index n_curl = 0;
    while (n_curl < d.size() && d[n_curl] < 0.5 * lambda_min) ++n_curl;
    const Eigen::MatrixXd rotated = cluster * solver.eigenvectors();
    const Eigen::MatrixXd curl_basis = rotated.leftCols(n_curl);
    const Eigen::MatrixXd grad_basis = rotated.rightCols(d.size() - n_curl);

    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
    rayleigh_ritz(lap.l1, grad_basis, vecs, vals);
    for (Index c = 0; c < vals.size(); ++c) {
        if (classify(vecs.col(c), vals[c], sc, tol) != HodgeBlock::Gradient) {
            throw ClassificationError("projected gradient vector classified as non-gradient");
        }
        gradient.add(vecs.col(c), vals[c]);
    }
    rayleigh_ritz(lap.l1, curl_basis, vecs, vals);
    for (Index c = 0; c < vals.size(); ++c) {
        if (classify(vecs.col(c), vals[c], sc, tol) != HodgeBlock::Curl) {
            throw ClassificationError("projected curl vector classified as non-curl");
        }
        curl.add(vecs.col(c), vals[c]);
    }
    spdlog::debug("split eigenspace near lambda={} of size {} into {} gradient + {} curl vectors",
                  lambda_min, cluster.cols(), grad_basis.cols(), curl_basis.cols());
}

// Classifies non-harmonic eigenpairs (values ascending), splitting clusters that
// contain mixed vectors.
void classify_pairs(const SimplicialComplex2& sc, const Laplacians& lap,
                    const Eigen::MatrixXd& vectors, const Eigen::VectorXd& values,
                    const ClassifyTolerance& tol, double cluster_gap, BlockBuilder& gradient,
                    BlockBuilder& curl, bool require_exact_split)
{
    Index start = 0;
    const Index n = values.size();
    while (start < n) {
        Index end = start + 1;
        while (end < n && values[end] - values[end - 1] <= cluster_gap) {
            ++end;
        }
        const Index size = end - start;
        std::vector<HodgeBlock> labels;
        bool mixed = false;
        for (Index c = start; c < end && !mixed; ++c) {
            try {
                labels.push_back(classify(vectors.col(c), values[c], sc, tol));
            } catch (const ClassificationError&) {
                mixed = true;
            }
        }
        if (!mixed) {
            for (Index c = start; c < end; ++c) {
                auto& target = labels[static_cast<std::size_t>(c - start)] == HodgeBlock::Gradient
                                   ? gradient
                                   : curl;
                target.add(vectors.col(c), values[c]);
            }
        } else {
            const auto before = gradient.values.size() + curl.values.size();
            split_cluster(sc, lap, vectors.middleCols(start, size), values[start], tol,
                          gradient, curl);
            const auto produced =
                static_cast<Index>(gradient.values.size() + curl.values.size() - before);
            if (require_exact_split && produced != size) {
                throw NumericalError("eigenspace split produced " + std::to_string(produced) +
                                     " vectors from a cluster of " + std::to_string(size));
            }
        }
        start = end;
    }
}

}  // namespace

TopEigenpairs largest_eigenpairs(const Eigen::MatrixXd& a, Index count, const EigenOptions& options)
{
    const Index n = a.rows();
    if (count < 0 || count > n) {
        throw UsageError("requested " + std::to_string(count) + " eigenpairs of a " +
                         std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    TopEigenpairs out;
    if (count == 0) {
        out.values.resize(0);
        out.vectors.resize(n, 0);
        return out;
    }
    const Index block = std::min(n, count + std::max<Index>(count / 2, 8));

    Rng rng(options.seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.normal_matrix(n, block));
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);

    double worst = 0.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Eigen::MatrixXd aq = a * q;
        Eigen::MatrixXd h = q.transpose() * aq;
        h = 0.5 * (h + h.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
        // Reverse to descending order.
        const Eigen::MatrixXd s = solver.eigenvectors().rowwise().reverse();
        const Eigen::VectorXd theta = solver.eigenvalues().reverse();
        const Eigen::MatrixXd ritz = q * s;
        const Eigen::MatrixXd a_ritz = aq * s;

        const double scale = std::max(std::abs(theta[0]), 1e-300);
        worst = 0.0;
        for (Index c = 0; c < count; ++c) {
            worst = std::max(worst, (a_ritz.col(c) - theta[c] * ritz.col(c)).norm() / scale);
        }
        if (worst <= options.solver_tolerance || block == n) {
            out.values = theta.head(count);
            out.vectors = ritz.leftCols(count);
            out.iterations = it;
            return out;
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> next(a_ritz);
        q = next.householderQ() * Eigen::MatrixXd::Identity(n, block);
    }
    std::ostringstream os;
    os << "subspace iteration for " << count << " largest eigenpairs did not converge after "
       << options.max_iterations << " iterations (block size " << block
       << ", worst relative residual " << worst << ", tolerance " << options.solver_tolerance
       << ")";
    throw NumericalError(os.str());
}

Eigen::MatrixXd harmonic_basis(const SimplicialComplex2& sc)
{
    const Index n0 = sc.num_nodes();
    const Index n1 = sc.num_edges();

    std::vector<std::vector<std::pair<Index, Index>>> adjacency(static_cast<std::size_t>(n0));
    for (Index e = 0; e < n1; ++e) {
        const auto& [i, j] = sc.edges()[static_cast<std::size_t>(e)];
        adjacency[static_cast<std::size_t>(i)].push_back({j, e});
        adjacency[static_cast<std::size_t>(j)].push_back({i, e});
    }

    // Breadth-first spanning forest.
    std::vector<Index> parent(static_cast<std::size_t>(n0), -1);
    std::vector<Index> parent_edge(static_cast<std::size_t>(n0), -1);
    std::vector<Index> depth(static_cast<std::size_t>(n0), -1);
    std::vector<bool> tree_edge(static_cast<std::size_t>(n1), false);
    for (Index root = 0; root < n0; ++root) {
        if (depth[static_cast<std::size_t>(root)] >= 0) continue;
        depth[static_cast<std::size_t>(root)] = 0;
        std::queue<Index> frontier;
        frontier.push(root);
        while (!frontier.empty()) {
            const Index u = frontier.front();
            frontier.pop();
            for (const auto& [v, e] : adjacency[static_cast<std::size_t>(u)]) {
                if (depth[static_cast<std::size_t>(v)] >= 0) continue;
                depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
                parent[static_cast<std::size_t>(v)] = u;
                parent_edge[static_cast<std::size_t>(v)] = e;
                tree_edge[static_cast<std::size_t>(e)] = true;
                frontier.push(v);
            }
        }
    }

    // Signed contribution of traversing the tree edge between v and its parent,
    // walking from v to parent(v).
    auto step_sign = [&](Index v) {
        const Index e = parent_edge[static_cast<std::size_t>(v)];
        return sc.edges()[static_cast<std::size_t>(e)][0] == v ? 1.0 : -1.0;
    };

    std::vector<Index> cotree;
    for (Index e = 0; e < n1; ++e) {
        if (!tree_edge[static_cast<std::size_t>(e)]) cotree.push_back(e);
    }
    const Index m = static_cast<Index>(cotree.size());
    Eigen::MatrixXd cycles = Eigen::MatrixXd::Zero(n1, m);
    for (Index c = 0; c < m; ++c) {
        const Index e = cotree[static_cast<std::size_t>(c)];
        const auto& [a, b] = sc.edges()[static_cast<std::size_t>(e)];
        // Cycle: a -> b along e, then b back to a through the tree.
        cycles(e, c) = 1.0;
        Index x = b;
        Index y = a;
        std::vector<Index> down_path;
        while (x != y) {
            if (depth[static_cast<std::size_t>(x)] >= depth[static_cast<std::size_t>(y)]) {
                cycles(parent_edge[static_cast<std::size_t>(x)], c) += step_sign(x);
                x = parent[static_cast<std::size_t>(x)];
            } else {
                down_path.push_back(y);
                y = parent[static_cast<std::size_t>(y)];
            }
        }
        // The path from the meeting point down to a walks parent(v) -> v.
        for (Index v : down_path) {
            cycles(parent_edge[static_cast<std::size_t>(v)], c) -= step_sign(v);
        }
    }

    Eigen::MatrixXd kernel;
    if (sc.num_triangles() == 0 || m == 0) {
        kernel = Eigen::MatrixXd::Identity(m, m);
    } else {
        const Eigen::MatrixXd w = sc.b2_real().transpose() * cycles;
        auto null_space = [&](const auto& svd) {
            const auto& sv = svd.singularValues();
            const double threshold = 1e-9 * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
            Index rank = 0;
            while (rank < sv.size() && sv[rank] > threshold) ++rank;
            return Eigen::MatrixXd(svd.matrixV().rightCols(m - rank));
        };
        Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullV);
        if (svd.info() == Eigen::Success && svd.singularValues().allFinite() &&
            svd.matrixV().allFinite()) {
            kernel = null_space(svd);
        } else {
            // divide-and-conquer occasionally breaks down on highly degenerate spectra
            kernel = null_space(Eigen::JacobiSVD<Eigen::MatrixXd>(w, Eigen::ComputeFullV));
        }
    }
    const Eigen::MatrixXd spanning = cycles * kernel;
    if (spanning.cols() == 0) {
        return Eigen::MatrixXd(n1, 0);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(spanning);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n1, spanning.cols());
}

HodgeSpectrum eigendecompose(const SimplicialComplex2& sc, std::optional<Index> truncation,
                             const EigenOptions& options)
{
    const Index n1 = sc.num_edges();
    const Laplacians lap = edge_laplacians(sc);

    HodgeSpectrum spectrum;
    spectrum.num_edges = n1;
    if (n1 == 0) {
        spectrum.harmonic.vectors.resize(0, 0);
        spectrum.gradient.vectors.resize(0, 0);
        spectrum.curl.vectors.resize(0, 0);
        return spectrum;
    }

    BlockBuilder harmonic;
    BlockBuilder gradient;
    BlockBuilder curl;

    if (!truncation) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.l1);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("dense symmetric eigensolver failed on L1");
        }
        const Eigen::VectorXd& values = solver.eigenvalues();
        const Eigen::MatrixXd& vectors = solver.eigenvectors();
        const double lambda_max = values[n1 - 1];
        const ClassifyTolerance tol = default_tolerance(lambda_max);

        Index first_nonzero = 0;
        while (first_nonzero < n1 && values[first_nonzero] <= tol.zero_eigenvalue) {
            harmonic.add(vectors.col(first_nonzero), 0.0);
            ++first_nonzero;
        }
        classify_pairs(sc, lap, vectors.rightCols(n1 - first_nonzero),
                       values.tail(n1 - first_nonzero), tol,
                       options.cluster_tolerance * lambda_max, gradient, curl, true);
        spectrum.retained = n1;
    } else {
        const Index l = *truncation;
        if (l < 0 || l > n1) {
            throw UsageError("truncation l=" + std::to_string(l) + " exceeds N1=" +
                             std::to_string(n1));
        }
        const TopEigenpairs top = largest_eigenpairs(lap.l1, l, options);
        const Eigen::MatrixXd h = harmonic_basis(sc);
        for (Index c = 0; c < h.cols(); ++c) {
            harmonic.add(h.col(c), 0.0);
        }
        spdlog::debug("truncated eigensolver converged in {} iterations", top.iterations);

        double lambda_max = top.values.size() > 0 ? top.values[0] : 0.0;
        const ClassifyTolerance tol = default_tolerance(lambda_max);
        // Ascending, without the (near-)zero modes; those are covered by the exact basis.
        Index keep = 0;
        while (keep < top.values.size() && top.values[keep] > tol.zero_eigenvalue) ++keep;
        const Eigen::VectorXd values = top.values.head(keep).reverse();
        const Eigen::MatrixXd vectors = top.vectors.leftCols(keep).rowwise().reverse();
        classify_pairs(sc, lap, vectors, values, tol, options.cluster_tolerance * lambda_max,
                       gradient, curl, false);
        spectrum.truncated = true;
        spectrum.retained = l;
    }

    spectrum.harmonic = harmonic.finish(n1);
    spectrum.gradient = gradient.finish(n1);
    spectrum.curl = curl.finish(n1);
    return spectrum;
}

HodgeDecomposer::HodgeDecomposer(const SimplicialComplex2& sc)
    : num_edges_(sc.num_edges()),
      grad_op_(Eigen::MatrixXd(sc.b1_real().transpose())),
      curl_op_(Eigen::MatrixXd(sc.b2_real()))
{
    if (grad_op_.cols() > 0 && num_edges_ > 0) {
        grad_ls_.compute(grad_op_);
    }
    if (curl_op_.cols() > 0 && num_edges_ > 0) {
        curl_ls_.compute(curl_op_);
    }
}

HodgeComponents HodgeDecomposer::decompose(const Eigen::VectorXd& f1) const
{
    if (f1.size() != num_edges_) {
        throw UsageError("edge flow has " + std::to_string(f1.size()) + " values, complex has " +
                         std::to_string(num_edges_) + " edges");
    }
    HodgeComponents out;
    out.gradient = Eigen::VectorXd::Zero(num_edges_);
    out.curl = Eigen::VectorXd::Zero(num_edges_);
    if (grad_op_.cols() > 0 && num_edges_ > 0) {
        out.gradient = grad_op_ * grad_ls_.solve(f1);
    }
    if (curl_op_.cols() > 0 && num_edges_ > 0) {
        out.curl = curl_op_ * curl_ls_.solve(f1);
    }
    out.harmonic = f1 - out.gradient - out.curl;
    return out;
}

HodgeComponents hodge_decompose(const SimplicialComplex2& sc, const Cochain& f1)
{
    validate_cochain(sc, f1, 1);
    return HodgeDecomposer(sc).decompose(f1.values);
}

Cochain edge_diffusion(const HodgeSpectrum& spectrum, const Cochain& phi0, double mu,
                       double gamma, double t)
{
    if (!(mu > 0.0) || !(gamma > 0.0)) {
        throw UsageError("edge diffusion rates must be positive");
    }
    if (!(t >= 0.0)) {
        throw UsageError("edge diffusion time must be non-negative");
    }
    if (spectrum.truncated) {
        throw UsageError("edge diffusion needs the full spectrum");
    }
    if (phi0.degree != 1 || phi0.values.size() != spectrum.num_edges) {
        throw UsageError("edge diffusion needs an edge cochain of length N1");
    }
    const auto& h = spectrum.harmonic;
    const auto& g = spectrum.gradient;
    const auto& c = spectrum.curl;
    Eigen::VectorXd phi = h.vectors * (h.vectors.transpose() * phi0.values);
    const Eigen::VectorXd g_decay = (-mu * t * g.values.array()).exp();
    const Eigen::VectorXd c_decay = (-gamma * t * c.values.array()).exp();
    phi += g.vectors * g_decay.cwiseProduct(g.vectors.transpose() * phi0.values);
    phi += c.vectors * c_decay.cwiseProduct(c.vectors.transpose() * phi0.values);
    return {1, phi};
}

Cochain edge_diffusion(const SimplicialComplex2& sc, const Cochain& phi0, double mu,
                       double gamma, double t)
{
    validate_cochain(sc, phi0, 1);
    return edge_diffusion(eigendecompose(sc), phi0, mu, gamma, t);
}

double harmonic_residual(const HodgeSpectrum& spectrum, const Eigen::VectorXd& f,
                         double reference_norm)
{
    const auto& u = spectrum.harmonic.vectors;
    const Eigen::VectorXd off = f - u * (u.transpose() * f);
    return off.norm() / reference_norm;
}

}  // namespace hodgegp
