#include "cforge/graph.hpp"

#include <algorithm>
#include <queue>

#include "cforge/errors.hpp"

namespace cforge {

Graph::Graph(int node_count, std::vector<std::pair<int, int>> edges)
    : node_count_(node_count) {
    if (node_count < 1) {
        throw DimensionMismatch("graph needs at least one node");
    }
    for (auto& [a, b] : edges) {
        if (a < 1 || a > node_count || b < 1 || b > node_count) {
            throw DimensionMismatch("edge endpoint out of range [1, N]");
        }
        if (a == b) {
            throw DimensionMismatch("self-loops are not allowed");
        }
        if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    neighbors_.assign(node_count_, {});
    for (const auto& [a, b] : edges_) {
        neighbors_[a - 1].push_back(b);
        neighbors_[b - 1].push_back(a);
    }
    for (auto& list : neighbors_) std::sort(list.begin(), list.end());
}

Graph Graph::path(int node_count) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < node_count; ++i) edges.emplace_back(i, i + 1);
    return Graph(node_count, std::move(edges));
}

Graph Graph::complete(int node_count) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i <= node_count; ++i)
        for (int j = i + 1; j <= node_count; ++j) edges.emplace_back(i, j);
    return Graph(node_count, std::move(edges));
}

const std::vector<int>& Graph::neighbors(int node) const {
    if (node < 1 || node > node_count_) {
        throw DimensionMismatch("node index out of range");
    }
    return neighbors_[node - 1];
}

int Graph::degree(int node) const {
    return static_cast<int>(neighbors(node).size());
}

bool Graph::connected() const {
    std::vector<char> seen(node_count_, 0);
    std::queue<int> frontier;
    frontier.push(1);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        for (int w : neighbors_[v - 1]) {
            if (!seen[w - 1]) {
                seen[w - 1] = 1;
                ++reached;
                frontier.push(w);
            }
        }
    }
    return reached == node_count_;
}

Matrix Graph::adjacency() const {
    Matrix a = Matrix::Zero(node_count_, node_count_);
    for (const auto& [i, j] : edges_) {
        a(i - 1, j - 1) = 1.0;
        a(j - 1, i - 1) = 1.0;
    }
    return a;
}

Pinning::Pinning(std::vector<int> gains_in) : gains(std::move(gains_in)) {
    for (int g : gains) {
        if (g != 0 && g != 1) {
            throw DimensionMismatch("pinning gains must be 0 or 1");
        }
    }
}

Pinning Pinning::none(int node_count) {
    return Pinning(std::vector<int>(node_count, 0));
}

Pinning Pinning::single(int node_count, int pinned_node) {
    std::vector<int> g(node_count, 0);
    if (pinned_node < 1 || pinned_node > node_count) {
        throw DimensionMismatch("pinned node out of range");
    }
    g[pinned_node - 1] = 1;
    return Pinning(std::move(g));
}

bool Pinning::any() const {
    return std::any_of(gains.begin(), gains.end(), [](int g) { return g != 0; });
}

Matrix Pinning::matrix() const {
    Matrix g = Matrix::Zero(node_count(), node_count());
    for (int i = 0; i < node_count(); ++i) g(i, i) = gains[i];
    return g;
}

Matrix build_laplacian(const Graph& graph) {
    const int n = graph.node_count();
    Matrix lap = Matrix::Zero(n, n);
    for (int i = 1; i <= n; ++i) lap(i - 1, i - 1) = graph.degree(i);
    for (const auto& [a, b] : graph.edges()) {
        lap(a - 1, b - 1) = -1.0;
        lap(b - 1, a - 1) = -1.0;
    }
    return lap;
}

const Matrix& GroundedMatrix::require_positive_definite() const {
    if (!positive_definite) {
        throw NotPositiveDefinite(
            "grounded matrix L + G is not positive definite; the graph must be "
            "connected with at least one pinned node");
    }
    return value;
}

GroundedMatrix grounded_matrix(const Matrix& laplacian, const Pinning& pinning) {
    if (laplacian.rows() != laplacian.cols()) {
        throw DimensionMismatch("laplacian must be square");
    }
    if (laplacian.rows() != pinning.node_count()) {
        throw DimensionMismatch("pinning size does not match laplacian");
    }
    GroundedMatrix out;
    out.value = laplacian + pinning.matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.value);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed for L + G");
    }
    out.min_eigenvalue = eig.eigenvalues()(0);
    out.positive_definite = out.min_eigenvalue > 0.0;
    return out;
}

}  // namespace cforge
