#pragma once

#include <utility>
#include <vector>

#include "cforge/types.hpp"

namespace cforge {

// Undirected communication graph on nodes 1..N with unit edge weights.
class Graph {
  public:
    Graph(int node_count, std::vector<std::pair<int, int>> edges);

    static Graph path(int node_count);
    static Graph complete(int node_count);

    int node_count() const { return node_count_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int node) const;  // node is 1-based
    int degree(int node) const;
    bool connected() const;

    Matrix adjacency() const;

  private:
    int node_count_;
    std::vector<std::pair<int, int>> edges_;     // normalized i < j, sorted, unique
    std::vector<std::vector<int>> neighbors_;    // per node, sorted, 1-based
};

// Leader pinning gains g_i in {0, 1}.
struct Pinning {
    std::vector<int> gains;

    explicit Pinning(std::vector<int> gains_in);
    static Pinning none(int node_count);
    static Pinning single(int node_count, int pinned_node);

    int node_count() const { return static_cast<int>(gains.size()); }
    bool any() const;
    Matrix matrix() const;
};

Matrix build_laplacian(const Graph& graph);

struct GroundedMatrix {
    Matrix value;                 // L + G
    bool positive_definite;
    double min_eigenvalue;

    // Throws NotPositiveDefinite when the network cannot track a leader
    // (disconnected graph or no pinned node).
    const Matrix& require_positive_definite() const;
};

GroundedMatrix grounded_matrix(const Matrix& laplacian, const Pinning& pinning);

}  // namespace cforge
