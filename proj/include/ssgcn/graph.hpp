#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ssgcn {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

struct WeightedEdge {
  NodeId u;
  NodeId v;
  double weight;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Undirected graph in CSR form. Rows are sorted, symmetric, duplicate-free and
// carry no self-loops.
class SparseGraph {
 public:
  SparseGraph() : row_offsets_(1, 0) {}

  // Symmetrizes and deduplicates; self-loops are dropped.
  static SparseGraph from_edges(std::span<const Edge> edges, NodeId num_nodes);

  // Duplicate (u,v) pairs, in either orientation, are summed.
  static SparseGraph from_weighted_edges(std::span<const WeightedEdge> edges, NodeId num_nodes);

  // Validates the CSR invariants and throws Error on violation.
  static SparseGraph from_csr(std::vector<NodeId> row_offsets, std::vector<NodeId> col_indices,
                              std::vector<double> edge_weights);

  NodeId num_nodes() const { return static_cast<NodeId>(row_offsets_.size()) - 1; }
  // Number of undirected edges.
  std::size_t num_edges() const { return col_indices_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_indices_.data() + row_offsets_[v],
            static_cast<std::size_t>(row_offsets_[v + 1] - row_offsets_[v])};
  }
  std::span<const double> weights(NodeId v) const {
    return {edge_weights_.data() + row_offsets_[v],
            static_cast<std::size_t>(row_offsets_[v + 1] - row_offsets_[v])};
  }
  NodeId degree(NodeId v) const { return row_offsets_[v + 1] - row_offsets_[v]; }
  double weighted_degree(NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;
  double edge_weight(NodeId u, NodeId v) const;
  double total_edge_weight() const;

  // Each undirected edge once, with u < v, in row-major order.
  std::vector<Edge> edge_list() const;
  std::vector<WeightedEdge> weighted_edge_list() const;

  const std::vector<NodeId>& row_offsets() const { return row_offsets_; }
  const std::vector<NodeId>& col_indices() const { return col_indices_; }
  const std::vector<double>& edge_weights() const { return edge_weights_; }

  bool operator==(const SparseGraph&) const = default;

 private:
  std::vector<NodeId> row_offsets_;
  std::vector<NodeId> col_indices_;
  std::vector<double> edge_weights_;
};

inline SparseGraph build_csr(std::span<const Edge> edges, NodeId num_nodes) {
  return SparseGraph::from_edges(edges, num_nodes);
}

template <class Scalar = double>
using NormalizedAdjacency = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

template <class Scalar = double>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Degrees of A + I.
std::vector<double> self_loop_degrees(const SparseGraph& g);

// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
template <class Scalar = double>
NormalizedAdjacency<Scalar> normalize_adjacency(const SparseGraph& g) {
  const NodeId n = g.num_nodes();
  const auto deg = self_loop_degrees(g);
  std::vector<Scalar> inv_sqrt(n);
  for (NodeId i = 0; i < n; ++i) inv_sqrt[i] = Scalar(1) / std::sqrt(Scalar(deg[i]));

  NormalizedAdjacency<Scalar> out(n, n);
  out.reserve(Eigen::VectorXi::Constant(n, 1) +
              Eigen::Map<const Eigen::VectorXi>(g.row_offsets().data() + 1, n) -
              Eigen::Map<const Eigen::VectorXi>(g.row_offsets().data(), n));
  for (NodeId i = 0; i < n; ++i) {
    const auto nbrs = g.neighbors(i);
    const auto w = g.weights(i);
    bool diag_done = false;
    for (std::size_t k = 0; k <= nbrs.size(); ++k) {
      // Rows are sorted; slot the diagonal in order.
      if (!diag_done && (k == nbrs.size() || nbrs[k] > i)) {
        out.insert(i, i) = inv_sqrt[i] * inv_sqrt[i];
        diag_done = true;
      }
      if (k == nbrs.size()) break;
      out.insert(i, nbrs[k]) = Scalar(w[k]) * inv_sqrt[i] * inv_sqrt[nbrs[k]];
    }
  }
  out.makeCompressed();
  return out;
}

// Sparse-dense product with a shape check.
template <class Scalar, class Derived>
Matrix<Scalar> spmm(const NormalizedAdjacency<Scalar>& s, const Eigen::MatrixBase<Derived>& m) {
  if (s.cols() != m.rows())
    throw Error("spmm: shape mismatch (" + std::to_string(s.cols()) + " vs " +
                std::to_string(m.rows()) + ")");
  return s * m;
}

}  // namespace ssgcn
