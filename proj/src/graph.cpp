#include "ssgcn/graph.hpp"

#include <algorithm>
#include <numeric>

namespace ssgcn {

namespace {

void check_node(NodeId v, NodeId n) {
  if (v < 0 || v >= n)
    throw Error("node index " + std::to_string(v) + " out of range [0, " + std::to_string(n) + ")");
}

SparseGraph assemble(std::vector<WeightedEdge>& directed, NodeId num_nodes, bool sum_duplicates) {
  std::sort(directed.begin(), directed.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  std::vector<NodeId> offsets(num_nodes + 1, 0);
  std::vector<NodeId> cols;
  std::vector<double> weights;
  cols.reserve(directed.size());
  weights.reserve(directed.size());
  for (std::size_t k = 0; k < directed.size(); ++k) {
    const auto& e = directed[k];
    if (k > 0 && directed[k - 1].u == e.u && directed[k - 1].v == e.v) {
      if (sum_duplicates) weights.back() += e.weight;
      continue;
    }
    cols.push_back(e.v);
    weights.push_back(e.weight);
    ++offsets[e.u + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseGraph::from_csr(std::move(offsets), std::move(cols), std::move(weights));
}

}  // namespace

SparseGraph SparseGraph::from_edges(std::span<const Edge> edges, NodeId num_nodes) {
  if (num_nodes < 0) throw Error("negative node count");
  std::vector<WeightedEdge> directed;
  directed.reserve(2 * edges.size());
  for (auto [u, v] : edges) {
    check_node(u, num_nodes);
    check_node(v, num_nodes);
    if (u == v) continue;
    directed.push_back({u, v, 1.0});
    directed.push_back({v, u, 1.0});
  }
  return assemble(directed, num_nodes, false);
}

SparseGraph SparseGraph::from_weighted_edges(std::span<const WeightedEdge> edges, NodeId num_nodes) {
  if (num_nodes < 0) throw Error("negative node count");
  std::vector<WeightedEdge> directed;
  directed.reserve(2 * edges.size());
  for (const auto& e : edges) {
    check_node(e.u, num_nodes);
    check_node(e.v, num_nodes);
    if (!(e.weight >= 0.0)) throw Error("edge weights must be nonnegative");
    if (e.u == e.v) continue;
    directed.push_back({e.u, e.v, e.weight});
    directed.push_back({e.v, e.u, e.weight});
  }
  return assemble(directed, num_nodes, true);
}

SparseGraph SparseGraph::from_csr(std::vector<NodeId> row_offsets, std::vector<NodeId> col_indices,
                                  std::vector<double> edge_weights) {
  if (row_offsets.empty() || row_offsets.front() != 0)
    throw Error("row_offsets must start at 0");
  if (static_cast<std::size_t>(row_offsets.back()) != col_indices.size() ||
      col_indices.size() != edge_weights.size())
    throw Error("CSR array lengths are inconsistent");
  SparseGraph g;
  g.row_offsets_ = std::move(row_offsets);
  g.col_indices_ = std::move(col_indices);
  g.edge_weights_ = std::move(edge_weights);
  const NodeId n = g.num_nodes();
  for (NodeId i = 0; i < n; ++i) {
    if (g.row_offsets_[i + 1] < g.row_offsets_[i]) throw Error("row_offsets not monotone");
    const auto nbrs = g.neighbors(i);
    const auto w = g.weights(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      check_node(nbrs[k], n);
      if (nbrs[k] == i) throw Error("self-loop stored in CSR");
      if (k > 0 && nbrs[k - 1] >= nbrs[k]) throw Error("CSR row not strictly sorted");
      if (!(w[k] >= 0.0)) throw Error("negative edge weight");
      if (g.edge_weight(nbrs[k], i) != w[k]) throw Error("CSR is not symmetric");
    }
  }
  return g;
}

double SparseGraph::weighted_degree(NodeId v) const {
  const auto w = weights(v);
  return std::accumulate(w.begin(), w.end(), 0.0);
}

bool SparseGraph::has_edge(NodeId u, NodeId v) const {
  const auto nbrs = neighbors(u);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

double SparseGraph::edge_weight(NodeId u, NodeId v) const {
  const auto nbrs = neighbors(u);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v);
  if (it == nbrs.end() || *it != v) return 0.0;
  return weights(u)[static_cast<std::size_t>(it - nbrs.begin())];
}

double SparseGraph::total_edge_weight() const {
  return std::accumulate(edge_weights_.begin(), edge_weights_.end(), 0.0) / 2.0;
}

std::vector<Edge> SparseGraph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

std::vector<WeightedEdge> SparseGraph::weighted_edge_list() const {
  std::vector<WeightedEdge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    const auto nbrs = neighbors(u);
    const auto w = weights(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k)
      if (u < nbrs[k]) out.push_back({u, nbrs[k], w[k]});
  }
  return out;
}

std::vector<double> self_loop_degrees(const SparseGraph& g) {
  std::vector<double> deg(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) deg[i] = g.weighted_degree(i) + 1.0;
  return deg;
}

}  // namespace ssgcn
