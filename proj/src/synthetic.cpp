#include "ssgcn/synthetic.hpp"
#include "ssgcn/rng.hpp"

#include <algorithm>
#include <numeric>

namespace ssgcn {

Dataset make_synthetic(const SyntheticConfig& cfg) {
  const NodeId n = cfg.nodes;
  const int c = cfg.classes;
  if (c < 2 || n < c) throw Error("make_synthetic: need at least two classes and one node per class");
  if (cfg.feature_dim < c) throw Error("make_synthetic: feature_dim below class count");
  if (static_cast<long>(cfg.train_per_class) * c + cfg.val_size + cfg.test_size > n)
    throw Error("make_synthetic: splits exceed node count");

  Rng rng(cfg.seed);
  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = c;
  ds.labels.resize(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) ds.labels[v] = v % c;
  rng.shuffle(ds.labels);

  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(c));
  for (NodeId v = 0; v < n; ++v) members[ds.labels[v]].push_back(v);

  const long m = static_cast<long>(cfg.avg_degree * n / 2.0);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long e = 0; e < m; ++e) {
    const auto u = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    NodeId v;
    if (rng.uniform() < cfg.homophily) {
      const auto& same = members[ds.labels[u]];
      v = same[rng.below(same.size())];
    } else {
      v = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
    }
    if (u != v) edges.emplace_back(u, v);
  }
  ds.graph = build_csr(edges, n);

  const int vocab = cfg.feature_dim / c;
  ds.features = Eigen::MatrixXd::Zero(n, cfg.feature_dim);
  for (NodeId v = 0; v < n; ++v)
    for (int w = 0; w < cfg.words_per_node; ++w) {
      const int f = rng.uniform() < cfg.topic_share
                        ? ds.labels[v] * vocab + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab)))
                        : static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.feature_dim)));
      ds.features(v, f) = 1.0;
    }

  std::vector<int> taken(static_cast<std::size_t>(c), 0);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (NodeId v = 0; v < n; ++v)
    if (taken[ds.labels[v]] < cfg.train_per_class) {
      ++taken[ds.labels[v]];
      ds.splits.train.push_back(v);
      used[v] = 1;
    }
  std::vector<NodeId> rest;
  for (NodeId v = 0; v < n; ++v)
    if (!used[v]) rest.push_back(v);
  ds.splits.val.assign(rest.begin(), rest.begin() + cfg.val_size);
  ds.splits.test.assign(rest.end() - cfg.test_size, rest.end());
  validate(ds);
  return ds;
}

}  // namespace ssgcn
