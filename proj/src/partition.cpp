#include "ssgcn/rng.hpp"
#include "ssgcn/ssl_tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <queue>
#include <tuple>

namespace ssgcn {

double edgecut(const SparseGraph& g, std::span<const int> labels) {
  if (static_cast<NodeId>(labels.size()) != g.num_nodes()) throw Error("edgecut: label count mismatch");
  double cut = 0.0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const auto nbrs = g.neighbors(u);
    const auto w = g.weights(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k)
      if (labels[u] != labels[nbrs[k]]) cut += w[k];
  }
  return cut / 2.0;
}

double balance_factor(std::span<const int> labels, int k) {
  if (labels.empty()) return 0.0;
  std::vector<long> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes.at(static_cast<std::size_t>(l));
  return static_cast<double>(k) * static_cast<double>(*std::max_element(sizes.begin(), sizes.end())) /
         static_cast<double>(labels.size());
}

long max_part_weight(long total_weight, int k, double epsilon) {
  if (k < 1) throw Error("partition: k must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("partition: epsilon must lie in (0, 1)");
  if (k > total_weight)
    throw Error("partition: k = " + std::to_string(k) + " exceeds node count " + std::to_string(total_weight));
  // Small slack so that exact products like 1.2 * 6 / 2 are not floored to 2.
  const long cap =
      static_cast<long>(std::floor((1.0 + epsilon) * static_cast<double>(total_weight) / k + 1e-9));
  const long need = (total_weight + k - 1) / k;
  if (cap < need)
    throw Error("partition: balance constraint infeasible (cap " + std::to_string(cap) + " < " +
                std::to_string(need) + " nodes per part)");
  return cap;
}

namespace {

struct Level {
  SparseGraph graph;
  std::vector<long> vweight;
  std::vector<NodeId> to_coarse;  // fine vertex -> vertex of the next coarser level
};

std::vector<long> part_weights(std::span<const long> vw, std::span<const int> labels, int k) {
  std::vector<long> pw(static_cast<std::size_t>(k), 0);
  for (std::size_t v = 0; v < labels.size(); ++v) pw[labels[v]] += vw[v];
  return pw;
}

std::vector<long> part_counts(std::span<const int> labels, int k) {
  std::vector<long> pc(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++pc[l];
  return pc;
}

// Connection weight from v to every part, accumulated into conn (size k, all
// zero on entry); touched records which entries became nonzero.
void connections(const SparseGraph& g, std::span<const int> labels, NodeId v, std::vector<double>& conn,
                 std::vector<int>& touched) {
  const auto nbrs = g.neighbors(v);
  const auto w = g.weights(v);
  for (std::size_t e = 0; e < nbrs.size(); ++e) {
    const int p = labels[nbrs[e]];
    if (conn[p] == 0.0) touched.push_back(p);
    conn[p] += w[e];
  }
}

Level coarsen(const Level& fine, long max_vweight, Rng& rng, std::vector<NodeId>& to_coarse) {
  const SparseGraph& g = fine.graph;
  const NodeId n = g.num_nodes();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<NodeId> match(n, -1);
  for (NodeId u : order) {
    if (match[u] != -1) continue;
    NodeId best = -1;
    double best_w = -1.0;
    const auto nbrs = g.neighbors(u);
    const auto w = g.weights(u);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const NodeId v = nbrs[e];
      if (match[v] != -1 || fine.vweight[u] + fine.vweight[v] > max_vweight) continue;
      if (w[e] > best_w) {
        best_w = w[e];
        best = v;
      }
    }
    if (best == -1) {
      match[u] = u;
    } else {
      match[u] = best;
      match[best] = u;
    }
  }
  to_coarse.assign(n, -1);
  NodeId nc = 0;
  for (NodeId u = 0; u < n; ++u) {
    if (to_coarse[u] != -1) continue;
    to_coarse[u] = nc;
    to_coarse[match[u]] = nc;
    ++nc;
  }
  Level coarse;
  coarse.vweight.assign(nc, 0);
  for (NodeId u = 0; u < n; ++u) coarse.vweight[to_coarse[u]] += fine.vweight[u];
  std::vector<WeightedEdge> edges;
  edges.reserve(g.num_edges());
  for (const auto& e : g.weighted_edge_list()) {
    const NodeId a = to_coarse[e.u], b = to_coarse[e.v];
    if (a != b) edges.push_back({a, b, e.weight});
  }
  coarse.graph = SparseGraph::from_weighted_edges(edges, nc);
  return coarse;
}

// Grows k-1 regions breadth-first by strongest connection; the remainder forms
// the last part.
std::vector<int> grow_regions(const SparseGraph& g, std::span<const long> vw, int k, long cap, Rng& rng) {
  const NodeId n = g.num_nodes();
  const long total = std::accumulate(vw.begin(), vw.end(), 0L);
  std::vector<int> labels(n, -1);
  long assigned_weight = 0;
  std::vector<double> gain(n, 0.0);
  for (int p = 0; p + 1 < k; ++p) {
    const long remaining_parts = k - p;
    const long target = (total - assigned_weight + remaining_parts - 1) / remaining_parts;
    long weight = 0;
    std::priority_queue<std::pair<double, NodeId>> frontier;
    std::fill(gain.begin(), gain.end(), 0.0);
    std::vector<NodeId> unassigned;
    auto pick_seed = [&]() -> NodeId {
      unassigned.clear();
      for (NodeId v = 0; v < n; ++v)
        if (labels[v] == -1 && gain[v] >= 0.0) unassigned.push_back(v);
      if (unassigned.empty()) return -1;
      return unassigned[rng.below(unassigned.size())];
    };
    while (weight < target) {
      NodeId v = -1;
      while (!frontier.empty()) {
        auto [gv, cand] = frontier.top();
        frontier.pop();
        if (labels[cand] == -1 && gv == gain[cand]) {
          v = cand;
          break;
        }
      }
      if (v == -1) v = pick_seed();
      if (v == -1) break;
      if (weight > 0 && weight + vw[v] > cap) {
        // Too heavy for this part; leave it for later parts.
        gain[v] = -1.0;
        bool any = false;
        for (NodeId u = 0; u < n && !any; ++u) any = labels[u] == -1 && gain[u] >= 0.0;
        if (!any) break;
        continue;
      }
      labels[v] = p;
      weight += vw[v];
      const auto nbrs = g.neighbors(v);
      const auto w = g.weights(v);
      for (std::size_t e = 0; e < nbrs.size(); ++e) {
        const NodeId u = nbrs[e];
        if (labels[u] != -1 || gain[u] < 0.0) continue;
        gain[u] += w[e];
        frontier.emplace(gain[u], u);
      }
    }
    assigned_weight += weight;
  }
  for (NodeId v = 0; v < n; ++v)
    if (labels[v] == -1) labels[v] = k - 1;
  return labels;
}

// Moves vertices out of overweight parts and into empty parts, choosing the
// move with the least cut increase each time. Best effort on coarse levels;
// always succeeds on unit weights when the cap is feasible.
void rebalance(const SparseGraph& g, std::span<const long> vw, std::vector<int>& labels, int k, long cap) {
  const NodeId n = g.num_nodes();
  auto pw = part_weights(vw, labels, k);
  auto pc = part_counts(labels, k);
  std::vector<double> conn(static_cast<std::size_t>(k), 0.0);
  std::vector<int> touched;
  for (long guard = 0; guard < 4L * n + 4; ++guard) {
    int empty = -1, heavy = -1;
    for (int p = 0; p < k; ++p) {
      if (pc[p] == 0 && empty == -1) empty = p;
      if (pw[p] > cap && (heavy == -1 || pw[p] > pw[heavy])) heavy = p;
    }
    if (empty == -1 && heavy == -1) return;
    NodeId best_v = -1;
    int best_to = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (NodeId v = 0; v < n; ++v) {
      const int from = labels[v];
      if (heavy != -1 ? from != heavy : pc[from] < 2) continue;
      if (empty != -1 && heavy == -1 && pc[from] < 2) continue;
      connections(g, labels, v, conn, touched);
      for (int to = 0; to < k; ++to) {
        if (to == from || pw[to] + vw[v] > cap) continue;
        if (empty != -1 && to != empty) continue;
        const double gain = conn[to] - conn[from];
        if (gain > best_gain) {
          best_gain = gain;
          best_v = v;
          best_to = to;
        }
      }
      for (int p : touched) conn[p] = 0.0;
      touched.clear();
    }
    if (best_v == -1) return;
    const int from = labels[best_v];
    pw[from] -= vw[best_v];
    --pc[from];
    pw[best_to] += vw[best_v];
    ++pc[best_to];
    labels[best_v] = best_to;
  }
}

}  // namespace

void refine_fm(const SparseGraph& g, std::span<const long> vw, std::vector<int>& labels, int k, long cap,
               int passes, std::uint64_t seed, RefinementStats* stats) {
  const NodeId n = g.num_nodes();
  if (static_cast<NodeId>(labels.size()) != n || static_cast<NodeId>(vw.size()) != n)
    throw Error("refine_fm: size mismatch");
  Rng rng(seed);
  std::vector<double> conn(static_cast<std::size_t>(k), 0.0);
  std::vector<int> touched;
  std::vector<char> locked(n, 0);
  const long max_stall = std::max<long>(50, n / 100);

  // Best admissible move for v: highest gain, then lightest target part.
  auto best_move = [&](NodeId v, const std::vector<long>& pw, const std::vector<long>& pc) {
    const int from = labels[v];
    connections(g, labels, v, conn, touched);
    int to = -1;
    double gain = 0.0;
    for (int p : touched) {
      if (p == from || pw[p] + vw[v] > cap || pc[from] < 2) continue;
      const double gp = conn[p] - conn[from];
      if (to == -1 || gp > gain || (gp == gain && pw[p] < pw[to])) {
        to = p;
        gain = gp;
      }
    }
    for (int p : touched) conn[p] = 0.0;
    touched.clear();
    return std::pair<int, double>{to, gain};
  };

  for (int pass = 0; pass < passes; ++pass) {
    auto pw = part_weights(vw, labels, k);
    auto pc = part_counts(labels, k);
    const double cut_start = edgecut(g, labels);
    std::fill(locked.begin(), locked.end(), 0);

    // Max-heap of (gain, random tiebreak, vertex); entries go stale and are
    // re-validated on pop.
    using Entry = std::tuple<double, std::uint64_t, NodeId>;
    std::priority_queue<Entry> heap;
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (NodeId v : order) {
      bool boundary = false;
      for (NodeId u : g.neighbors(v)) boundary = boundary || labels[u] != labels[v];
      if (!boundary) continue;
      auto [to, gain] = best_move(v, pw, pc);
      if (to != -1) heap.emplace(gain, rng.next(), v);
    }

    struct Move {
      NodeId v;
      int from;
    };
    std::vector<Move> moves;
    double cut = cut_start, best_cut = cut_start;
    std::size_t best_len = 0;
    long stall = 0;
    while (!heap.empty() && stall < max_stall) {
      const auto [key, tie, v] = heap.top();
      heap.pop();
      if (locked[v]) continue;
      auto [to, gain] = best_move(v, pw, pc);
      if (to == -1) continue;
      if (gain != key) {
        heap.emplace(gain, tie, v);
        continue;
      }
      const int from = labels[v];
      labels[v] = to;
      pw[from] -= vw[v];
      --pc[from];
      pw[to] += vw[v];
      ++pc[to];
      locked[v] = 1;
      moves.push_back({v, from});
      cut -= gain;
      if (stats) {
        ++stats->moves_accepted;
        if (pw[to] > cap) ++stats->balance_violations;
      }
      if (cut < best_cut - 1e-12) {
        best_cut = cut;
        best_len = moves.size();
        stall = 0;
      } else {
        ++stall;
      }
      for (NodeId u : g.neighbors(v)) {
        if (locked[u]) continue;
        auto [uto, ugain] = best_move(u, pw, pc);
        if (uto != -1) heap.emplace(ugain, rng.next(), u);
      }
    }
    for (std::size_t m = moves.size(); m > best_len; --m) labels[moves[m - 1].v] = moves[m - 1].from;

    const double cut_end = edgecut(g, labels);
    if (cut_end > cut_start + 1e-9) throw Error("refine_fm: pass increased the edgecut");
    if (stats) {
      ++stats->passes;
      stats->cut_before.push_back(cut_start);
      stats->cut_after.push_back(cut_end);
    }
    if (!(cut_end < cut_start - 1e-12)) break;
  }
}

std::vector<int> multilevel_partition(const SparseGraph& g, const PartitionConfig& cfg, PartitionStats* stats) {
  const NodeId n = g.num_nodes();
  const int k = cfg.k;
  const long cap = max_part_weight(n, k, cfg.epsilon);
  if (k == 1) {
    if (stats) stats->level_sizes = {n};
    return std::vector<int>(n, 0);
  }
  Rng rng(cfg.seed);

  std::vector<Level> levels;
  levels.push_back({g, std::vector<long>(n, 1), {}});
  const NodeId stop_at = std::max<NodeId>(30 * k, 200);
  const long max_vweight = std::max<long>(1, cap / 4);
  while (levels.back().graph.num_nodes() > stop_at) {
    std::vector<NodeId> to_coarse;
    Level next = coarsen(levels.back(), max_vweight, rng, to_coarse);
    const NodeId before = levels.back().graph.num_nodes();
    if (next.graph.num_nodes() > before - before / 20) break;  // matching stalled
    levels.back().to_coarse = std::move(to_coarse);
    levels.push_back(std::move(next));
  }
  if (stats) {
    stats->level_sizes.clear();
    for (const auto& l : levels) stats->level_sizes.push_back(l.graph.num_nodes());
  }

  // Initial partition: a few region-growing attempts, keep the best refined one.
  const Level& coarsest = levels.back();
  std::vector<int> labels;
  double best_cut = std::numeric_limits<double>::infinity();
  bool best_balanced = false;
  for (int attempt = 0; attempt < 4; ++attempt) {
    auto cand = grow_regions(coarsest.graph, coarsest.vweight, k, cap, rng);
    rebalance(coarsest.graph, coarsest.vweight, cand, k, cap);
    const double initial = edgecut(coarsest.graph, cand);
    refine_fm(coarsest.graph, coarsest.vweight, cand, k, cap, cfg.refinement_passes, rng.next());
    const auto pw = part_weights(coarsest.vweight, cand, k);
    const bool balanced = *std::max_element(pw.begin(), pw.end()) <= cap;
    const double cut = edgecut(coarsest.graph, cand);
    if ((balanced && !best_balanced) || (balanced == best_balanced && cut < best_cut)) {
      best_cut = cut;
      best_balanced = balanced;
      labels = std::move(cand);
      if (stats) stats->initial_cut = initial;
    }
  }

  for (std::size_t l = levels.size() - 1; l-- > 0;) {
    const Level& fine = levels[l];
    std::vector<int> projected(fine.graph.num_nodes());
    for (NodeId v = 0; v < fine.graph.num_nodes(); ++v) projected[v] = labels[fine.to_coarse[v]];
    labels = std::move(projected);
    rebalance(fine.graph, fine.vweight, labels, k, cap);
    refine_fm(fine.graph, fine.vweight, labels, k, cap, cfg.refinement_passes, rng.next(),
              l == 0 && stats ? &stats->refinement : nullptr);
  }
  if (levels.size() == 1) {
    // No coarsening happened; the loop above did not run on the finest level.
    rebalance(g, levels[0].vweight, labels, k, cap);
    refine_fm(g, levels[0].vweight, labels, k, cap, cfg.refinement_passes, rng.next(),
              stats ? &stats->refinement : nullptr);
  }

  const auto pc = part_counts(labels, k);
  if (*std::max_element(pc.begin(), pc.end()) > cap || *std::min_element(pc.begin(), pc.end()) == 0)
    throw Error("partition: failed to reach a balanced partition with nonempty parts");
  return labels;
}

SslTask graph_partition(const SparseGraph& g, const PartitionConfig& cfg) {
  SslTask t;
  t.kind = TaskKind::Partitioning;
  t.labels = multilevel_partition(g, cfg);
  t.nodes.resize(static_cast<std::size_t>(g.num_nodes()));
  std::iota(t.nodes.begin(), t.nodes.end(), 0);
  t.loss_kind = LossKind::CrossEntropy;
  t.output_dim = cfg.k;
  return t;
}

}  // namespace ssgcn
