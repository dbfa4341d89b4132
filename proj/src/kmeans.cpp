#include "ssgcn/rng.hpp"
#include "ssgcn/ssl_tasks.hpp"

#include <limits>

namespace ssgcn {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Clustering: return "clu";
    case TaskKind::Partitioning: return "par";
    case TaskKind::Completion: return "comp";
  }
  return "?";
}

TaskKind parse_task_kind(const std::string& s) {
  if (s == "clu") return TaskKind::Clustering;
  if (s == "par") return TaskKind::Partitioning;
  if (s == "comp") return TaskKind::Completion;
  throw Error("unknown task '" + s + "' (expected clu, par or comp)");
}

SslTask make_task(const SslSpec& spec, const Eigen::MatrixXd& x, const SparseGraph& g) {
  switch (spec.kind) {
    case TaskKind::Clustering: return node_clustering(x, spec.k, spec.seed);
    case TaskKind::Partitioning: return graph_partition(g, {spec.k, spec.epsilon, 8, spec.seed});
    case TaskKind::Completion: return graph_completion(x, spec.mask_fraction, spec.seed);
  }
  throw Error("make_task: bad kind");
}

Eigen::MatrixXd kmeans_pp_init(const Eigen::MatrixXd& x, int k, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  if (k < 1) throw Error("kmeans: k must be >= 1");
  if (k > n) throw Error("kmeans: k = " + std::to_string(k) + " exceeds point count " + std::to_string(n));
  Rng rng(seed);
  Eigen::MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2(i);
        if (r < 0.0 && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

double kmeans_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, std::span<const int> labels) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) obj += (x.row(i) - centers.row(labels[i])).squaredNorm();
  return obj;
}

KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, int max_iters) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  if (centers.cols() != x.cols()) throw Error("kmeans: center dimension mismatch");
  const SparseFeatures xs = to_sparse(x);
  const Eigen::VectorXd x_sq = x.rowwise().squaredNorm();

  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), -1);
  Eigen::VectorXd dist(n);
  for (int it = 0; it < max_iters; ++it) {
    // Assignment: |x|^2 - 2 x.c + |c|^2, ties to the lowest index.
    const Eigen::MatrixXd cross = xs * centers.transpose();
    const Eigen::VectorXd c_sq = centers.rowwise().squaredNorm();
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = x_sq(i) - 2.0 * cross(i, c) + c_sq(c);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      dist(i) = std::max(best_d, 0.0);
      if (r.labels[i] != best) {
        r.labels[i] = best;
        changed = true;
      }
    }
    r.objective_history.push_back(kmeans_objective(x, centers, r.labels));
    r.iterations = it + 1;
    if (!changed && it > 0) break;

    // Update, re-seeding empty clusters with the farthest point.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) ++counts[r.labels[i]];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (counts[r.labels[i]] > 1 && dist(i) > far_d) {
          far_d = dist(i);
          far = i;
        }
      --counts[r.labels[far]];
      r.labels[far] = static_cast<int>(c);
      counts[c] = 1;
      dist(far) = 0.0;
      ++r.reseeds;
    }
    for (Eigen::Index i = 0; i < xs.outerSize(); ++i)
      for (SparseFeatures::InnerIterator e(xs, i); e; ++e) sums(r.labels[i], e.col()) += e.value();
    for (Eigen::Index c = 0; c < k; ++c) centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
  }
  r.centers = std::move(centers);
  return r;
}

KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iters) {
  return lloyd(x, kmeans_pp_init(x, k, seed), max_iters);
}

SslTask node_clustering(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iters) {
  auto km = kmeans(x, k, seed, max_iters);
  SslTask t;
  t.kind = TaskKind::Clustering;
  t.labels = std::move(km.labels);
  t.nodes.resize(static_cast<std::size_t>(x.rows()));
  for (NodeId v = 0; v < static_cast<NodeId>(x.rows()); ++v) t.nodes[v] = v;
  t.loss_kind = LossKind::CrossEntropy;
  t.output_dim = k;
  return t;
}

}  // namespace ssgcn
