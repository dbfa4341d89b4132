#include "ssgcn/rng.hpp"
#include "ssgcn/ssl_tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssgcn {

SslTask graph_completion(const Eigen::MatrixXd& x, double mask_fraction, std::uint64_t seed) {
  if (!(mask_fraction > 0.0 && mask_fraction <= 1.0))
    throw Error("graph_completion: mask_fraction must lie in (0, 1]");
  const auto n = static_cast<NodeId>(x.rows());
  if (n == 0) throw Error("graph_completion: empty graph");
  const auto count = std::min<NodeId>(n, static_cast<NodeId>(std::ceil(mask_fraction * n - 1e-9)));

  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  perm.resize(static_cast<std::size_t>(count));
  std::sort(perm.begin(), perm.end());

  SslTask t;
  t.kind = TaskKind::Completion;
  t.nodes = std::move(perm);
  t.targets.resize(count, x.cols());
  Eigen::MatrixXd masked = x;
  for (NodeId k = 0; k < count; ++k) {
    t.targets.row(k) = x.row(t.nodes[k]);
    masked.row(t.nodes[k]).setZero();
  }
  t.features = std::move(masked);
  t.loss_kind = LossKind::MeanSquaredError;
  t.output_dim = static_cast<int>(x.cols());
  return t;
}

Eigen::MatrixXd restore_masked(const SslTask& task) {
  if (task.kind != TaskKind::Completion || !task.features) throw Error("restore_masked: not a completion task");
  Eigen::MatrixXd x = *task.features;
  for (std::size_t k = 0; k < task.nodes.size(); ++k)
    x.row(task.nodes[k]) = task.targets.row(static_cast<Eigen::Index>(k));
  return x;
}

void export_pseudo_labels(const SslTask& task, const std::filesystem::path& file) {
  if (task.loss_kind != LossKind::CrossEntropy) throw Error("export_pseudo_labels: task has no class labels");
  write_labels_u16(file, task.labels);
}

}  // namespace ssgcn
