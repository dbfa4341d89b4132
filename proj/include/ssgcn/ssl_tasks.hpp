#pragma once

#include "ssgcn/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssgcn {

enum class TaskKind { Clustering, Partitioning, Completion };
enum class LossKind { CrossEntropy, MeanSquaredError };

std::string to_string(TaskKind k);

// A pseudo-labeled auxiliary task. For clustering and partitioning the input is
// the unmodified (X, Â) and `labels` covers every node; for completion the
// input features have the rows of `nodes` zeroed and `targets` holds the
// original rows (row k belongs to nodes[k]).
struct SslTask {
  TaskKind kind = TaskKind::Clustering;
  std::optional<Eigen::MatrixXd> features;  // X_ss when it differs from X
  bool use_graph = true;                    // Â_ss = Â
  std::vector<int> labels;
  Eigen::MatrixXd targets;
  std::vector<NodeId> nodes;
  LossKind loss_kind = LossKind::CrossEntropy;
  int output_dim = 0;
};

// ---- node clustering -------------------------------------------------------

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  // Objective after each assignment step.
  std::vector<double> objective_history;
  int iterations = 0;
  int reseeds = 0;
};

// k-means++ seeding on the rows of x.
Eigen::MatrixXd kmeans_pp_init(const Eigen::MatrixXd& x, int k, std::uint64_t seed);

// Lloyd iterations from the given centers. Empty clusters are re-seeded with the
// point farthest from its current center.
KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, int max_iters);

KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iters = 100);

// Sum of squared distances of rows to their assigned centers.
double kmeans_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, std::span<const int> labels);

SslTask node_clustering(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iters = 100);

// ---- graph partitioning ----------------------------------------------------

struct PartitionConfig {
  int k = 2;
  double epsilon = 0.05;
  int refinement_passes = 8;
  std::uint64_t seed = 0;
};

struct RefinementStats {
  int passes = 0;
  long moves_accepted = 0;
  long balance_violations = 0;  // accepted moves that broke the cap; must stay 0
  std::vector<double> cut_before;  // per pass
  std::vector<double> cut_after;
};

struct PartitionStats {
  std::vector<NodeId> level_sizes;  // finest first
  double initial_cut = 0.0;         // coarsest level, before refinement
  RefinementStats refinement;
};

// Total weight of edges whose endpoints carry different labels.
double edgecut(const SparseGraph& g, std::span<const int> labels);

// K * max_k |V_k| / |V| (node counts).
double balance_factor(std::span<const int> labels, int k);

// Largest part size allowed by K * max|V_k| / |V| <= 1 + epsilon. Throws Error
// when no partition into k nonempty parts can satisfy it.
long max_part_weight(long total_weight, int k, double epsilon);

// k-way boundary Fiduccia-Mattheyses refinement. Moves never push a part above
// `cap` nor empty a part; each pass keeps the best prefix so the cut never
// increases.
void refine_fm(const SparseGraph& g, std::span<const long> vertex_weights, std::vector<int>& labels, int k,
               long cap, int passes, std::uint64_t seed, RefinementStats* stats = nullptr);

// Heavy-edge-matching coarsening, greedy region growing on the coarsest graph,
// then projection with rebalancing and FM refinement at every level.
std::vector<int> multilevel_partition(const SparseGraph& g, const PartitionConfig& cfg,
                                      PartitionStats* stats = nullptr);

SslTask graph_partition(const SparseGraph& g, const PartitionConfig& cfg);

// ---- graph completion ------------------------------------------------------

SslTask graph_completion(const Eigen::MatrixXd& x, double mask_fraction, std::uint64_t seed);

// Puts the completion targets back into the masked features.
Eigen::MatrixXd restore_masked(const SslTask& task);

// Writes classification pseudo-labels in labels.u16 layout.
void export_pseudo_labels(const SslTask& task, const std::filesystem::path& file);

// ---- construction from a description ----------------------------------------

struct SslSpec {
  TaskKind kind = TaskKind::Clustering;
  int k = 0;                   // clusters or parts
  double epsilon = 0.05;       // partition balance
  double mask_fraction = 0.1;  // completion
  std::uint64_t seed = 0;
};

TaskKind parse_task_kind(const std::string& s);

SslTask make_task(const SslSpec& spec, const Eigen::MatrixXd& x, const SparseGraph& g);

}  // namespace ssgcn
