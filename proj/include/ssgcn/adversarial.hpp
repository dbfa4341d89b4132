#pragma once

#include "ssgcn/training.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ssgcn {

enum class AttackMode { Links, Features, LinksAndFeatures };

std::string to_string(AttackMode m);
AttackMode parse_attack_mode(const std::string& s);

struct AttackConfig {
  AttackMode mode = AttackMode::LinksAndFeatures;
  int n_perturb = 2;
  // Restrict candidate partners / feature columns; empty means all.
  std::vector<NodeId> edge_candidates;
  std::vector<int> feature_candidates;
  // Linearized surrogate fit.
  int surrogate_epochs = 100;
  double surrogate_lr = 0.01;
  // Adversarial training.
  int attack_set_size = -1;  // -1: min(500, 10% of unlabeled nodes)
  int regen_period = 20;

  void validate() const;
  bool links() const { return mode != AttackMode::Features; }
  bool features() const { return mode != AttackMode::Links; }
};

struct Perturbation {
  NodeId target = 0;
  std::vector<Edge> edge_flips;                     // (target, j)
  std::vector<std::pair<NodeId, int>> feature_flips;  // (target, feature)
  // Surrogate margin before any flip, then after each accepted flip.
  std::vector<double> margins;

  std::size_t size() const { return edge_flips.size() + feature_flips.size(); }
  bool operator==(const Perturbation&) const = default;
};

void to_json(nlohmann::json& j, const Perturbation& p);
void from_json(const nlohmann::json& j, Perturbation& p);

struct PseudoLabels {
  std::vector<int> labels;
  std::vector<char> from_truth;
  GcnParams<double> model;
};

PseudoLabels fit_pseudo_labels(const Dataset& ds, const TrainConfig& cfg);

struct AttackSets {
  std::vector<NodeId> clean;
  std::vector<NodeId> attack;
};

AttackSets sample_attack_sets(std::span<const NodeId> unlabeled, std::size_t n_clean, std::size_t n_attack,
                              std::uint64_t seed);

// Linear surrogate Z = Â² X̂ W fitted by cross-entropy to the model's own
// predictions, warm-started from W0 · Θ.
Eigen::MatrixXd fit_surrogate(const GcnParams<double>& params, const GraphInput& clean, const AttackConfig& atk);

// Everything the greedy attacker needs about the clean graph. Edges are
// treated as unit weight.
struct AttackContext {
  const SparseGraph* graph = nullptr;
  const Eigen::MatrixXd* raw_features = nullptr;
  bool normalize_features = true;
  Eigen::MatrixXd w;       // surrogate weights, N x C
  Eigen::MatrixXd u;       // X̂ W
  Eigen::VectorXd degree;  // d̃
  Eigen::MatrixXd g;       // rows u_k / sqrt(d̃_k)
  Eigen::MatrixXd s;       // (A + I) g
};

AttackContext make_attack_context(const SparseGraph& graph, const Eigen::MatrixXd& raw_features,
                                  bool normalize_features, Eigen::MatrixXd surrogate);

// Surrogate logits of one node, evaluated from the context's cached state.
Eigen::RowVectorXd surrogate_logits(const AttackContext& ctx, NodeId v);

double margin(const Eigen::RowVectorXd& z, int label);

// Greedy direct attack on `target`: each round applies the flip that lowers the
// surrogate margin of `label` the most, stopping early when nothing lowers it.
Perturbation nettack_lite(const AttackContext& ctx, NodeId target, int label, const AttackConfig& atk);

struct PerturbedGraph {
  Eigen::MatrixXd features;  // raw X'
  SparseGraph graph;         // A'
};

// Applies flips to copies of X and A. Targets must be distinct and every flip
// must touch its target; repeated flips of one entry are an error.
PerturbedGraph apply_perturbations(const SparseGraph& g, const Eigen::MatrixXd& x,
                                   std::span<const Perturbation> perturbations);

// Drops flips that repeat an edge already flipped by an earlier perturbation.
// Returns the number removed.
std::size_t drop_conflicting_flips(std::vector<Perturbation>& perturbations);

// Target-head logits of one node, touching only its two-hop neighbourhood.
// `target_row` replaces row v of X̂ when given.
Eigen::RowVectorXd node_logits(const GcnParams<double>& params, const SparseGraph& g, const SparseFeatures& xhat,
                               NodeId v, const Eigen::RowVectorXd* target_row = nullptr);

// ---- adversarial training ---------------------------------------------------

TrainedModel adversarial_train(const Dataset& ds, const TrainConfig& cfg, const AttackConfig& atk);

TrainedModel adversarial_train_ss(const Dataset& ds, const SslSpec& task, const TrainConfig& cfg,
                                  const AttackConfig& atk);

// ---- evaluation --------------------------------------------------------------

struct AttackEvaluation {
  double accuracy = 0.0;
  std::vector<Perturbation> perturbations;
};

// Attacks each target on its own against a surrogate of the frozen model,
// using the targets' true labels.
std::vector<Perturbation> generate_perturbations(const GcnParams<double>& params, const Dataset& ds,
                                                 const TrainConfig& cfg, const AttackConfig& atk,
                                                 std::span<const NodeId> targets);

// Classifies every perturbation's target on its own perturbed graph.
double evaluate_perturbed(const GcnParams<double>& params, const Dataset& ds, const TrainConfig& cfg,
                          std::span<const Perturbation> perturbations);

// Evasion: each target is attacked on its own against a surrogate of the frozen
// model, then classified on its perturbed graph. Targets are scored against
// their true labels.
AttackEvaluation evaluate_under_attack(const GcnParams<double>& params, const Dataset& ds, const TrainConfig& cfg,
                                       const AttackConfig& atk, std::span<const NodeId> targets);

}  // namespace ssgcn
