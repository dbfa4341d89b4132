#pragma once

#include "ssgcn/adam.hpp"
#include "ssgcn/dataset.hpp"
#include "ssgcn/gcn.hpp"
#include "ssgcn/ssl_tasks.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ssgcn {

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int epochs = 400;
  int patience = 50;
  int hidden_dim = 64;
  double dropout = 0.5;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
  int pretrain_epochs = 200;
  bool normalize_features = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RunResult {
  double test_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;  // 0 means the initial parameters
  int epochs_run = 0;
  std::map<std::string, std::vector<double>> loss_curves;
};

struct TrainedModel {
  GcnParams<double> params;
  RunResult result;
};

// Model-ready features and propagation matrix for one (X, A) pair.
struct GraphInput {
  SparseFeatures x;
  NormalizedAdjacency<double> adj;
};

GraphInput prepare_input(const Eigen::MatrixXd& raw_features, const SparseGraph& g, bool normalize_features);

// One weighted loss term. Terms that share `stream` share one extractor forward
// pass and one dropout stream, so they must point at the same input.
struct Objective {
  std::string name;
  const GraphInput* input = nullptr;
  int stream = 0;
  Head head = Head::Target;
  LossKind loss = LossKind::CrossEntropy;
  std::span<const int> labels;              // indexed by node id
  const Eigen::MatrixXd* targets = nullptr;  // row k for nodes[k]
  std::span<const NodeId> nodes;
  double weight = 1.0;
};

// Called before every epoch (1-based); may replace the objective list.
using EpochHook = std::function<void(int epoch, const GcnParams<double>& params, std::vector<Objective>& objectives)>;

struct FitOptions {
  int epochs = 0;
  bool early_stopping = true;  // on validation accuracy of the target head
};

// Full-batch Adam over the summed objectives. Dropout is applied to streams that
// carry a target-head loss. With early stopping the best-validation parameters
// are returned, otherwise the final ones.
TrainedModel fit(const Dataset& ds, const GraphInput& clean, const TrainConfig& cfg, GcnParams<double> init,
                 std::vector<Objective> objectives, const FitOptions& opt, const EpochHook& hook = {});

std::vector<int> predict(const GcnParams<double>& params, const GraphInput& input);

double accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const NodeId> nodes);

double evaluate(const GcnParams<double>& params, const Dataset& ds, const GraphInput& input,
                std::span<const NodeId> nodes);

// ---- schemes ---------------------------------------------------------------

TrainedModel train_supervised(const Dataset& ds, const TrainConfig& cfg);

TrainedModel pretrain_finetune(const Dataset& ds, const SslTask& task, const TrainConfig& cfg);

struct SelfTrainLog {
  std::vector<std::size_t> labeled_sizes;  // before each training round
  std::vector<int> labels;                 // final labels incl. pseudo-labels (-1 where none)
};

// additions_per_class <= 0 picks ceil(|train| / C).
TrainedModel self_train(const Dataset& ds, const TrainConfig& cfg, int stages, int additions_per_class,
                        SelfTrainLog* log = nullptr);

TrainedModel train_multitask(const Dataset& ds, const SslTask& task, const TrainConfig& cfg);

// Inputs and objective for the self-supervised term. `ss_input` backs the
// completion task's masked features.
Objective ssl_objective(const SslTask& task, const GraphInput& clean, const GraphInput* ss_input, double weight);

}  // namespace ssgcn
