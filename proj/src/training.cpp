#include "ssgcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssgcn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("train: learning_rate must be positive");
  if (weight_decay < 0.0) throw Error("train: weight_decay must be >= 0");
  if (epochs < 0 || pretrain_epochs < 0 || patience < 1) throw Error("train: bad epoch counts");
  if (hidden_dim < 1) throw Error("train: hidden_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("train: dropout must lie in [0, 1)");
  if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0) throw Error("train: loss weights must be >= 0");
}

GraphInput prepare_input(const Eigen::MatrixXd& raw_features, const SparseGraph& g, bool normalize_features) {
  if (raw_features.rows() != g.num_nodes()) throw Error("prepare_input: feature rows do not match graph");
  GraphInput in;
  in.x = to_sparse(normalize_features ? row_normalize(raw_features) : raw_features);
  in.adj = normalize_adjacency(g);
  return in;
}

std::vector<int> predict(const GcnParams<double>& params, const GraphInput& input) {
  return argmax_rows(gcn_forward(input.x, input.adj, params, Head::Target).first);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw Error("accuracy: empty node set");
  long hit = 0;
  for (NodeId v : nodes) hit += predictions[v] == labels[v];
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

double evaluate(const GcnParams<double>& params, const Dataset& ds, const GraphInput& input,
                std::span<const NodeId> nodes) {
  return accuracy(predict(params, input), ds.labels, nodes);
}

namespace {

struct Score {
  double acc = 0.0;
  double loss = std::numeric_limits<double>::infinity();
};

Score validation_score(const GcnParams<double>& p, const Dataset& ds, const GraphInput& clean) {
  const Eigen::MatrixXd z = gcn_forward(clean.x, clean.adj, p, Head::Target).first;
  const auto& val = ds.splits.val;
  return {accuracy(argmax_rows(z), ds.labels, val), softmax_cross_entropy(z, ds.labels, val).loss};
}

Eigen::MatrixXd& head_grad(GcnParams<double>& g, Head h) { return h == Head::Target ? g.head : *g.head_ss; }

}  // namespace

TrainedModel fit(const Dataset& ds, const GraphInput& clean, const TrainConfig& cfg, GcnParams<double> init,
                 std::vector<Objective> objectives, const FitOptions& opt, const EpochHook& hook) {
  cfg.validate();
  if (opt.early_stopping && ds.splits.val.empty()) throw Error("fit: early stopping needs a validation split");

  TrainedModel out;
  GcnParams<double> params = std::move(init);
  AdamState<double> adam;
  std::map<int, Rng> dropout_rng;
  const auto rng_for = [&](int stream) -> Rng& {
    auto it = dropout_rng.find(stream);
    if (it == dropout_rng.end())
      it = dropout_rng.emplace(stream, Rng(derive_seed(cfg.seed, "dropout" + std::to_string(stream)))).first;
    return it->second;
  };

  Score best;
  if (opt.early_stopping) best = validation_score(params, ds, clean);
  GcnParams<double> best_params = params;
  auto& res = out.result;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    if (hook) hook(epoch, params, objectives);
    if (objectives.empty()) throw Error("fit: no objectives");

    GcnParams<double> grads;
    grads.w0 = Eigen::MatrixXd::Zero(params.w0.rows(), params.w0.cols());
    grads.head = Eigen::MatrixXd::Zero(params.head.rows(), params.head.cols());
    if (params.head_ss) grads.head_ss = Eigen::MatrixXd::Zero(params.head_ss->rows(), params.head_ss->cols());

    std::vector<int> streams;
    for (const auto& o : objectives)
      if (std::find(streams.begin(), streams.end(), o.stream) == streams.end()) streams.push_back(o.stream);

    std::map<std::string, double> epoch_loss;
    for (int s : streams) {
      const GraphInput* input = nullptr;
      bool target = false;
      for (const auto& o : objectives) {
        if (o.stream != s) continue;
        if (input && input != o.input) throw Error("fit: objectives on one stream must share their input");
        input = o.input;
        target |= o.head == Head::Target;
      }
      const DropoutSpec drop{target ? cfg.dropout : 0.0, &rng_for(s)};
      const auto cache = extract(input->x, input->adj, params.w0, drop);
      Eigen::MatrixXd d_prop = Eigen::MatrixXd::Zero(cache.propagated.rows(), cache.propagated.cols());
      for (const auto& o : objectives) {
        if (o.stream != s) continue;
        const Eigen::MatrixXd z = logits(cache, params, o.head);
        const auto r = o.loss == LossKind::CrossEntropy ? softmax_cross_entropy(z, o.labels, o.nodes)
                                                         : mse_loss(z, *o.targets, o.nodes);
        epoch_loss[o.name] += r.loss;
        const Eigen::MatrixXd dz = o.weight * r.grad;
        head_grad(grads, o.head).noalias() += cache.propagated.transpose() * dz;
        d_prop.noalias() += dz * params.head_for(o.head).transpose();
      }
      grads.w0 += extractor_backward(cache, d_prop);
    }
    for (const auto& [name, l] : epoch_loss) res.loss_curves[name].push_back(l);

    adam_step(params, grads, adam, cfg.learning_rate, cfg.weight_decay);
    res.epochs_run = epoch;

    if (!opt.early_stopping) continue;
    const Score sc = validation_score(params, ds, clean);
    res.loss_curves["val_acc"].push_back(sc.acc);
    if (sc.acc > best.acc || (sc.acc == best.acc && sc.loss < best.loss)) {
      best = sc;
      best_params = params;
      res.best_epoch = epoch;
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }

  out.params = opt.early_stopping ? std::move(best_params) : std::move(params);
  if (opt.early_stopping) {
    res.best_val_accuracy = best.acc;
  } else {
    res.best_epoch = res.epochs_run;
    if (!ds.splits.val.empty()) res.best_val_accuracy = evaluate(out.params, ds, clean, ds.splits.val);
  }
  if (!ds.splits.test.empty()) res.test_accuracy = evaluate(out.params, ds, clean, ds.splits.test);
  return out;
}

namespace {

Objective supervised_objective(const GraphInput& clean, std::span<const int> labels, std::span<const NodeId> nodes,
                               double weight) {
  Objective o;
  o.name = "sup";
  o.input = &clean;
  o.stream = 0;
  o.labels = labels;
  o.nodes = nodes;
  o.weight = weight;
  return o;
}

void require_train(const Dataset& ds) {
  if (ds.splits.train.empty()) throw Error("train: empty train split");
}

GcnParams<double> fresh_params(const Dataset& ds, const TrainConfig& cfg, std::optional<int> ssl_dim = {}) {
  return init_params(ds.feature_dim(), cfg.hidden_dim, ds.num_classes, ssl_dim, cfg.seed);
}

}  // namespace

Objective ssl_objective(const SslTask& task, const GraphInput& clean, const GraphInput* ss_input, double weight) {
  Objective o;
  o.name = "ss";
  o.head = Head::SelfSupervised;
  o.nodes = task.nodes;
  o.weight = weight;
  o.loss = task.loss_kind;
  if (task.loss_kind == LossKind::CrossEntropy) {
    o.labels = task.labels;
  } else {
    o.targets = &task.targets;
  }
  if (task.features) {
    if (!ss_input) throw Error("ssl_objective: task needs its own input");
    o.input = ss_input;
    o.stream = 2;
  } else {
    o.input = &clean;
    o.stream = 0;
  }
  return o;
}

TrainedModel train_supervised(const Dataset& ds, const TrainConfig& cfg) {
  require_train(ds);
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  return fit(ds, clean, cfg, fresh_params(ds, cfg), {supervised_objective(clean, ds.labels, ds.splits.train, 1.0)},
             {cfg.epochs, true});
}

TrainedModel pretrain_finetune(const Dataset& ds, const SslTask& task, const TrainConfig& cfg) {
  require_train(ds);
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  std::optional<GraphInput> ss_input;
  if (task.features) ss_input = prepare_input(*task.features, ds.graph, cfg.normalize_features);

  auto pre = fit(ds, clean, cfg, fresh_params(ds, cfg, task.output_dim),
                 {ssl_objective(task, clean, ss_input ? &*ss_input : nullptr, 1.0)}, {cfg.pretrain_epochs, false});

  // Only the extractor carries over; the target head starts fresh.
  GcnParams<double> init = fresh_params(ds, cfg);
  init.w0 = std::move(pre.params.w0);
  auto out =
      fit(ds, clean, cfg, std::move(init), {supervised_objective(clean, ds.labels, ds.splits.train, 1.0)},
          {cfg.epochs, true});
  out.result.loss_curves["pretrain_ss"] = std::move(pre.result.loss_curves["ss"]);
  return out;
}

TrainedModel self_train(const Dataset& ds, const TrainConfig& cfg, int stages, int additions_per_class,
                        SelfTrainLog* log) {
  require_train(ds);
  if (stages < 0) throw Error("self_train: stages must be >= 0");
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  const NodeId n = ds.num_nodes();
  const int c = ds.num_classes;
  const int per_class =
      additions_per_class > 0 ? additions_per_class
                              : static_cast<int>((ds.splits.train.size() + static_cast<std::size_t>(c) - 1) / c);

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<NodeId> labeled = ds.splits.train;
  for (NodeId v : labeled) labels[v] = ds.labels[v];
  // Validation nodes stay out of the pool so early stopping remains honest.
  std::vector<char> excluded(static_cast<std::size_t>(n), 0);
  for (NodeId v : ds.splits.val) excluded[v] = 1;

  TrainedModel model;
  for (int stage = 0;; ++stage) {
    if (log) log->labeled_sizes.push_back(labeled.size());
    model = fit(ds, clean, cfg, fresh_params(ds, cfg), {supervised_objective(clean, labels, labeled, 1.0)},
                {cfg.epochs, true});
    if (stage == stages) break;

    const Eigen::MatrixXd z = gcn_forward(clean.x, clean.adj, model.params, Head::Target).first;
    std::vector<std::vector<std::pair<double, NodeId>>> ranked(static_cast<std::size_t>(c));
    for (NodeId v = 0; v < n; ++v) {
      if (labels[v] >= 0 || excluded[v]) continue;
      const Eigen::RowVectorXd p = (z.row(v).array() - z.row(v).maxCoeff()).exp().matrix();
      Eigen::Index top = 0;
      p.maxCoeff(&top);
      double second = 0.0;
      for (Eigen::Index k = 0; k < p.size(); ++k)
        if (k != top) second = std::max(second, p(k));
      ranked[top].emplace_back(-(p(top) - second) / p.sum(), v);
    }
    for (int k = 0; k < c; ++k) {
      auto& r = ranked[k];
      std::sort(r.begin(), r.end());
      for (std::size_t i = 0; i < r.size() && i < static_cast<std::size_t>(per_class); ++i) {
        labels[r[i].second] = k;
        labeled.push_back(r[i].second);
      }
    }
  }
  if (log) log->labels = std::move(labels);
  return model;
}

TrainedModel train_multitask(const Dataset& ds, const SslTask& task, const TrainConfig& cfg) {
  require_train(ds);
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  std::optional<GraphInput> ss_input;
  if (task.features) ss_input = prepare_input(*task.features, ds.graph, cfg.normalize_features);
  std::vector<Objective> obj{supervised_objective(clean, ds.labels, ds.splits.train, cfg.alpha1),
                             ssl_objective(task, clean, ss_input ? &*ss_input : nullptr, cfg.alpha2)};
  return fit(ds, clean, cfg, fresh_params(ds, cfg, task.output_dim), std::move(obj), {cfg.epochs, true});
}

}  // namespace ssgcn
