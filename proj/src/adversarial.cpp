#include "ssgcn/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace ssgcn {

std::string to_string(AttackMode m) {
  switch (m) {
    case AttackMode::Links: return "links";
    case AttackMode::Features: return "feats";
    case AttackMode::LinksAndFeatures: return "links_and_feats";
  }
  return "?";
}

AttackMode parse_attack_mode(const std::string& s) {
  if (s == "links") return AttackMode::Links;
  if (s == "feats") return AttackMode::Features;
  if (s == "links_and_feats") return AttackMode::LinksAndFeatures;
  throw Error("unknown attack mode '" + s + "' (expected links, feats or links_and_feats)");
}

void AttackConfig::validate() const {
  if (n_perturb < 0) throw Error("attack: n_perturb must be >= 0");
  if (surrogate_epochs < 0 || !(surrogate_lr > 0.0)) throw Error("attack: bad surrogate settings");
  if (regen_period < 1) throw Error("attack: regen_period must be >= 1");
}

void to_json(nlohmann::json& j, const Perturbation& p) {
  j = nlohmann::json{{"target", p.target}, {"edges", nlohmann::json::array()}, {"features", nlohmann::json::array()},
                     {"margins", p.margins}};
  for (auto [a, b] : p.edge_flips) j["edges"].push_back({a, b});
  for (auto [t, f] : p.feature_flips) j["features"].push_back({t, f});
}

void from_json(const nlohmann::json& j, Perturbation& p) {
  p = Perturbation{};
  p.target = j.at("target").get<NodeId>();
  for (const auto& e : j.at("edges")) p.edge_flips.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  for (const auto& e : j.at("features")) p.feature_flips.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<int>());
  if (j.contains("margins")) p.margins = j.at("margins").get<std::vector<double>>();
}

PseudoLabels fit_pseudo_labels(const Dataset& ds, const TrainConfig& cfg) {
  PseudoLabels pl;
  pl.model = train_supervised(ds, cfg).params;
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  pl.labels = predict(pl.model, clean);
  pl.from_truth.assign(pl.labels.size(), 0);
  for (NodeId v : ds.splits.train) {
    pl.labels[v] = ds.labels[v];
    pl.from_truth[v] = 1;
  }
  return pl;
}

AttackSets sample_attack_sets(std::span<const NodeId> unlabeled, std::size_t n_clean, std::size_t n_attack,
                              std::uint64_t seed) {
  if (n_clean + n_attack > unlabeled.size()) throw Error("sample_attack_sets: pool too small");
  std::vector<NodeId> pool(unlabeled.begin(), unlabeled.end());
  Rng rng(seed);
  rng.shuffle(pool);
  AttackSets s;
  s.attack.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_attack));
  s.clean.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_attack),
                 pool.begin() + static_cast<std::ptrdiff_t>(n_attack + n_clean));
  std::sort(s.attack.begin(), s.attack.end());
  std::sort(s.clean.begin(), s.clean.end());
  return s;
}

Eigen::MatrixXd fit_surrogate(const GcnParams<double>& params, const GraphInput& clean, const AttackConfig& atk) {
  Eigen::MatrixXd w = params.w0 * params.head;
  const std::vector<int> labels = predict(params, clean);
  std::vector<NodeId> nodes(labels.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = static_cast<NodeId>(i);
  AdamMoments<double> mom;
  for (int e = 1; e <= atk.surrogate_epochs; ++e) {
    const Eigen::MatrixXd xw = clean.x * w;
    const Eigen::MatrixXd z = clean.adj * Eigen::MatrixXd(clean.adj * xw);
    const auto r = softmax_cross_entropy(z, labels, nodes);
    const Eigen::MatrixXd back = clean.adj.transpose() * Eigen::MatrixXd(clean.adj.transpose() * r.grad);
    const Eigen::MatrixXd grad = clean.x.transpose() * back;
    adam_update(w, grad, mom, e, atk.surrogate_lr, 0.0, AdamConfig{});
  }
  return w;
}

AttackContext make_attack_context(const SparseGraph& graph, const Eigen::MatrixXd& raw_features,
                                  bool normalize_features, Eigen::MatrixXd surrogate) {
  if (raw_features.rows() != graph.num_nodes() || surrogate.rows() != raw_features.cols())
    throw Error("make_attack_context: shape mismatch");
  AttackContext c;
  c.graph = &graph;
  c.raw_features = &raw_features;
  c.normalize_features = normalize_features;
  c.w = std::move(surrogate);
  const SparseFeatures xhat = to_sparse(normalize_features ? row_normalize(raw_features) : raw_features);
  c.u = xhat * c.w;
  const NodeId n = graph.num_nodes();
  c.degree.resize(n);
  for (NodeId v = 0; v < n; ++v) c.degree(v) = graph.degree(v) + 1.0;
  c.g = c.degree.cwiseSqrt().cwiseInverse().asDiagonal() * c.u;
  c.s = c.g;
  for (NodeId v = 0; v < n; ++v)
    for (NodeId k : graph.neighbors(v)) c.s.row(v) += c.g.row(k);
  return c;
}

Eigen::RowVectorXd surrogate_logits(const AttackContext& ctx, NodeId v) {
  Eigen::RowVectorXd acc = ctx.s.row(v) / ctx.degree(v);
  for (NodeId m : ctx.graph->neighbors(v)) acc += ctx.s.row(m) / ctx.degree(m);
  return acc / std::sqrt(ctx.degree(v));
}

double margin(const Eigen::RowVectorXd& z, int label) {
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < z.size(); ++c)
    if (c != label) other = std::max(other, z(c));
  return z(label) - other;
}

namespace {

// Greedy state for one target. The graph is the clean one plus flips on edges
// (t, j); only t's edges ever change, so neighbourhoods of other nodes differ
// from the base graph by at most t itself.
class TargetAttack {
 public:
  TargetAttack(const AttackContext& ctx, NodeId t, int label)
      : ctx_(ctx), g_base_(*ctx.graph), t_(t), y_(label), d_(ctx.degree), g_(ctx.g), s_(ctx.s) {
    const NodeId n = g_base_.num_nodes();
    if (t < 0 || t >= n) throw Error("nettack_lite: target out of range");
    if (label < 0 || label >= ctx.w.cols()) throw Error("nettack_lite: label out of range");
    in_nt_.assign(static_cast<std::size_t>(n), 0);
    base_nt_.assign(static_cast<std::size_t>(n), 0);
    edge_flipped_.assign(static_cast<std::size_t>(n), 0);
    feat_flipped_.assign(static_cast<std::size_t>(ctx.w.rows()), 0);
    for (NodeId m : g_base_.neighbors(t)) {
      nt_.push_back(m);
      in_nt_[m] = base_nt_[m] = 1;
    }
    x_t_ = ctx.raw_features->row(t);
    r_t_ = x_t_ * ctx.w;
    row_sum_ = x_t_.sum();
    u_t_ = ctx.u.row(t);
  }

  Perturbation run(const AttackConfig& atk) {
    Perturbation p;
    p.target = t_;
    double cur = margin(logits(), y_);
    p.margins.push_back(cur);
    for (int round = 0; round < atk.n_perturb; ++round) {
      Candidate best = best_candidate(atk);
      if (!(best.margin < cur)) break;
      if (best.is_edge) {
        flip_edge(best.index);
        p.edge_flips.emplace_back(t_, best.index);
      } else {
        flip_feature(best.index);
        p.feature_flips.emplace_back(t_, best.index);
      }
      cur = margin(logits(), y_);
      p.margins.push_back(cur);
    }
    return p;
  }

 private:
  struct Candidate {
    bool is_edge = true;
    int index = -1;
    double margin = std::numeric_limits<double>::infinity();
  };

  Eigen::RowVectorXd logits() const {
    Eigen::RowVectorXd acc = s_.row(t_) / d_(t_);
    for (NodeId m : nt_) acc += s_.row(m) / d_(m);
    return acc / std::sqrt(d_(t_));
  }

  template <class Fn>
  void for_each_neighbor(NodeId m, Fn&& fn) const {
    if (m == t_) {
      for (NodeId k : nt_) fn(k);
      return;
    }
    for (NodeId k : g_base_.neighbors(m))
      if (!(k == t_ && edge_flipped_[m])) fn(k);
    if (edge_flipped_[m] && !base_nt_[m]) fn(t_);
  }

  void recompute_s(std::vector<NodeId>& nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (NodeId m : nodes) {
      Eigen::RowVectorXd acc = g_.row(m);
      for_each_neighbor(m, [&](NodeId k) { acc += g_.row(k); });
      s_.row(m) = acc;
    }
  }

  Candidate best_candidate(const AttackConfig& atk) const {
    Candidate best;
    const double dt = d_(t_);
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(s_.cols());
    double r = 0.0;
    for (NodeId m : nt_) {
      b += s_.row(m) / d_(m);
      r += 1.0 / d_(m);
    }
    const Eigen::RowVectorXd g_t = g_.row(t_);
    const Eigen::RowVectorXd s_t = s_.row(t_);

    if (atk.links()) {
      const auto score_edge = [&](NodeId j) {
        if (j == t_ || edge_flipped_[j]) return;
        const bool remove = in_nt_[j];
        const double sigma = remove ? -1.0 : 1.0;
        const double dtp = dt + sigma, dj = d_(j), djp = dj + sigma;
        const Eigen::RowVectorXd gtp = u_t_ / std::sqrt(dtp);
        const Eigen::RowVectorXd gjp = ctx_.u.row(j) / std::sqrt(djp);
        const Eigen::RowVectorXd dg_t = gtp - g_t;
        const Eigen::RowVectorXd dg_j = gjp - g_.row(j);
        double c = 0.0;
        for (NodeId m : g_base_.neighbors(j))
          if (in_nt_[m]) c += 1.0 / d_(m);
        Eigen::RowVectorXd total;
        if (remove) {
          total = (s_t + dg_t - g_.row(j)) / dtp + b - s_.row(j) / dj + (r - 1.0 / dj) * dg_t + c * dg_j;
        } else {
          total = (s_t + dg_t + gjp) / dtp + (s_.row(j) + dg_j + gtp) / djp + b + r * dg_t + c * dg_j;
        }
        const double mg = margin(total / std::sqrt(dtp), y_);
        if (mg < best.margin) best = {true, j, mg};
      };
      if (atk.edge_candidates.empty()) {
        for (NodeId j = 0; j < g_base_.num_nodes(); ++j) score_edge(j);
      } else {
        for (NodeId j : atk.edge_candidates) score_edge(j);
      }
    }

    if (atk.features()) {
      const Eigen::RowVectorXd z = (s_t / dt + b) / std::sqrt(dt);
      const double a_tt = (1.0 / dt + r) / dt;
      const auto score_feature = [&](int f) {
        if (f < 0 || f >= ctx_.w.rows()) throw Error("nettack_lite: feature candidate out of range");
        if (feat_flipped_[f]) return;
        const Eigen::RowVectorXd u_new = flipped_u(f);
        const double mg = margin(z + a_tt * (u_new - u_t_), y_);
        if (mg < best.margin) best = {false, f, mg};
      };
      if (atk.feature_candidates.empty()) {
        for (int f = 0; f < ctx_.w.rows(); ++f) score_feature(f);
      } else {
        for (int f : atk.feature_candidates) score_feature(f);
      }
    }
    return best;
  }

  double toggled(int f) const { return x_t_(f) != 0.0 ? 0.0 : 1.0; }

  Eigen::RowVectorXd flipped_u(int f) const {
    const double delta = toggled(f) - x_t_(f);
    const Eigen::RowVectorXd r = r_t_ + delta * ctx_.w.row(f);
    if (!ctx_.normalize_features) return r;
    const double sum = row_sum_ + delta;
    return sum > 0.0 ? Eigen::RowVectorXd(r / sum) : Eigen::RowVectorXd::Zero(r.size());
  }

  void flip_edge(NodeId j) {
    std::vector<NodeId> touched{t_, j};
    touched.insert(touched.end(), nt_.begin(), nt_.end());
    for_each_neighbor(j, [&](NodeId k) { touched.push_back(k); });

    const double sigma = in_nt_[j] ? -1.0 : 1.0;
    if (in_nt_[j]) {
      nt_.erase(std::find(nt_.begin(), nt_.end(), j));
      in_nt_[j] = 0;
    } else {
      nt_.push_back(j);
      in_nt_[j] = 1;
    }
    edge_flipped_[j] = 1;
    d_(t_) += sigma;
    d_(j) += sigma;
    g_.row(t_) = u_t_ / std::sqrt(d_(t_));
    g_.row(j) = ctx_.u.row(j) / std::sqrt(d_(j));

    touched.insert(touched.end(), nt_.begin(), nt_.end());
    for_each_neighbor(j, [&](NodeId k) { touched.push_back(k); });
    recompute_s(touched);
  }

  void flip_feature(int f) {
    const Eigen::RowVectorXd u_new = flipped_u(f);
    const double delta = toggled(f) - x_t_(f);
    r_t_ += delta * ctx_.w.row(f);
    row_sum_ += delta;
    x_t_(f) += delta;
    u_t_ = u_new;
    feat_flipped_[f] = 1;
    g_.row(t_) = u_t_ / std::sqrt(d_(t_));
    std::vector<NodeId> touched{t_};
    touched.insert(touched.end(), nt_.begin(), nt_.end());
    recompute_s(touched);
  }

  const AttackContext& ctx_;
  const SparseGraph& g_base_;
  NodeId t_;
  int y_;
  Eigen::VectorXd d_;
  Eigen::MatrixXd g_, s_;
  std::vector<NodeId> nt_;
  std::vector<char> in_nt_, base_nt_, edge_flipped_, feat_flipped_;
  Eigen::RowVectorXd x_t_, r_t_, u_t_;
  double row_sum_ = 0.0;
};

std::uint64_t edge_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

SparseGraph flip_edges(const SparseGraph& g, std::span<const Perturbation> perts) {
  std::unordered_set<std::uint64_t> removed;
  std::vector<Edge> edges;
  for (const auto& p : perts)
    for (auto [a, b] : p.edge_flips) {
      if (g.has_edge(a, b)) {
        removed.insert(edge_key(a, b));
      } else {
        edges.emplace_back(a, b);
      }
    }
  for (auto [a, b] : g.edge_list())
    if (!removed.count(edge_key(a, b))) edges.emplace_back(a, b);
  return build_csr(edges, g.num_nodes());
}

void check_perturbations(const SparseGraph& g, Eigen::Index feature_dim, std::span<const Perturbation> perts) {
  std::unordered_set<NodeId> targets;
  std::unordered_set<std::uint64_t> edges;
  for (const auto& p : perts) {
    if (!targets.insert(p.target).second) throw Error("apply_perturbations: duplicate target");
    std::unordered_set<int> feats;
    for (auto [a, b] : p.edge_flips) {
      if (a < 0 || b < 0 || a >= g.num_nodes() || b >= g.num_nodes() || a == b)
        throw Error("apply_perturbations: bad edge flip");
      if (a != p.target && b != p.target) throw Error("apply_perturbations: edge flip not incident to target");
      if (!edges.insert(edge_key(a, b)).second) throw Error("apply_perturbations: conflicting edge flips");
    }
    for (auto [t, f] : p.feature_flips) {
      if (t != p.target) throw Error("apply_perturbations: feature flip off target");
      if (f < 0 || f >= feature_dim) throw Error("apply_perturbations: feature index out of range");
      if (!feats.insert(f).second) throw Error("apply_perturbations: conflicting feature flips");
    }
  }
}

double toggle(double v) { return v != 0.0 ? 0.0 : 1.0; }

}  // namespace

Perturbation nettack_lite(const AttackContext& ctx, NodeId target, int label, const AttackConfig& atk) {
  atk.validate();
  return TargetAttack(ctx, target, label).run(atk);
}

PerturbedGraph apply_perturbations(const SparseGraph& g, const Eigen::MatrixXd& x,
                                   std::span<const Perturbation> perturbations) {
  check_perturbations(g, x.cols(), perturbations);
  PerturbedGraph out;
  out.features = x;
  for (const auto& p : perturbations)
    for (auto [t, f] : p.feature_flips) out.features(t, f) = toggle(out.features(t, f));
  out.graph = flip_edges(g, perturbations);
  return out;
}

std::size_t drop_conflicting_flips(std::vector<Perturbation>& perturbations) {
  std::unordered_set<std::uint64_t> seen;
  std::size_t dropped = 0;
  for (auto& p : perturbations) {
    std::vector<Edge> kept;
    for (auto e : p.edge_flips) {
      if (seen.insert(edge_key(e.first, e.second)).second) {
        kept.push_back(e);
      } else {
        ++dropped;
      }
    }
    p.edge_flips = std::move(kept);
  }
  return dropped;
}

Eigen::RowVectorXd node_logits(const GcnParams<double>& params, const SparseGraph& g, const SparseFeatures& xhat,
                               NodeId v, const Eigen::RowVectorXd* target_row) {
  std::unordered_map<NodeId, Eigen::RowVectorXd> xw;
  const auto xw_of = [&](NodeId k) -> const Eigen::RowVectorXd& {
    auto it = xw.find(k);
    if (it != xw.end()) return it->second;
    Eigen::RowVectorXd r = (k == v && target_row) ? Eigen::RowVectorXd(*target_row * params.w0)
                                                  : Eigen::RowVectorXd(xhat.row(k) * params.w0);
    return xw.emplace(k, std::move(r)).first->second;
  };
  const auto deg = [&](NodeId k) { return g.weighted_degree(k) + 1.0; };
  const auto hidden = [&](NodeId m) {
    const double dm = deg(m);
    Eigen::RowVectorXd pre = xw_of(m) / dm;
    const auto nb = g.neighbors(m);
    const auto w = g.weights(m);
    for (std::size_t i = 0; i < nb.size(); ++i) pre += w[i] / std::sqrt(dm * deg(nb[i])) * xw_of(nb[i]);
    return Eigen::RowVectorXd(pre.cwiseMax(0.0));
  };
  const double dv = deg(v);
  Eigen::RowVectorXd prop = hidden(v) / dv;
  const auto nb = g.neighbors(v);
  const auto w = g.weights(v);
  for (std::size_t i = 0; i < nb.size(); ++i) prop += w[i] / std::sqrt(dv * deg(nb[i])) * hidden(nb[i]);
  return prop * params.head;
}

namespace {

TrainedModel adversarial_core(const Dataset& ds, const TrainConfig& cfg, const AttackConfig& atk,
                              const SslSpec* ss) {
  cfg.validate();
  atk.validate();
  if (ds.splits.train.empty()) throw Error("train: empty train split");
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  const PseudoLabels pseudo = fit_pseudo_labels(ds, cfg);

  const auto unlabeled = unlabeled_nodes(ds);
  const std::size_t size = atk.attack_set_size >= 0 ? static_cast<std::size_t>(atk.attack_set_size)
                                                     : std::min<std::size_t>(500, unlabeled.size() / 10);
  const AttackSets sets = sample_attack_sets(unlabeled, size, size, derive_seed(cfg.seed, "attack_sets"));
  std::vector<NodeId> adv_nodes = sets.attack;
  adv_nodes.insert(adv_nodes.end(), sets.clean.begin(), sets.clean.end());
  std::sort(adv_nodes.begin(), adv_nodes.end());

  std::optional<int> ssl_dim;
  if (ss) ssl_dim = ss->kind == TaskKind::Completion ? ds.feature_dim() : ss->k;
  GcnParams<double> init = init_params(ds.feature_dim(), cfg.hidden_dim, ds.num_classes, ssl_dim, cfg.seed);

  Objective sup;
  sup.name = "sup";
  sup.input = &clean;
  sup.labels = ds.labels;
  sup.nodes = ds.splits.train;
  sup.weight = cfg.alpha1;

  GraphInput perturbed;
  std::optional<GraphInput> ss_input;
  SslTask task;
  const auto hook = [&](int epoch, const GcnParams<double>& params, std::vector<Objective>& obj) {
    if ((epoch - 1) % atk.regen_period != 0 || adv_nodes.empty()) return;
    // The first round attacks the pseudo-label model, later rounds the current one.
    const GcnParams<double>& victim = epoch == 1 ? pseudo.model : params;
    const AttackContext ctx =
        make_attack_context(ds.graph, ds.features, cfg.normalize_features, fit_surrogate(victim, clean, atk));
    std::vector<Perturbation> perts;
    perts.reserve(sets.attack.size());
    for (NodeId t : sets.attack) perts.push_back(nettack_lite(ctx, t, pseudo.labels[t], atk));
    drop_conflicting_flips(perts);
    PerturbedGraph pg = apply_perturbations(ds.graph, ds.features, perts);
    perturbed = prepare_input(pg.features, pg.graph, cfg.normalize_features);

    obj.resize(1);
    Objective adv;
    adv.name = "adv";
    adv.input = &perturbed;
    adv.stream = 1;
    adv.labels = pseudo.labels;
    adv.nodes = adv_nodes;
    adv.weight = cfg.alpha3;
    obj.push_back(adv);
    if (ss) {
      task = make_task(*ss, pg.features, pg.graph);
      if (task.features) ss_input = prepare_input(*task.features, pg.graph, cfg.normalize_features);
      Objective o = ssl_objective(task, perturbed, ss_input ? &*ss_input : nullptr, cfg.alpha2);
      if (!task.features) o.stream = 1;
      obj.push_back(o);
    }
  };
  return fit(ds, clean, cfg, std::move(init), {sup}, {cfg.epochs, true}, hook);
}

}  // namespace

TrainedModel adversarial_train(const Dataset& ds, const TrainConfig& cfg, const AttackConfig& atk) {
  return adversarial_core(ds, cfg, atk, nullptr);
}

TrainedModel adversarial_train_ss(const Dataset& ds, const SslSpec& task, const TrainConfig& cfg,
                                  const AttackConfig& atk) {
  return adversarial_core(ds, cfg, atk, &task);
}

std::vector<Perturbation> generate_perturbations(const GcnParams<double>& params, const Dataset& ds,
                                                 const TrainConfig& cfg, const AttackConfig& atk,
                                                 std::span<const NodeId> targets) {
  atk.validate();
  std::vector<Perturbation> out;
  out.reserve(targets.size());
  if (atk.n_perturb == 0) {
    for (NodeId t : targets) out.push_back({t, {}, {}, {}});
    return out;
  }
  const GraphInput clean = prepare_input(ds.features, ds.graph, cfg.normalize_features);
  const AttackContext ctx =
      make_attack_context(ds.graph, ds.features, cfg.normalize_features, fit_surrogate(params, clean, atk));
  for (NodeId t : targets) out.push_back(nettack_lite(ctx, t, ds.labels[t], atk));
  return out;
}

double evaluate_perturbed(const GcnParams<double>& params, const Dataset& ds, const TrainConfig& cfg,
                          std::span<const Perturbation> perturbations) {
  if (perturbations.empty()) throw Error("evaluate_under_attack: empty target set");
  const SparseFeatures xhat = to_sparse(cfg.normalize_features ? row_normalize(ds.features) : ds.features);
  long hits = 0;
  for (const auto& p : perturbations) {
    const NodeId t = p.target;
    if (t < 0 || t >= ds.num_nodes()) throw Error("evaluate_perturbed: target out of range");
    Eigen::RowVectorXd z;
    if (p.size() == 0) {
      z = node_logits(params, ds.graph, xhat, t);
    } else {
      check_perturbations(ds.graph, ds.features.cols(), std::span(&p, 1));
      const SparseGraph g = p.edge_flips.empty() ? ds.graph : flip_edges(ds.graph, std::span(&p, 1));
      Eigen::RowVectorXd row = ds.features.row(t);
      for (auto [v, f] : p.feature_flips) row(f) = toggle(row(f));
      if (cfg.normalize_features && row.sum() > 0.0) row /= row.sum();
      z = node_logits(params, g, xhat, t, &row);
    }
    Eigen::Index pred = 0;
    z.maxCoeff(&pred);
    hits += pred == ds.labels[t];
  }
  return static_cast<double>(hits) / static_cast<double>(perturbations.size());
}

AttackEvaluation evaluate_under_attack(const GcnParams<double>& params, const Dataset& ds, const TrainConfig& cfg,
                                       const AttackConfig& atk, std::span<const NodeId> targets) {
  if (targets.empty()) throw Error("evaluate_under_attack: empty target set");
  AttackEvaluation ev;
  ev.perturbations = generate_perturbations(params, ds, cfg, atk, targets);
  ev.accuracy = evaluate_perturbed(params, ds, cfg, ev.perturbations);
  return ev;
}

}  // namespace ssgcn
