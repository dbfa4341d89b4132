#include "ssgcn/experiment.hpp"

#include "ssgcn/checkpoint.hpp"
#include "ssgcn/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace ssgcn {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Plain: return "plain";
    case Scheme::PretrainFinetune: return "pf";
    case Scheme::SelfTrain: return "st";
    case Scheme::MultiTask: return "mtl";
    case Scheme::AdvT: return "advt";
    case Scheme::AdvTSS: return "advt_ss";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  for (Scheme v : {Scheme::Plain, Scheme::PretrainFinetune, Scheme::SelfTrain, Scheme::MultiTask, Scheme::AdvT,
                   Scheme::AdvTSS})
    if (to_string(v) == s) return v;
  throw Error("unknown scheme '" + s + "' (plain, pf, st, mtl, advt, advt_ss)");
}

bool is_adversarial(Scheme s) { return s == Scheme::AdvT || s == Scheme::AdvTSS; }

namespace {

bool needs_task(Scheme s) { return s == Scheme::PretrainFinetune || s == Scheme::MultiTask || s == Scheme::AdvTSS; }

std::string task_name(const std::optional<TaskKind>& t) { return t ? to_string(*t) : "none"; }

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty() || name.find_first_of("/\\,\n\r") != std::string::npos)
    throw Error("config: name must be non-empty without '/', '\\', ',' or newlines");
  if (dataset.empty()) throw Error("config: dataset is required");
  if (needs_task(scheme) != task.has_value())
    throw Error("config: scheme " + to_string(scheme) +
                (needs_task(scheme) ? " needs a task (clu, par, comp)" : " takes task none"));
  if (is_adversarial(scheme) && !attack) throw Error("config: scheme " + to_string(scheme) + " needs attack settings");
  train.validate();
  if (attack) attack->validate();
  if (alpha2_grid.empty()) throw Error("config: ssl.alpha2_grid is empty");
  for (double a : alpha2_grid)
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error("config: alpha2 grid values must be finite and >= 0");
  if (ssl_k < 0) throw Error("config: ssl.K must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("config: ssl.epsilon must be in (0, 1)");
  if (!(mask_fraction > 0.0 && mask_fraction <= 1.0)) throw Error("config: ssl.mask_fraction must be in (0, 1]");
  if (st_stages < 0) throw Error("config: st.stages must be >= 0");
  if (attack_targets < 0) throw Error("config: attack.targets must be >= 0");
  if (seeds.empty()) throw Error("config: no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw Error("config: duplicate seeds");
  if (selection_seeds < 1) throw Error("config: selection.seeds must be >= 1");
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error("config: top level must be an object");
  ExperimentConfig c;
  std::optional<AttackConfig> atk;
  auto attack = [&]() -> AttackConfig& {
    if (!atk) atk.emplace();
    return *atk;
  };
  std::optional<long> seed_count, seed_start;
  bool seeds_listed = false;
  std::string task = "none";
  bool synthetic_keys = false;

  using Setter = std::function<void(const json&)>;
  const std::map<std::string, Setter> setters{
      {"name", [&](const json& v) { c.name = v.get<std::string>(); }},
      {"dataset", [&](const json& v) { c.dataset = v.get<std::string>(); }},
      {"data_root", [&](const json& v) { c.data_root = base_dir / v.get<std::string>(); }},
      {"output_dir", [&](const json& v) { c.output_dir = base_dir / v.get<std::string>(); }},
      {"scheme", [&](const json& v) { c.scheme = parse_scheme(v.get<std::string>()); }},
      {"task", [&](const json& v) { task = v.get<std::string>(); }},
      {"train.learning_rate", [&](const json& v) { c.train.learning_rate = v.get<double>(); }},
      {"train.weight_decay", [&](const json& v) { c.train.weight_decay = v.get<double>(); }},
      {"train.epochs", [&](const json& v) { c.train.epochs = v.get<int>(); }},
      {"train.patience", [&](const json& v) { c.train.patience = v.get<int>(); }},
      {"train.hidden_dim", [&](const json& v) { c.train.hidden_dim = v.get<int>(); }},
      {"train.dropout", [&](const json& v) { c.train.dropout = v.get<double>(); }},
      {"train.alpha1", [&](const json& v) { c.train.alpha1 = v.get<double>(); }},
      {"train.alpha2",
       [&](const json& v) {
         c.train.alpha2 = v.get<double>();
         c.alpha2_fixed = true;
       }},
      {"train.alpha3", [&](const json& v) { c.train.alpha3 = v.get<double>(); }},
      {"train.pretrain_epochs", [&](const json& v) { c.train.pretrain_epochs = v.get<int>(); }},
      {"train.normalize_features", [&](const json& v) { c.train.normalize_features = v.get<bool>(); }},
      {"ssl.K", [&](const json& v) { c.ssl_k = v.get<int>(); }},
      {"ssl.epsilon", [&](const json& v) { c.epsilon = v.get<double>(); }},
      {"ssl.mask_fraction", [&](const json& v) { c.mask_fraction = v.get<double>(); }},
      {"ssl.alpha2_grid", [&](const json& v) { c.alpha2_grid = v.get<std::vector<double>>(); }},
      {"st.stages", [&](const json& v) { c.st_stages = v.get<int>(); }},
      {"st.additions", [&](const json& v) { c.st_additions = v.get<int>(); }},
      {"attack.mode", [&](const json& v) { attack().mode = parse_attack_mode(v.get<std::string>()); }},
      {"attack.n_perturb", [&](const json& v) { attack().n_perturb = v.get<int>(); }},
      {"attack.surrogate_epochs", [&](const json& v) { attack().surrogate_epochs = v.get<int>(); }},
      {"attack.surrogate_lr", [&](const json& v) { attack().surrogate_lr = v.get<double>(); }},
      {"attack.set_size", [&](const json& v) { attack().attack_set_size = v.get<int>(); }},
      {"attack.regen_period", [&](const json& v) { attack().regen_period = v.get<int>(); }},
      {"attack.targets",
       [&](const json& v) {
         attack();
         c.attack_targets = v.get<int>();
       }},
      {"attack.cache",
       [&](const json& v) {
         attack();
         c.attack_cache = base_dir / v.get<std::string>();
       }},
      {"seeds",
       [&](const json& v) {
         c.seeds = v.get<std::vector<std::uint64_t>>();
         seeds_listed = true;
       }},
      {"seeds.count", [&](const json& v) { seed_count = v.get<long>(); }},
      {"seeds.start", [&](const json& v) { seed_start = v.get<long>(); }},
      {"selection.seeds", [&](const json& v) { c.selection_seeds = v.get<int>(); }},
      {"synthetic.nodes", [&](const json& v) { c.synthetic.nodes = v.get<NodeId>(); }},
      {"synthetic.classes", [&](const json& v) { c.synthetic.classes = v.get<int>(); }},
      {"synthetic.feature_dim", [&](const json& v) { c.synthetic.feature_dim = v.get<int>(); }},
      {"synthetic.avg_degree", [&](const json& v) { c.synthetic.avg_degree = v.get<double>(); }},
      {"synthetic.homophily", [&](const json& v) { c.synthetic.homophily = v.get<double>(); }},
      {"synthetic.words_per_node", [&](const json& v) { c.synthetic.words_per_node = v.get<int>(); }},
      {"synthetic.topic_share", [&](const json& v) { c.synthetic.topic_share = v.get<double>(); }},
      {"synthetic.train_per_class", [&](const json& v) { c.synthetic.train_per_class = v.get<int>(); }},
      {"synthetic.val_size", [&](const json& v) { c.synthetic.val_size = v.get<NodeId>(); }},
      {"synthetic.test_size", [&](const json& v) { c.synthetic.test_size = v.get<NodeId>(); }},
      {"synthetic.seed", [&](const json& v) { c.synthetic.seed = v.get<std::uint64_t>(); }},
  };

  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error("config: unknown key '" + key + "'");
    if (key.rfind("synthetic.", 0) == 0) synthetic_keys = true;
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error("config: bad value for '" + key + "': " + e.what());
    }
  }

  if (seeds_listed && (seed_count || seed_start)) throw Error("config: give either seeds or seeds.count/seeds.start");
  if (c.scheme == Scheme::AdvT || c.scheme == Scheme::AdvTSS) attack();
  if (!seeds_listed) {
    // Adversarial sweeps are expensive and repeat 5 times by default.
    const long n = seed_count.value_or(atk ? 5 : 50);
    const long start = seed_start.value_or(0);
    if (n < 1 || start < 0) throw Error("config: seeds.count must be >= 1 and seeds.start >= 0");
    c.seeds.clear();
    for (long i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(start + i));
  }
  if (task != "none") c.task = parse_task_kind(task);
  c.attack = atk;
  c.source = j;
  if (synthetic_keys && c.dataset != "synthetic") throw Error("config: synthetic.* keys need dataset 'synthetic'");
  if (const char* env = std::getenv("SSGCN_DATA_DIR"); env && *env) c.data_root = env;
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config " + file.string() + ": " + e.what());
  }
  return parse_config(j, file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "synthetic") return make_synthetic(cfg.synthetic);
  return load_dataset(cfg.data_root / cfg.dataset);
}

json to_json(const RunRecord& r) {
  json j;
  j["dataset"] = r.dataset;
  j["scheme"] = r.scheme;
  j["task"] = r.task;
  j["seed"] = r.seed;
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  j["accuracy"] = r.accuracy;
  j["best_epoch"] = r.best_epoch;
  j["val_accuracy"] = r.val_accuracy;
  j["epochs_run"] = r.epochs_run;
  j["alpha2"] = r.selection.alpha2;
  j["k"] = r.selection.k;
  if (r.attacked_accuracy) j["attacked_accuracy"] = *r.attacked_accuracy;
  j["model_checksum"] = r.model_checksum;
  return j;
}

TrainedModel train_scheme(const Dataset& ds, const ExperimentConfig& cfg, const Selection& sel, std::uint64_t seed) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  tc.alpha2 = sel.alpha2;
  SslSpec spec;
  if (cfg.task) spec = {*cfg.task, sel.k, cfg.epsilon, cfg.mask_fraction, derive_seed(seed, "task")};
  switch (cfg.scheme) {
    case Scheme::Plain: return train_supervised(ds, tc);
    case Scheme::SelfTrain: return self_train(ds, tc, cfg.st_stages, cfg.st_additions);
    case Scheme::PretrainFinetune: return pretrain_finetune(ds, make_task(spec, ds.features, ds.graph), tc);
    case Scheme::MultiTask: return train_multitask(ds, make_task(spec, ds.features, ds.graph), tc);
    case Scheme::AdvT: return adversarial_train(ds, tc, *cfg.attack);
    case Scheme::AdvTSS: return adversarial_train_ss(ds, spec, tc, *cfg.attack);
  }
  throw Error("train_scheme: bad scheme");
}

Selection select_hyperparameters(const Dataset& ds, const ExperimentConfig& cfg, int jobs) {
  const int c = ds.num_classes;
  const int fixed_k = cfg.ssl_k > 0 ? cfg.ssl_k : c;
  std::vector<Selection> grid;
  const bool k_matters = cfg.task && *cfg.task != TaskKind::Completion;
  const std::vector<int> ks = (k_matters && cfg.ssl_k == 0) ? std::vector<int>{c, 2 * c, 4 * c}
                                                            : std::vector<int>{fixed_k};
  switch (cfg.scheme) {
    case Scheme::MultiTask: {
      const std::vector<double> alphas = cfg.alpha2_fixed ? std::vector<double>{cfg.train.alpha2} : cfg.alpha2_grid;
      for (double a : alphas)
        for (int k : ks) grid.push_back({a, k});
      break;
    }
    case Scheme::PretrainFinetune:
      for (int k : ks) grid.push_back({cfg.train.alpha2, k});
      break;
    default: return {cfg.train.alpha2, fixed_k};
  }
  if (grid.size() == 1) return grid.front();

  const std::size_t n_seeds = std::min(cfg.seeds.size(), static_cast<std::size_t>(cfg.selection_seeds));
  std::vector<double> val(grid.size() * n_seeds, 0.0);
  parallel_for(val.size(), jobs, [&](std::size_t i) {
    val[i] = train_scheme(ds, cfg, grid[i / n_seeds], cfg.seeds[i % n_seeds]).result.best_val_accuracy;
  });
  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0;
    for (std::size_t s = 0; s < n_seeds; ++s) mean += val[g * n_seeds + s];
    mean /= static_cast<double>(n_seeds);
    if (mean > best_mean) {
      best_mean = mean;
      best = g;
    }
  }
  return grid[best];
}

std::vector<NodeId> attack_targets(const Dataset& ds, const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<NodeId> t = ds.splits.test;
  if (cfg.attack_targets > 0 && static_cast<std::size_t>(cfg.attack_targets) < t.size()) {
    Rng rng(derive_seed(seed, "targets"));
    rng.shuffle(t);
    t.resize(static_cast<std::size_t>(cfg.attack_targets));
    std::sort(t.begin(), t.end());
  }
  return t;
}

namespace {

std::string cache_key(const ExperimentConfig& cfg, const std::string& checksum, std::uint64_t seed,
                      std::size_t n_targets) {
  const AttackConfig& a = *cfg.attack;
  std::ostringstream os;
  os << cfg.dataset << '|' << checksum << '|' << to_string(a.mode) << '|' << a.n_perturb << '|'
     << a.surrogate_epochs << '|' << format_double(a.surrogate_lr) << '|' << n_targets << '|' << seed;
  return os.str();
}

std::vector<Perturbation> perturbations_for(const GcnParams<double>& params, const Dataset& ds,
                                            const ExperimentConfig& cfg, std::uint64_t seed,
                                            const std::string& checksum, const json* cache) {
  const auto targets = attack_targets(ds, cfg, seed);
  if (cache) {
    const auto it = cache->find(cache_key(cfg, checksum, seed, targets.size()));
    if (it != cache->end()) return it->get<std::vector<Perturbation>>();
  }
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  return generate_perturbations(params, ds, tc, *cfg.attack, targets);
}

}  // namespace

json load_attack_cache(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return json::object();
  try {
    json entries = json::parse(in).at("entries");
    if (!entries.is_object()) throw Error("attack cache " + file.string() + ": entries must be an object");
    return entries;
  } catch (const json::exception& e) {
    throw Error("attack cache " + file.string() + ": " + e.what());
  }
}

RunRecord run_seed(const Dataset& ds, const ExperimentConfig& cfg, const Selection& sel, std::uint64_t seed,
                   const json* cache) {
  RunRecord r;
  r.dataset = cfg.dataset;
  r.scheme = to_string(cfg.scheme);
  r.task = task_name(cfg.task);
  r.seed = seed;
  r.selection = sel;
  try {
    const TrainedModel m = train_scheme(ds, cfg, sel, seed);
    r.accuracy = m.result.test_accuracy;
    r.val_accuracy = m.result.best_val_accuracy;
    r.best_epoch = m.result.best_epoch;
    r.epochs_run = m.result.epochs_run;
    r.model_checksum = model_checksum(m.params);
    if (cfg.attack) {
      const auto perturbations = perturbations_for(m.params, ds, cfg, seed, r.model_checksum, cache);
      r.attacked_accuracy = evaluate_perturbed(m.params, ds, cfg.train, perturbations);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  if (m.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(m.n - 1));
  }
  return m;
}

AggregateReport aggregate(const ExperimentConfig& cfg, const Selection& sel, std::vector<RunRecord> records,
                          double wall_seconds) {
  AggregateReport rep;
  rep.name = cfg.name;
  rep.dataset = cfg.dataset;
  rep.scheme = to_string(cfg.scheme);
  rep.task = task_name(cfg.task);
  rep.selection = sel;
  rep.wall_seconds = wall_seconds;
  std::vector<double> acc, attacked;
  for (const auto& r : records) {
    if (r.error) {
      ++rep.failed;
      continue;
    }
    acc.push_back(r.accuracy);
    if (r.attacked_accuracy) attacked.push_back(*r.attacked_accuracy);
  }
  rep.accuracy = mean_std(acc);
  rep.attacked = mean_std(attacked);
  rep.records = std::move(records);
  return rep;
}

AggregateReport run_experiment(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = load_experiment_dataset(cfg);
  const json cache = cfg.attack_cache.empty() ? json::object() : load_attack_cache(cfg.attack_cache);
  const Selection sel = select_hyperparameters(ds, cfg, jobs);
  std::vector<RunRecord> records(cfg.seeds.size());
  parallel_for(records.size(), jobs,
               [&](std::size_t i) { records[i] = run_seed(ds, cfg, sel, cfg.seeds[i], &cache); });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return aggregate(cfg, sel, std::move(records), wall);
}

namespace {

const char* kCsvHeader =
    "name,dataset,scheme,task,alpha2,k,runs,failed,mean,std,attacked_runs,attacked_mean,attacked_std,wall_seconds";

}  // namespace

void write_outputs(const ExperimentConfig& cfg, const AggregateReport& rep) {
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream out(cfg.output_dir / (cfg.name + ".runs.jsonl"), std::ios::binary);
    for (const auto& r : rep.records) out << to_json(r).dump() << '\n';
    if (!out) throw Error("cannot write " + (cfg.output_dir / (cfg.name + ".runs.jsonl")).string());
  }
  std::ofstream(cfg.output_dir / (cfg.name + ".config.json")) << cfg.source.dump(2) << '\n';
  std::ofstream out(cfg.output_dir / (cfg.name + ".agg.csv"), std::ios::binary);
  out << kCsvHeader << '\n'
      << rep.name << ',' << rep.dataset << ',' << rep.scheme << ',' << rep.task << ','
      << format_double(rep.selection.alpha2) << ',' << rep.selection.k << ',' << rep.accuracy.n << ',' << rep.failed
      << ',' << format_double(rep.accuracy.mean) << ',' << format_double(rep.accuracy.std) << ',' << rep.attacked.n
      << ',' << format_double(rep.attacked.mean) << ',' << format_double(rep.attacked.std) << ','
      << format_double(rep.wall_seconds) << '\n';
  if (!out) throw Error("cannot write " + (cfg.output_dir / (cfg.name + ".agg.csv")).string());
}

std::vector<AggRow> read_agg_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error(file.string() + ": unexpected header");
  std::vector<AggRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 14) throw Error(file.string() + ":" + std::to_string(lineno) + ": expected 14 fields");
    try {
      AggRow r;
      r.name = f[0];
      r.dataset = f[1];
      r.scheme = f[2];
      r.task = f[3];
      r.runs = std::stoul(f[6]);
      r.mean = std::stod(f[8]);
      r.std = std::stod(f[9]);
      r.attacked_runs = std::stoul(f[10]);
      r.attacked_mean = std::stod(f[11]);
      r.attacked_std = std::stod(f[12]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(file.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

namespace {

std::string row_label(const std::string& scheme, const std::string& task) {
  std::string t = task == "clu" ? "Clu" : task == "par" ? "Par" : task == "comp" ? "Comp" : task;
  if (scheme == "plain") return "GCN";
  if (scheme == "st") return "Self-training";
  if (scheme == "pf") return "P&F-" + t;
  if (scheme == "mtl") return "MTL-" + t;
  if (scheme == "advt") return "AdvT";
  if (scheme == "advt_ss") return "AdvT+" + t;
  return scheme + (task == "none" ? "" : "-" + task);
}

}  // namespace

std::string format_report(std::span<const AggRow> rows) {
  if (rows.empty()) throw Error("report: no rows");
  struct Cell {
    double mean, std;
  };
  std::vector<std::string> labels, columns;
  std::map<std::pair<std::string, std::string>, Cell> cells;
  auto add = [&](const std::string& label, const std::string& col, Cell c) {
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (!cells.emplace(std::pair{label, col}, c).second)
      throw Error("report: duplicate entry for " + label + " / " + col);
  };
  for (const auto& r : rows) {
    const std::string label = row_label(r.scheme, r.task);
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    if (r.runs > 0) add(label, r.dataset, {r.mean, r.std});
    if (r.attacked_runs > 0) add(label, r.dataset + " (attacked)", {r.attacked_mean, r.attacked_std});
  }

  // Best mean per column in bold, runner-up in italics; ties share the rank.
  std::map<std::pair<std::string, std::string>, int> rank;
  for (const auto& col : columns) {
    std::vector<double> means;
    for (const auto& l : labels)
      if (auto it = cells.find({l, col}); it != cells.end()) means.push_back(it->second.mean);
    std::sort(means.rbegin(), means.rend());
    means.erase(std::unique(means.begin(), means.end()), means.end());
    if (means.size() < 2) continue;  // a lone entry is not a comparison
    for (const auto& l : labels)
      if (auto it = cells.find({l, col}); it != cells.end())
        rank[{l, col}] = it->second.mean == means[0] ? 1 : it->second.mean == means[1] ? 2 : 0;
  }

  std::vector<std::vector<std::string>> table;
  table.push_back({"Method"});
  for (const auto& c : columns) table[0].push_back(c);
  for (const auto& l : labels) {
    std::vector<std::string> line{l};
    for (const auto& c : columns) {
      const auto it = cells.find({l, c});
      if (it == cells.end()) {
        line.push_back("-");
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * it->second.mean, 100.0 * it->second.std);
      const int r = rank.count({l, c}) ? rank.at({l, c}) : 0;
      line.push_back(r == 1 ? "**" + std::string(buf) + "**" : r == 2 ? "_" + std::string(buf) + "_" : buf);
    }
    table.push_back(std::move(line));
  }

  // Pad by code points so the ± sign does not skew alignment.
  auto width = [](const std::string& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
  };
  std::vector<std::size_t> w(table[0].size(), 3);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) w[i] = std::max(w[i], width(line[i]));
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& line) {
    os << '|';
    for (std::size_t i = 0; i < line.size(); ++i) os << ' ' << line[i] << std::string(w[i] - width(line[i]), ' ') << " |";
    os << '\n';
  };
  emit(table[0]);
  os << '|';
  for (std::size_t i = 0; i < w.size(); ++i) os << (i == 0 ? ' ' + std::string(w[i], '-') + " |" : ' ' + std::string(w[i] - 1, '-') + ": |");
  os << '\n';
  for (std::size_t r = 1; r < table.size(); ++r) emit(table[r]);
  return os.str();
}

json build_attack_cache(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  if (!cfg.attack) throw Error("attack-cache: config has no attack settings");
  const Dataset ds = load_experiment_dataset(cfg);
  const Selection sel = select_hyperparameters(ds, cfg, jobs);
  std::vector<std::pair<std::string, json>> entries(cfg.seeds.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const TrainedModel m = train_scheme(ds, cfg, sel, seed);
    const auto targets = attack_targets(ds, cfg, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    entries[i] = {cache_key(cfg, model_checksum(m.params), seed, targets.size()),
                  generate_perturbations(m.params, ds, tc, *cfg.attack, targets)};
  });
  json out;
  out["entries"] = json::object();
  for (auto& [k, v] : entries) out["entries"][k] = std::move(v);
  return out;
}

}  // namespace ssgcn
