#include "ssgcn/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace ssgcn;

namespace {

int cmd_run(const std::string& config, int jobs) {
  const ExperimentConfig cfg = load_config(config);
  const AggregateReport rep = run_experiment(cfg, jobs);
  for (const auto& r : rep.records)
    if (r.error) std::cerr << "warning: seed " << r.seed << " failed: " << *r.error << '\n';
  write_outputs(cfg, rep);
  if (rep.accuracy.n == 0) {
    std::cerr << "error: every seed failed\n";
    return 1;
  }
  if (rep.failed > 0)
    std::cerr << "warning: aggregated over " << rep.accuracy.n << " of " << rep.records.size() << " seeds\n";
  std::printf("%s: %s %s on %s, %zu runs, accuracy %.2f +- %.2f", rep.name.c_str(), rep.scheme.c_str(),
              rep.task.c_str(), rep.dataset.c_str(), rep.accuracy.n, 100.0 * rep.accuracy.mean,
              100.0 * rep.accuracy.std);
  if (rep.attacked.n > 0) std::printf(", attacked %.2f +- %.2f", 100.0 * rep.attacked.mean, 100.0 * rep.attacked.std);
  std::printf(" (%.1f s)\n", rep.wall_seconds);
  return 0;
}

int cmd_report(const std::vector<std::string>& files) {
  std::vector<AggRow> rows;
  for (const auto& f : files) {
    auto r = read_agg_csv(f);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::cout << format_report(rows);
  return 0;
}

int cmd_attack_cache(const std::string& config, int jobs, std::string out) {
  const ExperimentConfig cfg = load_config(config);
  if (out.empty()) out = cfg.attack_cache.string();
  if (out.empty()) throw Error("attack-cache: set attack.cache in the config or pass --out");
  const auto cache = build_attack_cache(cfg, jobs);
  std::ofstream(out) << cache.dump() << '\n';
  std::cerr << "wrote " << cache["entries"].size() << " entries to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised GCN training and evaluation"};
  app.require_subcommand(1);

  std::string config;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run every seed of an experiment config");
  run->add_option("--config", config, "Experiment config (flat JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Concurrent seed runs")->check(CLI::PositiveNumber);

  std::vector<std::string> csvs;
  auto* report = app.add_subcommand("report", "Markdown table from aggregate CSV files");
  report->add_option("csv", csvs, "Aggregate CSV files")->required()->check(CLI::ExistingFile);

  std::string out;
  auto* cache = app.add_subcommand("attack-cache", "Precompute evaluation perturbations");
  cache->add_option("--config", config, "Experiment config (flat JSON)")->required()->check(CLI::ExistingFile);
  cache->add_option("--jobs", jobs, "Concurrent seed runs")->check(CLI::PositiveNumber);
  cache->add_option("--out", out, "Output file (default: attack.cache from the config)");

  SyntheticConfig syn;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset directory");
  synth->add_option("--out", synth_dir, "Output directory")->required();
  synth->add_option("--nodes", syn.nodes);
  synth->add_option("--classes", syn.classes);
  synth->add_option("--features", syn.feature_dim);
  synth->add_option("--degree", syn.avg_degree);
  synth->add_option("--homophily", syn.homophily);
  synth->add_option("--seed", syn.seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, jobs);
    if (*report) return cmd_report(csvs);
    if (*cache) return cmd_attack_cache(config, jobs, out);
    if (*synth) {
      save_dataset(make_synthetic(syn), synth_dir);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
