#pragma once

#include "ssgcn/adversarial.hpp"
#include "ssgcn/synthetic.hpp"
#include "ssgcn/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssgcn {

enum class Scheme { Plain, PretrainFinetune, SelfTrain, MultiTask, AdvT, AdvTSS };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);
bool is_adversarial(Scheme s);

struct ExperimentConfig {
  std::string name = "experiment";
  std::string dataset;  // directory under data_root, or "synthetic"
  std::filesystem::path data_root = ".";
  std::filesystem::path output_dir = ".";
  Scheme scheme = Scheme::Plain;
  std::optional<TaskKind> task;
  TrainConfig train;
  bool alpha2_fixed = false;
  std::vector<double> alpha2_grid{0.1, 0.3, 1.0, 3.0, 10.0};
  int ssl_k = 0;  // 0: choose from {C, 2C, 4C}
  double epsilon = 0.05;
  double mask_fraction = 0.1;
  int st_stages = 3;
  int st_additions = 0;  // 0: ceil(|train| / C)
  std::optional<AttackConfig> attack;
  int attack_targets = 0;  // 0: the whole test split
  std::filesystem::path attack_cache;
  std::vector<std::uint64_t> seeds{0};
  int selection_seeds = 3;
  SyntheticConfig synthetic;
  nlohmann::json source;  // the parsed file, echoed next to the outputs

  void validate() const;
};

// Flat JSON object with dotted keys. Relative paths resolve against base_dir;
// SSGCN_DATA_DIR, when set, replaces data_root.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& file);

Dataset load_experiment_dataset(const ExperimentConfig& cfg);

struct Selection {
  double alpha2 = 1.0;
  int k = 0;
};

struct RunRecord {
  std::string dataset;
  std::string scheme;
  std::string task;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  double accuracy = 0.0;
  double val_accuracy = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  Selection selection;
  std::optional<double> attacked_accuracy;
  std::string model_checksum;
};

nlohmann::json to_json(const RunRecord& r);

// Grid search over alpha2 and K by mean validation accuracy over the first
// selection_seeds seeds. Schemes without a grid get the configured values.
Selection select_hyperparameters(const Dataset& ds, const ExperimentConfig& cfg, int jobs = 1);

TrainedModel train_scheme(const Dataset& ds, const ExperimentConfig& cfg, const Selection& sel, std::uint64_t seed);

std::vector<NodeId> attack_targets(const Dataset& ds, const ExperimentConfig& cfg, std::uint64_t seed);

// Entries of an attack-cache file; empty when the file does not exist.
nlohmann::json load_attack_cache(const std::filesystem::path& file);

// Trains one seed and, with attack settings, evaluates it under attack. Cached
// perturbations matching the model checksum are replayed instead of regenerated.
// Failures land in the record's error field.
RunRecord run_seed(const Dataset& ds, const ExperimentConfig& cfg, const Selection& sel, std::uint64_t seed,
                   const nlohmann::json* cache = nullptr);

struct MeanStd {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for n < 2
};

MeanStd mean_std(std::span<const double> xs);

struct AggregateReport {
  std::string name;
  std::string dataset;
  std::string scheme;
  std::string task;
  Selection selection;
  std::vector<RunRecord> records;
  MeanStd accuracy;
  MeanStd attacked;
  std::size_t failed = 0;
  double wall_seconds = 0.0;
};

AggregateReport aggregate(const ExperimentConfig& cfg, const Selection& sel, std::vector<RunRecord> records,
                          double wall_seconds);

// Runs every seed on a pool of `jobs` workers; records come back in seed order.
AggregateReport run_experiment(const ExperimentConfig& cfg, int jobs = 1);

// <output_dir>/<name>.runs.jsonl, <name>.agg.csv and <name>.config.json.
void write_outputs(const ExperimentConfig& cfg, const AggregateReport& report);

struct AggRow {
  std::string name, dataset, scheme, task;
  std::size_t runs = 0;
  double mean = 0.0, std = 0.0;
  std::size_t attacked_runs = 0;
  double attacked_mean = 0.0, attacked_std = 0.0;
};

std::vector<AggRow> read_agg_csv(const std::filesystem::path& file);

// Markdown table, one row per (scheme, task), one column per dataset (plus an
// attacked column where present). Per column the best mean is bold and the
// runner-up italic.
std::string format_report(std::span<const AggRow> rows);

// Writes perturbations for every seed's model, keyed by dataset, model
// checksum, attack config and seed.
nlohmann::json build_attack_cache(const ExperimentConfig& cfg, int jobs = 1);

}  // namespace ssgcn
