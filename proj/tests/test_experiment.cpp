#include <doctest.h>

#include "ssgcn/checkpoint.hpp"
#include "ssgcn/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ssgcn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ssgcn_test_experiment_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json small(const std::string& name, const fs::path& out) {
  return {{"name", name},
          {"dataset", "synthetic"},
          {"output_dir", out.string()},
          {"synthetic.nodes", 300},
          {"synthetic.val_size", 60},
          {"synthetic.test_size", 120},
          {"synthetic.seed", 4},
          {"train.hidden_dim", 16},
          {"train.epochs", 60},
          {"train.patience", 20},
          {"train.pretrain_epochs", 20}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults and seed ranges") {
    const auto c = parse_config({{"dataset", "cora"}, {"scheme", "plain"}});
    CHECK(c.seeds.size() == 50);
    CHECK(c.seeds.front() == 0);
    CHECK(!c.attack);
    CHECK(c.train.epochs == 400);
    const auto a = parse_config({{"dataset", "cora"}, {"scheme", "advt"}});
    CHECK(a.seeds.size() == 5);
    REQUIRE(a.attack);
    CHECK(a.attack->n_perturb == 2);
    const auto r = parse_config({{"dataset", "cora"}, {"seeds.count", 3}, {"seeds.start", 10}});
    CHECK(r.seeds == std::vector<std::uint64_t>{10, 11, 12});
  }
  SUBCASE("dotted keys reach their fields") {
    const auto c = parse_config({{"dataset", "pubmed"},
                                 {"scheme", "mtl"},
                                 {"task", "par"},
                                 {"train.alpha2", 0.3},
                                 {"ssl.K", 12},
                                 {"attack.mode", "links"},
                                 {"attack.n_perturb", 3},
                                 {"seeds", {7}}});
    CHECK(c.scheme == Scheme::MultiTask);
    CHECK(c.task == TaskKind::Partitioning);
    CHECK(c.alpha2_fixed);
    CHECK(c.train.alpha2 == 0.3);
    CHECK(c.ssl_k == 12);
    CHECK(c.attack->mode == AttackMode::Links);
    CHECK(c.attack->n_perturb == 3);
  }
  SUBCASE("invalid configs") {
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"bogus", 1}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"scheme", "mtl"}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"scheme", "plain"}, {"task", "clu"}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"scheme", "advt"}, {"task", "comp"}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"scheme", "nope"}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"train.epochs", "many"}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"train.dropout", 1.5}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"seeds", {1, 1}}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"seeds", {1}}, {"seeds.count", 2}}), Error);
    CHECK_THROWS_AS(parse_config({{"scheme", "plain"}}), Error);
    CHECK_THROWS_AS(parse_config({{"dataset", "cora"}, {"synthetic.nodes", 10}}), Error);
    CHECK_THROWS_AS(parse_config(json::array()), Error);
  }
  SUBCASE("environment overrides the data root") {
    setenv("SSGCN_DATA_DIR", "/data/planetoid", 1);
    const auto c = parse_config({{"dataset", "cora"}, {"data_root", "elsewhere"}});
    unsetenv("SSGCN_DATA_DIR");
    CHECK(c.data_root == fs::path("/data/planetoid"));
    CHECK(parse_config({{"dataset", "cora"}, {"data_root", "d"}}, "/base").data_root == fs::path("/base/d"));
  }
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto m = mean_std(xs);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_std(std::vector<double>{0.7}).std == 0.0);
  CHECK(mean_std(std::vector<double>{}).n == 0);
}

TEST_CASE("identical config and seed give identical records") {
  const auto out = scratch("determinism");
  auto j = small("det", out);
  j["scheme"] = "plain";
  j["seeds"] = {7};
  const auto cfg = parse_config(j);
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.records.size() == 1);
  CHECK(to_json(a.records[0]).dump() == to_json(b.records[0]).dump());
  CHECK(!a.records[0].error);
}

TEST_CASE("parallel seeds merge in seed order with the same records") {
  const auto out = scratch("jobs");
  auto j = small("jobs", out);
  j["scheme"] = "st";
  j["st.stages"] = 1;
  j["seeds"] = {5, 1, 3, 2};
  const auto cfg = parse_config(j);
  const auto serial = run_experiment(cfg, 1);
  const auto parallel = run_experiment(cfg, 3);
  REQUIRE(parallel.records.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(parallel.records[i].seed == cfg.seeds[i]);
    CHECK(to_json(parallel.records[i]).dump() == to_json(serial.records[i]).dump());
  }
}

TEST_CASE("aggregate CSV matches statistics recomputed from the JSONL") {
  const auto out = scratch("recompute");
  auto j = small("agg", out);
  j["scheme"] = "mtl";
  j["task"] = "comp";
  j["seeds.count"] = 4;
  j["ssl.alpha2_grid"] = {0.3, 1.0};
  j["attack.targets"] = 15;
  const auto cfg = parse_config(j);
  const auto rep = run_experiment(cfg, 2);
  write_outputs(cfg, rep);

  std::ifstream in(out / "agg.runs.jsonl");
  std::vector<double> acc, att;
  for (std::string line; std::getline(in, line);) {
    const auto r = json::parse(line);
    CHECK(r.at("dataset") == "synthetic");
    CHECK(r.at("scheme") == "mtl");
    CHECK(r.at("task") == "comp");
    acc.push_back(r.at("accuracy").get<double>());
    att.push_back(r.at("attacked_accuracy").get<double>());
  }
  REQUIRE(acc.size() == 4);
  auto stats = [](const std::vector<double>& v) {
    double s = 0, s2 = 0;
    for (double x : v) {
      s += x;
      s2 += x * x;
    }
    const double n = static_cast<double>(v.size());
    return std::pair{s / n, std::sqrt((s2 - s * s / n) / (n - 1))};
  };
  const auto rows = read_agg_csv(out / "agg.agg.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].runs == 4);
  CHECK(std::abs(rows[0].mean - stats(acc).first) < 1e-9);
  CHECK(std::abs(rows[0].std - stats(acc).second) < 1e-9);
  CHECK(rows[0].attacked_runs == 4);
  CHECK(std::abs(rows[0].attacked_mean - stats(att).first) < 1e-9);
  CHECK(std::abs(rows[0].attacked_std - stats(att).second) < 1e-9);
  CHECK(json::parse(slurp(out / "agg.config.json")) == j);
}

TEST_CASE("hyperparameter selection stays on the grid") {
  const auto out = scratch("select");
  auto j = small("sel", out);
  j["scheme"] = "pf";
  j["task"] = "clu";
  j["seeds"] = {0, 1};
  const auto cfg = parse_config(j);
  const auto ds = load_experiment_dataset(cfg);
  const auto sel = select_hyperparameters(ds, cfg);
  const int c = ds.num_classes;
  CHECK((sel.k == c || sel.k == 2 * c || sel.k == 4 * c));
  j["ssl.K"] = 5;
  CHECK(select_hyperparameters(ds, parse_config(j)).k == 5);
  j["scheme"] = "plain";
  j.erase("task");
  j.erase("ssl.K");
  CHECK(select_hyperparameters(ds, parse_config(j)).k == c);
}

TEST_CASE("per-seed failures are recorded and left out of the aggregate") {
  const auto out = scratch("failure");
  auto j = small("fail", out);
  j["scheme"] = "pf";
  j["task"] = "clu";
  j["ssl.K"] = 100000;  // more clusters than nodes
  j["seeds"] = {0, 1};
  const auto cfg = parse_config(j);
  const auto rep = run_experiment(cfg);
  CHECK(rep.failed == 2);
  CHECK(rep.accuracy.n == 0);
  for (const auto& r : rep.records) {
    REQUIRE(r.error);
    const auto rec = to_json(r);
    CHECK(rec.contains("error"));
    CHECK(!rec.contains("accuracy"));
  }
}

TEST_CASE("report table") {
  AggRow gcn{"g", "pubmed", "plain", "none", 10, 0.791, 0.002, 0, 0, 0};
  AggRow par{"p", "pubmed", "mtl", "par", 10, 0.800, 0.007, 0, 0, 0};
  SUBCASE("single row") {
    const auto t = format_report(std::vector<AggRow>{gcn});
    CHECK(t.find("| GCN") != std::string::npos);
    CHECK(t.find("79.10 ± 0.20") != std::string::npos);
    CHECK(t.find("**") == std::string::npos);
    CHECK(std::count(t.begin(), t.end(), '\n') == 3);
  }
  SUBCASE("the higher mean is flagged") {
    auto t = format_report(std::vector<AggRow>{gcn, par});
    CHECK(t.find("**80.00 ± 0.70**") != std::string::npos);
    CHECK(t.find("_79.10 ± 0.20_") != std::string::npos);
    par.mean = 0.78;
    t = format_report(std::vector<AggRow>{gcn, par});
    CHECK(t.find("**79.10 ± 0.20**") != std::string::npos);
  }
  SUBCASE("attacked columns and missing cells") {
    AggRow advt{"a", "cora", "advt", "none", 5, 0.80, 0.01, 5, 0.39, 0.02};
    const auto t = format_report(std::vector<AggRow>{gcn, advt});
    CHECK(t.find("cora (attacked)") != std::string::npos);
    CHECK(t.find("39.00 ± 2.00") != std::string::npos);
    CHECK(t.find(" - ") != std::string::npos);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(format_report(std::vector<AggRow>{}), Error);
    CHECK_THROWS_AS(format_report(std::vector<AggRow>{gcn, gcn}), Error);
  }
}

TEST_CASE("attack cache replays perturbations") {
  const auto out = scratch("cache");
  auto j = small("cached", out);
  j["scheme"] = "plain";
  j["seeds"] = {0, 1};
  j["attack.targets"] = 20;
  j["attack.cache"] = (out / "cache.json").string();
  const auto cfg = parse_config(j);

  const auto fresh = run_experiment(cfg);  // no cache file yet
  auto cache = build_attack_cache(cfg);
  CHECK(cache["entries"].size() == 2);
  std::ofstream(out / "cache.json") << cache.dump();
  const auto replayed = run_experiment(cfg);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(to_json(fresh.records[i]).dump() == to_json(replayed.records[i]).dump());

  // Emptied perturbations must show up as clean accuracy on the targets.
  for (auto& [key, list] : cache["entries"].items())
    for (auto& p : list) {
      p["edges"] = json::array();
      p["features"] = json::array();
    }
  std::ofstream(out / "cache.json") << cache.dump();
  const auto blank = run_experiment(cfg);
  const auto ds = load_experiment_dataset(cfg);
  for (const auto& r : blank.records) {
    auto c = cfg;
    const auto m = train_scheme(ds, c, r.selection, r.seed);
    const auto targets = attack_targets(ds, cfg, r.seed);
    const GraphInput clean = prepare_input(ds.features, ds.graph, true);
    CHECK(*r.attacked_accuracy == evaluate(m.params, ds, clean, targets));
  }
}

TEST_CASE("checkpoint round trip") {
  const auto out = scratch("checkpoint");
  GcnParams<double> p;
  p.w0 = Eigen::MatrixXd::Random(7, 4);
  p.head = Eigen::MatrixXd::Random(4, 3);
  p.head_ss = Eigen::MatrixXd::Random(4, 5);
  TrainConfig cfg;
  cfg.hidden_dim = 4;
  save_checkpoint(out, p, cfg);
  const auto ck = load_checkpoint(out);
  CHECK(ck.params.w0.isApprox(p.w0, 1e-6));
  CHECK(ck.params.head.isApprox(p.head, 1e-6));
  REQUIRE(ck.params.head_ss);
  CHECK(ck.params.head_ss->isApprox(*p.head_ss, 1e-6));
  CHECK(ck.meta.at("config").at("hidden_dim") == 4);
  CHECK(model_checksum(ck.params) == model_checksum(p));
  auto q = p;
  q.head(0, 0) += 1e-3;
  CHECK(model_checksum(q) != model_checksum(p));
  std::filesystem::resize_file(out / "w0.f32", 8);
  CHECK_THROWS_AS(load_checkpoint(out), Error);
}

#ifdef SSGCN_CLI
TEST_CASE("command line end to end") {
  const auto dir = scratch("cli");
  const std::string cli = SSGCN_CLI;
  REQUIRE(std::system((cli + " synth --out " + (dir / "data" / "toy").string() + " --nodes 500 --seed 2").c_str()) ==
          0);
  json j = small("cli", dir / "out");
  j.erase("synthetic.nodes");
  j.erase("synthetic.val_size");
  j.erase("synthetic.test_size");
  j.erase("synthetic.seed");
  j["dataset"] = "toy";
  j["data_root"] = "data";
  j["output_dir"] = "out";
  j["scheme"] = "plain";
  j["seeds"] = {0, 1};
  std::ofstream(dir / "cfg.json") << j.dump();
  CHECK(std::system((cli + " run --config " + (dir / "cfg.json").string() + " --jobs 2 > /dev/null").c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "cli.runs.jsonl"));
  CHECK(fs::exists(dir / "out" / "cli.agg.csv"));
  CHECK(std::system((cli + " report " + (dir / "out" / "cli.agg.csv").string() + " > " +
                     (dir / "table.md").string())
                        .c_str()) == 0);
  CHECK(slurp(dir / "table.md").find("| GCN") != std::string::npos);

  j["bogus"] = true;
  std::ofstream(dir / "bad.json") << j.dump();
  CHECK(std::system((cli + " run --config " + (dir / "bad.json").string() + " 2> /dev/null").c_str()) != 0);
  CHECK(std::system((cli + " report 2> /dev/null").c_str()) != 0);
}
#endif
