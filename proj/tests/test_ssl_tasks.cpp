#include <doctest.h>

#include "ssgcn/ssl_tasks.hpp"
#include "test_util.hpp"

#include <numeric>
#include <set>

using namespace ssgcn;
using ssgcn::testing::random_matrix;
using ssgcn::testing::TempDir;

namespace {

// Plain Lloyd with direct distances; assumes no cluster empties.
std::pair<std::vector<int>, Eigen::MatrixXd> naive_lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd c, int iters) {
  std::vector<int> lab(static_cast<std::size_t>(x.rows()), -1);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int best = 0;
      for (Eigen::Index k = 1; k < c.rows(); ++k)
        if ((x.row(i) - c.row(k)).squaredNorm() < (x.row(i) - c.row(best)).squaredNorm()) best = static_cast<int>(k);
      changed |= lab[i] != best;
      lab[i] = best;
    }
    if (!changed) break;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(c.rows(), c.cols());
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(c.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      s.row(lab[i]) += x.row(i);
      cnt(lab[i]) += 1;
    }
    for (Eigen::Index k = 0; k < c.rows(); ++k) c.row(k) = s.row(k) / cnt(k);
  }
  return {lab, c};
}

void check_labeling(std::span<const int> labels, std::size_t n, int k) {
  REQUIRE(labels.size() == n);
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (int l : labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < k);
    ++count[l];
  }
  for (int c : count) CHECK(c > 0);
}

// Exhaustive minimum edgecut over balanced 2-way labelings.
double brute_force_min_cut(const SparseGraph& g, long cap) {
  const NodeId n = g.num_nodes();
  double best = 1e300;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> lab(static_cast<std::size_t>(n));
    long ones = 0;
    for (NodeId v = 0; v < n; ++v) ones += lab[v] = (mask >> v) & 1u;
    if (ones == 0 || ones == n || ones > cap || n - ones > cap) continue;
    best = std::min(best, edgecut(g, lab));
  }
  return best;
}

SparseGraph two_triangles() {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}};
  return build_csr(e, 6);
}

}  // namespace

TEST_CASE("kmeans with K=1 puts everything in one cluster at the mean") {
  Rng rng(1);
  const auto x = random_matrix(15, 4, rng);
  const auto r = kmeans(x, 1, 3);
  for (int l : r.labels) CHECK(l == 0);
  CHECK((r.centers.row(0) - x.colwise().mean()).norm() < 1e-12);
}

TEST_CASE("kmeans separates two distant clouds") {
  Rng rng(2);
  Eigen::MatrixXd x = random_matrix(20, 3, rng, 0.1);
  x.bottomRows(10).array() += 10.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = kmeans(x, 2, seed);
    for (int i = 1; i < 10; ++i) CHECK(r.labels[i] == r.labels[0]);
    for (int i = 11; i < 20; ++i) CHECK(r.labels[i] == r.labels[10]);
    CHECK(r.labels[0] != r.labels[10]);
  }
}

TEST_CASE("lloyd agrees with a naive implementation") {
  Rng rng(3);
  Eigen::MatrixXd x = random_matrix(20, 2, rng);
  x.topRows(7).array() += 3.0;
  x.middleRows(7, 6).col(0).array() -= 3.0;
  const auto init = kmeans_pp_init(x, 3, 11);
  const auto r = lloyd(x, init, 100);
  const auto [lab, centers] = naive_lloyd(x, init, 100);
  REQUIRE(r.reseeds == 0);
  CHECK(r.labels == lab);
  CHECK((r.centers - centers).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kmeans objective is monotone and labels form a partition") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_matrix(60, 5, rng);
    const int k = 2 + trial % 6;
    const auto r = kmeans(x, k, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
      CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9);
    check_labeling(r.labels, 60, k);
  }
}

TEST_CASE("kmeans handles duplicate points and reseeds empty clusters") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 2);
  x.row(5) << 1.0, 1.0;
  const auto r = kmeans(x, 3, 1);
  check_labeling(r.labels, 6, 3);
  CHECK_THROWS_AS(kmeans(x, 7, 1), Error);
  CHECK_THROWS_AS(kmeans(x, 0, 1), Error);
}

TEST_CASE("node_clustering task shape") {
  Rng rng(5);
  const auto x = random_matrix(30, 4, rng);
  const auto t = node_clustering(x, 4, 9);
  CHECK(t.kind == TaskKind::Clustering);
  CHECK(t.loss_kind == LossKind::CrossEntropy);
  CHECK(t.output_dim == 4);
  CHECK(t.nodes.size() == 30);
  CHECK_FALSE(t.features.has_value());
  CHECK(node_clustering(x, 4, 9).labels == t.labels);
}

TEST_CASE("edgecut and balance") {
  const std::vector<Edge> cyc{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  const auto g = build_csr(cyc, 4);
  const std::vector<int> lab{0, 0, 1, 1};
  CHECK(edgecut(g, lab) == 2.0);
  const std::vector<int> same{0, 0, 0, 0};
  CHECK(edgecut(g, same) == 0.0);
  CHECK(balance_factor(lab, 2) == doctest::Approx(1.0));
  const std::vector<int> skew{0, 0, 0, 1};
  CHECK(balance_factor(skew, 2) == doctest::Approx(1.5));
}

TEST_CASE("max_part_weight") {
  CHECK(max_part_weight(100, 4, 0.05) == 26);
  CHECK(max_part_weight(6, 2, 0.2) == 3);
  CHECK_THROWS_AS(max_part_weight(3, 4, 0.05), Error);
  CHECK_THROWS_AS(max_part_weight(10, 2, 0.0), Error);
}

TEST_CASE("partition trivial K") {
  Rng rng(6);
  const auto g = ssgcn::testing::random_graph(12, 0.3, rng);
  SUBCASE("K=1") {
    const auto lab = multilevel_partition(g, {1, 0.05, 8, 1});
    for (int l : lab) CHECK(l == 0);
  }
  SUBCASE("K=|V|") {
    const auto lab = multilevel_partition(g, {12, 0.5, 8, 1});
    std::set<int> s(lab.begin(), lab.end());
    CHECK(s.size() == 12);
  }
}

TEST_CASE("partition finds the bridge between two triangles") {
  const auto g = two_triangles();
  const long cap = max_part_weight(6, 2, 0.2);
  CHECK(brute_force_min_cut(g, cap) == 1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto lab = multilevel_partition(g, {2, 0.2, 8, seed});
    CHECK(edgecut(g, lab) == 1.0);
  }
}

TEST_CASE("partition matches exhaustive search on small random graphs") {
  Rng rng(13);
  int optimal = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto g = ssgcn::testing::random_graph(12, 0.3, rng);
    const long cap = max_part_weight(12, 2, 0.2);
    const auto lab = multilevel_partition(g, {2, 0.2, 8, static_cast<std::uint64_t>(t)});
    check_labeling(lab, 12, 2);
    const double opt = brute_force_min_cut(g, cap);
    CHECK(edgecut(g, lab) >= opt);
    optimal += edgecut(g, lab) == opt;
  }
  // A heuristic; it should be optimal on most tiny instances.
  CHECK(optimal >= trials * 3 / 4);
}

TEST_CASE("partition respects balance and beats random balanced labelings") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    // Planted communities so there is structure to find.
    const NodeId n = 400;
    const int k = 4;
    std::vector<Edge> edges;
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j) {
        const double p = (i % k == j % k) ? 0.04 : 0.004;
        if (rng.uniform() < p) edges.emplace_back(i, j);
      }
    const auto g = build_csr(edges, n);
    PartitionStats stats;
    const PartitionConfig cfg{k, 0.05, 8, static_cast<std::uint64_t>(trial)};
    const auto lab = multilevel_partition(g, cfg, &stats);
    check_labeling(lab, n, k);
    CHECK(balance_factor(lab, k) <= 1.05 + 1e-12);
    CHECK(stats.refinement.balance_violations == 0);
    for (std::size_t p = 0; p < stats.refinement.cut_after.size(); ++p)
      CHECK(stats.refinement.cut_after[p] <= stats.refinement.cut_before[p]);

    const double cut = edgecut(g, lab);
    std::vector<int> rnd(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) rnd[v] = v % k;
    for (int r = 0; r < 20; ++r) {
      rng.shuffle(rnd);
      CHECK(cut < edgecut(g, rnd));
    }
    // Determinism.
    CHECK(multilevel_partition(g, cfg) == lab);
  }
}

TEST_CASE("refine_fm never worsens the cut or the balance") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = ssgcn::testing::random_graph(60, 0.1, rng);
    std::vector<int> lab(60);
    for (int v = 0; v < 60; ++v) lab[v] = v % 3;
    rng.shuffle(lab);
    const double before = edgecut(g, lab);
    const std::vector<long> w(60, 1);
    const long cap = max_part_weight(60, 3, 0.1);
    RefinementStats stats;
    refine_fm(g, w, lab, 3, cap, 8, static_cast<std::uint64_t>(trial), &stats);
    CHECK(edgecut(g, lab) <= before);
    CHECK(stats.balance_violations == 0);
    std::vector<long> size(3, 0);
    for (int l : lab) ++size[l];
    for (long s : size) {
      CHECK(s <= cap);
      CHECK(s > 0);
    }
  }
}

TEST_CASE("graph_partition task shape and infeasible balance") {
  const auto g = two_triangles();
  const auto t = graph_partition(g, {2, 0.2, 8, 1});
  CHECK(t.kind == TaskKind::Partitioning);
  CHECK(t.output_dim == 2);
  CHECK(t.nodes.size() == 6);
  CHECK_THROWS_AS(multilevel_partition(g, {7, 0.05, 8, 1}), Error);
}

TEST_CASE("graph_completion") {
  Rng rng(9);
  const auto x = random_matrix(40, 6, rng);
  const auto t = graph_completion(x, 0.25, 5);
  CHECK(t.kind == TaskKind::Completion);
  CHECK(t.loss_kind == LossKind::MeanSquaredError);
  CHECK(t.nodes.size() == 10);
  CHECK(std::is_sorted(t.nodes.begin(), t.nodes.end()));
  CHECK(t.output_dim == 6);
  REQUIRE(t.features.has_value());
  std::set<NodeId> masked(t.nodes.begin(), t.nodes.end());
  for (NodeId v = 0; v < 40; ++v) {
    if (masked.count(v))
      CHECK(t.features->row(v).isZero());
    else
      CHECK(t.features->row(v) == x.row(v));
  }
  CHECK(restore_masked(t) == x);
  CHECK(graph_completion(x, 0.25, 5).nodes == t.nodes);
  CHECK(graph_completion(x, 0.25, 6).nodes != t.nodes);
  CHECK(graph_completion(x, 0.01, 5).nodes.size() == 1);
  CHECK(graph_completion(x, 1.0, 5).nodes.size() == 40);
  CHECK_THROWS_AS(graph_completion(x, 0.0, 5), Error);
  CHECK_THROWS_AS(graph_completion(x, 1.5, 5), Error);
}

TEST_CASE("pseudo-labels export in labels.u16 layout") {
  TempDir dir("pseudo");
  Rng rng(10);
  const auto t = node_clustering(random_matrix(12, 3, rng), 3, 1);
  export_pseudo_labels(t, dir.path() / "pl.u16");
  CHECK(read_labels_u16(dir.path() / "pl.u16") == t.labels);
  CHECK_THROWS_AS(export_pseudo_labels(graph_completion(random_matrix(4, 2, rng), 0.5, 1), dir.path() / "x"),
                  Error);
}
