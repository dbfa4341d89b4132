#include <doctest.h>

#include "ssgcn/dataset.hpp"
#include "ssgcn/graph.hpp"
#include "test_util.hpp"

#include <fstream>

using namespace ssgcn;
using ssgcn::testing::TempDir;

TEST_CASE("build_csr on an empty edge list") {
  const auto g = build_csr({}, 3);
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 0);
}

TEST_CASE("build_csr symmetrizes and deduplicates") {
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {0, 1}};
  const auto g = build_csr(edges, 2);
  CHECK(g.num_edges() == 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
}

TEST_CASE("build_csr degrees on a path") {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  const auto g = build_csr(edges, 3);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 2);
  CHECK(g.degree(2) == 1);
}

TEST_CASE("build_csr drops self-loops and rejects bad indices") {
  const std::vector<Edge> loops{{0, 0}, {0, 1}};
  CHECK(build_csr(loops, 2).num_edges() == 1);
  const std::vector<Edge> bad{{0, 3}};
  CHECK_THROWS_AS(build_csr(bad, 3), Error);
  const std::vector<Edge> neg{{-1, 0}};
  CHECK_THROWS_AS(build_csr(neg, 3), Error);
}

TEST_CASE("from_csr rejects asymmetric input") {
  CHECK_THROWS_AS(SparseGraph::from_csr({0, 1, 1}, {1}, {1.0}), Error);
  CHECK_THROWS_AS(SparseGraph::from_csr({0, 1, 2}, {1, 0}, {1.0, 2.0}), Error);
  CHECK_NOTHROW(SparseGraph::from_csr({0, 1, 2}, {1, 0}, {2.0, 2.0}));
}

TEST_CASE("weighted edges sum duplicates") {
  const std::vector<WeightedEdge> e{{0, 1, 1.5}, {1, 0, 2.0}, {1, 2, 1.0}};
  const auto g = SparseGraph::from_weighted_edges(e, 3);
  CHECK(g.edge_weight(0, 1) == doctest::Approx(3.5));
  CHECK(g.edge_weight(1, 0) == doctest::Approx(3.5));
  CHECK(g.total_edge_weight() == doctest::Approx(4.5));
}

TEST_CASE("build_csr is idempotent under re-symmetrization") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = ssgcn::testing::random_graph(12, 0.3, rng);
    const auto once = g.edge_list();
    CHECK(build_csr(once, g.num_nodes()) == g);
    std::vector<Edge> both = once;
    for (auto [u, v] : once) both.emplace_back(v, u);
    CHECK(build_csr(both, g.num_nodes()) == g);
  }
}

TEST_CASE("normalize_adjacency small cases") {
  SUBCASE("isolated node") {
    const auto a = normalize_adjacency(build_csr({}, 1));
    CHECK(Eigen::MatrixXd(a)(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("single edge") {
    const std::vector<Edge> e{{0, 1}};
    const Eigen::MatrixXd a = normalize_adjacency(build_csr(e, 2));
    CHECK(a(0, 0) == doctest::Approx(0.5));
    CHECK(a(0, 1) == doctest::Approx(0.5));
    CHECK(a(1, 0) == doctest::Approx(0.5));
    CHECK(a(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("path 0-1-2") {
    const std::vector<Edge> e{{0, 1}, {1, 2}};
    const Eigen::MatrixXd a = normalize_adjacency(build_csr(e, 3));
    // d~ = [2, 3, 2]
    CHECK(a(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(a(0, 1) == doctest::Approx(0.40825).epsilon(1e-5));
    CHECK(a(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(a(0, 2) == 0.0);
  }
}

TEST_CASE("normalized adjacency matches the dense oracle and its invariants") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const NodeId n = 1 + static_cast<NodeId>(rng.below(10));
    const auto g = ssgcn::testing::random_graph(n, rng.uniform(), rng);
    const Eigen::MatrixXd a = normalize_adjacency(g);
    const Eigen::MatrixXd oracle = ssgcn::testing::dense_normalized(g);
    CHECK(ssgcn::testing::max_rel_diff(a, oracle) < 1e-6);
    CHECK(ssgcn::testing::max_rel_diff(a, a.transpose()) < 1e-6);
    const auto deg = self_loop_degrees(g);
    for (NodeId i = 0; i < n; ++i) CHECK(a(i, i) == doctest::Approx(1.0 / deg[i]).epsilon(1e-12));
  }
}

TEST_CASE("spmm") {
  Rng rng(3);
  SUBCASE("identity") {
    NormalizedAdjacency<double> id(4, 4);
    id.setIdentity();
    const auto m = ssgcn::testing::random_matrix(4, 3, rng);
    CHECK(spmm(id, m) == m);
  }
  SUBCASE("zero right-hand side") {
    const auto a = normalize_adjacency(ssgcn::testing::random_graph(5, 0.5, rng));
    CHECK(spmm(a, Eigen::MatrixXd::Zero(5, 2)).isZero());
  }
  SUBCASE("random against dense matmul") {
    for (int trial = 0; trial < 30; ++trial) {
      const NodeId n = trial < 10 ? 4 : 10;
      const auto g = ssgcn::testing::random_graph(n, 0.4, rng);
      const auto a = normalize_adjacency(g);
      const auto m = ssgcn::testing::random_matrix(n, trial < 10 ? 2 : 5, rng);
      const Eigen::MatrixXd oracle = ssgcn::testing::dense_normalized(g) * m;
      CHECK(ssgcn::testing::max_rel_diff(spmm(a, m), oracle, 1e-9) < 1e-5);
    }
  }
  SUBCASE("shape mismatch") {
    const auto a = normalize_adjacency(build_csr({}, 3));
    CHECK_THROWS_AS(spmm(a, Eigen::MatrixXd::Zero(4, 1)), Error);
  }
}

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.name = "tiny";
  const std::vector<Edge> e{{0, 1}, {1, 2}};
  ds.graph = build_csr(e, 3);
  ds.features.resize(3, 2);
  ds.features << 1, 0, 0.5, 0.25, 0, 1;
  ds.labels = {0, 1, 1};
  ds.num_classes = 2;
  ds.splits = {{0}, {1}, {2}};
  return ds;
}

}  // namespace

TEST_CASE("dataset directory round-trips exactly") {
  TempDir dir("ds_roundtrip");
  const auto ds = tiny_dataset();
  save_dataset(ds, dir.path());
  const auto back = load_dataset(dir.path());
  CHECK(back.name == ds.name);
  CHECK(back.graph == ds.graph);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.splits == ds.splits);
  CHECK(back.num_classes == 2);

  std::ifstream edges(dir.path() / "edges.tsv");
  std::string text((std::istreambuf_iterator<char>(edges)), std::istreambuf_iterator<char>());
  CHECK(text == "0\t1\n1\t2\n");
  CHECK(std::filesystem::file_size(dir.path() / "features.f32") == 3 * 2 * 4);
  CHECK(std::filesystem::file_size(dir.path() / "labels.u16") == 3 * 2);
}

TEST_CASE("empty edges file still loads") {
  TempDir dir("ds_noedges");
  auto ds = tiny_dataset();
  ds.graph = build_csr({}, 3);
  save_dataset(ds, dir.path());
  const auto back = load_dataset(dir.path());
  CHECK(back.graph.num_edges() == 0);
  CHECK(back.num_nodes() == 3);
}

TEST_CASE("loader errors") {
  TempDir dir("ds_errors");
  const auto ds = tiny_dataset();
  SUBCASE("missing file") {
    save_dataset(ds, dir.path());
    std::filesystem::remove(dir.path() / "labels.u16");
    CHECK_THROWS_AS(load_dataset(dir.path()), Error);
  }
  SUBCASE("feature payload does not match meta") {
    save_dataset(ds, dir.path());
    std::ofstream(dir.path() / "meta.json") << R"({"name":"tiny","num_nodes":3,"feature_dim":3,"num_classes":2})";
    CHECK_THROWS_AS(load_dataset(dir.path()), Error);
  }
  SUBCASE("label out of range") {
    save_dataset(ds, dir.path());
    std::ofstream(dir.path() / "meta.json") << R"({"name":"tiny","num_nodes":3,"feature_dim":2,"num_classes":1})";
    CHECK_THROWS_AS(load_dataset(dir.path()), Error);
  }
  SUBCASE("overlapping splits") {
    auto bad = ds;
    bad.splits.val = {0};
    CHECK_THROWS_AS(save_dataset(bad, dir.path()), Error);
  }
}

TEST_CASE("row_normalize keeps zero rows at zero") {
  Eigen::MatrixXd x(2, 3);
  x << 1, 1, 2, 0, 0, 0;
  const auto r = row_normalize(x);
  CHECK(r(0, 2) == doctest::Approx(0.5));
  CHECK(r.row(1).isZero());
}
