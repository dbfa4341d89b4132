#include "ssgcn/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ssgcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(p, mode);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(p, mode | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::vector<char> read_bytes(const fs::path& p) {
  auto in = open_in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

void check_indices(const std::vector<NodeId>& ids, NodeId n, const char* what) {
  for (NodeId v : ids)
    if (v < 0 || v >= n) throw Error(std::string(what) + " split index out of range");
}

}  // namespace

void validate(const Dataset& ds) {
  const NodeId n = ds.num_nodes();
  if (ds.features.rows() != n) throw Error("feature rows do not match node count");
  if (static_cast<NodeId>(ds.labels.size()) != n) throw Error("label count does not match node count");
  if (ds.num_classes <= 0) throw Error("num_classes must be positive");
  for (int y : ds.labels)
    if (y < 0 || y >= ds.num_classes) throw Error("label out of range");
  check_indices(ds.splits.train, n, "train");
  check_indices(ds.splits.val, n, "val");
  check_indices(ds.splits.test, n, "test");
  std::vector<char> seen(n, 0);
  for (const auto* set : {&ds.splits.train, &ds.splits.val, &ds.splits.test})
    for (NodeId v : *set) {
      if (seen[v]) throw Error("split index sets overlap or repeat");
      seen[v] = 1;
    }
}

Dataset load_dataset(const fs::path& dir) {
  for (const char* f : {"meta.json", "edges.tsv", "features.f32", "labels.u16", "splits.json"})
    if (!fs::exists(dir / f)) throw Error("missing dataset file " + (dir / f).string());

  const json meta = read_json(dir / "meta.json");
  Dataset ds;
  NodeId n = 0;
  int dim = 0;
  try {
    ds.name = meta.at("name").get<std::string>();
    n = meta.at("num_nodes").get<NodeId>();
    dim = meta.at("feature_dim").get<int>();
    ds.num_classes = meta.at("num_classes").get<int>();
  } catch (const json::exception& e) {
    throw Error("meta.json: " + std::string(e.what()));
  }
  if (n < 0 || dim < 0) throw Error("meta.json: negative shape");

  std::vector<Edge> edges;
  {
    auto in = open_in(dir / "edges.tsv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ls(line);
      long long u = 0, v = 0;
      if (!(ls >> u >> v)) throw Error("edges.tsv:" + std::to_string(lineno) + ": malformed line");
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw Error("edges.tsv:" + std::to_string(lineno) + ": node index out of range");
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }
  ds.graph = build_csr(edges, n);

  const auto fbytes = read_bytes(dir / "features.f32");
  const std::size_t expect = static_cast<std::size_t>(n) * dim * sizeof(float);
  if (fbytes.size() != expect)
    throw Error("features.f32 has " + std::to_string(fbytes.size()) + " bytes, expected " +
                std::to_string(expect));
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(n, dim);
  if (expect > 0) std::memcpy(f.data(), fbytes.data(), expect);
  ds.features = f.cast<double>();

  ds.labels = read_labels_u16(dir / "labels.u16");
  if (static_cast<NodeId>(ds.labels.size()) != n)
    throw Error("labels.u16 has " + std::to_string(ds.labels.size()) + " entries, expected " +
                std::to_string(n));

  const json splits = read_json(dir / "splits.json");
  try {
    ds.splits.train = splits.at("train").get<std::vector<NodeId>>();
    ds.splits.val = splits.at("val").get<std::vector<NodeId>>();
    ds.splits.test = splits.at("test").get<std::vector<NodeId>>();
  } catch (const json::exception& e) {
    throw Error("splits.json: " + std::string(e.what()));
  }
  validate(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  validate(ds);
  fs::create_directories(dir);
  {
    json meta = {{"name", ds.name},
                 {"num_nodes", ds.num_nodes()},
                 {"feature_dim", ds.feature_dim()},
                 {"num_classes", ds.num_classes}};
    open_out(dir / "meta.json") << meta.dump() << '\n';
  }
  {
    auto out = open_out(dir / "edges.tsv");
    for (auto [u, v] : ds.graph.edge_list()) out << u << '\t' << v << '\n';
  }
  {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = ds.features.cast<float>();
    auto out = open_out(dir / "features.f32", std::ios::binary);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  }
  write_labels_u16(dir / "labels.u16", ds.labels);
  {
    json splits = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
    open_out(dir / "splits.json") << splits.dump() << '\n';
  }
}

void write_labels_u16(const fs::path& file, std::span<const int> labels) {
  std::vector<std::uint16_t> raw(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 0xFFFF) throw Error("label does not fit in u16");
    raw[i] = static_cast<std::uint16_t>(labels[i]);
  }
  auto out = open_out(file, std::ios::binary);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint16_t)));
}

std::vector<int> read_labels_u16(const fs::path& file) {
  const auto bytes = read_bytes(file);
  if (bytes.size() % 2 != 0) throw Error(file.string() + ": odd byte count");
  std::vector<std::uint16_t> raw(bytes.size() / 2);
  if (!raw.empty()) std::memcpy(raw.data(), bytes.data(), bytes.size());
  return {raw.begin(), raw.end()};
}

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double s = out.row(i).sum();
    if (s != 0.0) out.row(i) /= s;
  }
  return out;
}

SparseFeatures to_sparse(const Eigen::MatrixXd& x) {
  SparseFeatures s = x.sparseView();
  s.makeCompressed();
  return s;
}

std::vector<NodeId> unlabeled_nodes(const Dataset& ds) {
  std::vector<char> labeled(ds.num_nodes(), 0);
  for (NodeId v : ds.splits.train) labeled[v] = 1;
  std::vector<NodeId> out;
  for (NodeId v = 0; v < ds.num_nodes(); ++v)
    if (!labeled[v]) out.push_back(v);
  return out;
}

}  // namespace ssgcn
