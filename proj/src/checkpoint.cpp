#include "ssgcn/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace ssgcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_tensor(const fs::path& file, const Eigen::MatrixXd& m) {
  const RowMajorF f = m.cast<float>();
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
}

Eigen::MatrixXd read_tensor(const fs::path& file, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("missing checkpoint tensor " + file.string());
  RowMajorF f(rows, cols);
  in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(f.size() * sizeof(float)) || in.peek() != EOF)
    throw Error(file.string() + " does not match its recorded shape");
  return f.cast<double>();
}

json shape(const Eigen::MatrixXd& m) { return json::array({m.rows(), m.cols()}); }

void fnv(std::uint64_t& h, const Eigen::MatrixXd& m) {
  const RowMajorF f = m.cast<float>();
  const auto* p = reinterpret_cast<const unsigned char*>(f.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(f.size()) * sizeof(float); ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

json to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay}, {"epochs", c.epochs},
              {"patience", c.patience},           {"hidden_dim", c.hidden_dim},     {"dropout", c.dropout},
              {"alpha1", c.alpha1},               {"alpha2", c.alpha2},             {"alpha3", c.alpha3},
              {"pretrain_epochs", c.pretrain_epochs}, {"normalize_features", c.normalize_features},
              {"seed", c.seed}};
}

void save_checkpoint(const fs::path& dir, const GcnParams<double>& params, const TrainConfig& cfg) {
  fs::create_directories(dir);
  json meta{{"w0", shape(params.w0)}, {"head", shape(params.head)}, {"config", to_json(cfg)}};
  write_tensor(dir / "w0.f32", params.w0);
  write_tensor(dir / "head.f32", params.head);
  if (params.head_ss) {
    meta["head_ss"] = shape(*params.head_ss);
    write_tensor(dir / "head_ss.f32", *params.head_ss);
  }
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw Error("missing " + (dir / "meta.json").string());
  Checkpoint c;
  try {
    c.meta = json::parse(in);
    const auto load = [&](const char* name) {
      const auto& s = c.meta.at(name);
      return read_tensor(dir / (std::string(name) + ".f32"), s.at(0).get<Eigen::Index>(), s.at(1).get<Eigen::Index>());
    };
    c.params.w0 = load("w0");
    c.params.head = load("head");
    if (c.meta.contains("head_ss")) c.params.head_ss = load("head_ss");
  } catch (const json::exception& e) {
    throw Error("bad checkpoint meta: " + std::string(e.what()));
  }
  if (c.params.w0.cols() != c.params.head.rows()) throw Error("checkpoint shapes are inconsistent");
  return c;
}

std::string model_checksum(const GcnParams<double>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv(h, params.w0);
  fnv(h, params.head);
  if (params.head_ss) fnv(h, *params.head_ss);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ssgcn
