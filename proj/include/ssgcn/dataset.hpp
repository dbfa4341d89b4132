#pragma once

#include "ssgcn/graph.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ssgcn {

struct SplitSpec {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  bool operator==(const SplitSpec&) const = default;
};

struct Dataset {
  std::string name;
  SparseGraph graph;
  Eigen::MatrixXd features;  // num_nodes x feature_dim, raw values
  std::vector<int> labels;
  SplitSpec splits;
  int num_classes = 0;

  NodeId num_nodes() const { return graph.num_nodes(); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
};

// Throws Error if shapes, labels or splits are inconsistent.
void validate(const Dataset& ds);

// Directory layout: meta.json, edges.tsv, features.f32, labels.u16, splits.json.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Little-endian u16 label file, the same layout as labels.u16. Used for
// pseudo-label sidecars as well.
void write_labels_u16(const std::filesystem::path& file, std::span<const int> labels);
std::vector<int> read_labels_u16(const std::filesystem::path& file);

// Rows scaled to sum to one; all-zero rows stay zero.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& x);

using SparseFeatures = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
SparseFeatures to_sparse(const Eigen::MatrixXd& x);

// Nodes outside the train split.
std::vector<NodeId> unlabeled_nodes(const Dataset& ds);

}  // namespace ssgcn
