#pragma once

#include "ssgcn/dataset.hpp"

#include <cstdint>

namespace ssgcn {

// Stochastic-block graph with binary bag-of-words features whose words lean
// towards a per-class vocabulary. Splits follow the Planetoid layout: the first
// train_per_class nodes of each class, then val_size and test_size nodes.
struct SyntheticConfig {
  NodeId nodes = 600;
  int classes = 3;
  int feature_dim = 300;
  double avg_degree = 4.0;
  double homophily = 0.8;     // chance an edge stays inside a class
  int words_per_node = 15;
  double topic_share = 0.35;  // chance a word comes from the class vocabulary
  int train_per_class = 20;
  NodeId val_size = 100;
  NodeId test_size = 300;
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticConfig& cfg);

}  // namespace ssgcn
