#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "argos/models/network.hpp"

namespace argos::models {

struct IsolationNode {
  std::int32_t attribute = -1;  // -1 marks a leaf
  double split = 0.0;           // go left iff x[attribute] < split
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t size = 0;  // training points that reached this node
  std::uint32_t depth = 0;

  bool is_leaf() const { return attribute < 0; }
  bool operator==(const IsolationNode&) const = default;
};

// Nodes in pre-order; index 0 is the root.
struct IsolationTree {
  std::vector<IsolationNode> nodes;

  double path_length(std::span<const double> x) const;
  std::size_t height() const;
  bool operator==(const IsolationTree&) const = default;
};

// Expected path length of an unsuccessful BST search over n points:
// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(1) = 0 and c(2) = 1.
double average_path_length(std::size_t n);

class IsolationForest {
 public:
  IsolationForest() = default;
  IsolationForest(std::vector<IsolationTree> trees, std::size_t subsample_size, std::size_t width);

  std::size_t tree_count() const { return trees_.size(); }
  std::size_t subsample_size() const { return subsample_size_; }
  std::size_t input_width() const { return width_; }
  const std::vector<IsolationTree>& trees() const { return trees_; }

  double mean_path_length(std::span<const double> x) const;
  // s(x) = 2^(-E[h(x)] / c(subsample_size)), in (0, 1).
  double score(std::span<const double> x) const;

  bool operator==(const IsolationForest&) const = default;

 private:
  std::vector<IsolationTree> trees_;
  std::size_t subsample_size_ = 0;
  std::size_t width_ = 0;
};

// Construction protocol, fixed so that an independent implementation seeded
// the same way reproduces every tree:
//   rng = Rng(seed); per tree, in order:
//   1. subsample: idx = [0..N); for i < psi: swap(idx[i], idx[i + rng.index(N - i)]);
//      the tree is built on idx[0..psi).
//   2. node(points, depth): leaf if depth >= ceil(log2 psi) or |points| <= 1 or
//      no attribute varies. Otherwise attribute = varying[rng.index(|varying|)]
//      (varying attributes in ascending order), split = min + rng.uniform() * (max - min);
//      left = points with x < split. An empty side makes the node a leaf.
//      Children are built left first.
// Throws DataError if subsample_size is 0 or exceeds the number of columns.
IsolationForest train_iforest(const FeatureMatrix& data, std::size_t tree_count, std::size_t subsample_size,
                              std::uint64_t seed);

}  // namespace argos::models
