#include "argos/models/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "argos/errors.hpp"

namespace argos::models {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& data, std::size_t height_limit, Rng& rng)
      : data_(data), height_limit_(height_limit), rng_(rng) {}

  IsolationTree build(std::vector<Eigen::Index> points) {
    tree_ = {};
    grow(std::move(points), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<Eigen::Index> points, std::uint32_t depth) {
    const auto index = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[index].size = static_cast<std::uint32_t>(points.size());
    tree_.nodes[index].depth = depth;
    if (depth >= height_limit_ || points.size() <= 1) return index;

    std::vector<std::int32_t> varying;
    std::vector<double> lo, hi;
    for (Eigen::Index a = 0; a < data_.rows(); ++a) {
      double mn = data_(a, points[0]);
      double mx = mn;
      for (auto p : points) {
        mn = std::min(mn, data_(a, p));
        mx = std::max(mx, data_(a, p));
      }
      if (mn < mx) {
        varying.push_back(static_cast<std::int32_t>(a));
        lo.push_back(mn);
        hi.push_back(mx);
      }
    }
    if (varying.empty()) return index;

    const std::size_t pick = rng_.index(varying.size());
    const std::int32_t attribute = varying[pick];
    const double split = lo[pick] + rng_.uniform() * (hi[pick] - lo[pick]);

    std::vector<Eigen::Index> left, right;
    for (auto p : points) (data_(attribute, p) < split ? left : right).push_back(p);
    if (left.empty() || right.empty()) return index;

    tree_.nodes[index].attribute = attribute;
    tree_.nodes[index].split = split;
    const std::uint32_t l = grow(std::move(left), depth + 1);
    const std::uint32_t r = grow(std::move(right), depth + 1);
    tree_.nodes[index].left = l;
    tree_.nodes[index].right = r;
    return index;
  }

  const FeatureMatrix& data_;
  std::size_t height_limit_;
  Rng& rng_;
  IsolationTree tree_;
};

}  // namespace

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

double IsolationTree::path_length(std::span<const double> x) const {
  std::uint32_t at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& node = nodes[at];
    at = x[static_cast<std::size_t>(node.attribute)] < node.split ? node.left : node.right;
  }
  return static_cast<double>(nodes[at].depth) + average_path_length(nodes[at].size);
}

std::size_t IsolationTree::height() const {
  std::uint32_t h = 0;
  for (const auto& node : nodes) h = std::max(h, node.depth);
  return h;
}

IsolationForest::IsolationForest(std::vector<IsolationTree> trees, std::size_t subsample_size, std::size_t width)
    : trees_(std::move(trees)), subsample_size_(subsample_size), width_(width) {}

double IsolationForest::mean_path_length(std::span<const double> x) const {
  if (x.size() != width_) throw std::invalid_argument("isolation forest: input width mismatch");
  double total = 0.0;
  for (const auto& tree : trees_) total += tree.path_length(x);
  return total / static_cast<double>(trees_.size());
}

double IsolationForest::score(std::span<const double> x) const {
  const double normalizer = average_path_length(subsample_size_);
  const double mean = mean_path_length(x);
  if (normalizer <= 0.0) return 0.5;
  return std::exp2(-mean / normalizer);
}

IsolationForest train_iforest(const FeatureMatrix& data, std::size_t tree_count, std::size_t subsample_size,
                              std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.cols());
  if (subsample_size == 0 || subsample_size > n) {
    throw DataError("isolation forest: subsample size " + std::to_string(subsample_size) + " exceeds " +
                    std::to_string(n) + " training vectors");
  }
  if (tree_count == 0) throw ConfigError("isolation forest: tree_count must be positive");

  const auto height_limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(subsample_size))));
  Rng rng(seed);
  TreeBuilder builder(data, height_limit, rng);
  std::vector<IsolationTree> trees;
  trees.reserve(tree_count);
  std::vector<Eigen::Index> idx(n);
  for (std::size_t t = 0; t < tree_count; ++t) {
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (std::size_t i = 0; i < subsample_size; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
    trees.push_back(builder.build(std::vector<Eigen::Index>(idx.begin(), idx.begin() + subsample_size)));
  }
  return IsolationForest(std::move(trees), subsample_size, static_cast<std::size_t>(data.rows()));
}

}  // namespace argos::models
