#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "attrib/matrix.h"
#include "attrib/rng.h"

namespace attrib {

// Binary tree node. Internal nodes send x[feature] <= threshold left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaf payload: class distribution, regression value or boosting score.
  std::vector<double> value;

  bool leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<double>& Evaluate(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

  void Write(std::ostream& out) const;
  static Tree Read(std::istream& in);

  bool operator==(const Tree& other) const;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 = all features
};

// Computes a leaf payload from the rows reaching it.
using LeafFn = std::function<std::vector<double>(std::span<const std::size_t> rows)>;

// CART growth by exhaustive search over midpoints between consecutive
// distinct values. Candidates are scanned by ascending feature then
// ascending threshold and only a strictly better split replaces the
// current best, so ties resolve to the lowest feature and threshold.
// `rows` may repeat indices (bootstrap samples).
Tree GrowClassificationTree(const Matrix& x, std::span<const double> y,
                            std::size_t n_classes, std::vector<std::size_t> rows,
                            const TreeParams& params, Rng& rng);

// Variance-reduction tree. Leaves hold the mean target unless `leaf` is set.
Tree GrowRegressionTree(const Matrix& x, std::span<const double> y,
                        std::vector<std::size_t> rows, const TreeParams& params,
                        Rng& rng, const LeafFn& leaf = {});

}  // namespace attrib
