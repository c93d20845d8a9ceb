#include "attrib/models/tree.h"

#include <algorithm>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>

#include "attrib/error.h"
#include "attrib/text.h"
#include "serial.h"

namespace attrib {
namespace {

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double proxy = 0.0;
};

// CART recursion shared by classification (n_classes > 0) and regression.
class Grower {
 public:
  Grower(const Matrix& x, std::span<const double> y, std::size_t n_classes,
         const TreeParams& params, Rng& rng, LeafFn leaf)
      : x_(x), y_(y), n_classes_(n_classes), params_(params), rng_(rng),
        leaf_(std::move(leaf)) {}

  Tree Grow(std::vector<std::size_t> rows) {
    if (rows.empty()) throw Error("cannot grow a tree on zero rows");
    nodes_.clear();
    Build(rows, 0);
    return Tree(std::move(nodes_));
  }

 private:
  bool classification() const { return n_classes_ > 0; }

  int Build(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const auto n = static_cast<int>(rows.size());
    const bool depth_ok = params_.max_depth <= 0 || depth < params_.max_depth;
    std::optional<Candidate> split;
    if (depth_ok && n >= std::max(2, params_.min_samples_split) && !Pure(rows)) {
      split = FindSplit(rows);
    }
    if (!split) {
      nodes_[id].value = LeafValue(rows);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = split->feature;
    nodes_[id].threshold = split->threshold;
    const int l = Build(left, depth + 1);
    const int r = Build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  bool Pure(const std::vector<std::size_t>& rows) const {
    const double first = y_[rows.front()];
    return std::all_of(rows.begin(), rows.end(),
                       [&](std::size_t r) { return y_[r] == first; });
  }

  std::vector<double> LeafValue(const std::vector<std::size_t>& rows) const {
    if (leaf_) return leaf_(rows);
    if (classification()) {
      std::vector<double> dist(n_classes_, 0.0);
      for (std::size_t r : rows) dist[static_cast<std::size_t>(y_[r])] += 1.0;
      for (double& d : dist) d /= static_cast<double>(rows.size());
      return dist;
    }
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    return {sum / static_cast<double>(rows.size())};
  }

  std::vector<int> CandidateFeatures() {
    const int m = static_cast<int>(x_.cols());
    std::vector<int> features(m);
    std::iota(features.begin(), features.end(), 0);
    if (params_.max_features > 0 && params_.max_features < m) {
      for (int i = 0; i < params_.max_features; ++i) {
        const auto j = i + static_cast<int>(rng_.Index(static_cast<std::size_t>(m - i)));
        std::swap(features[i], features[j]);
      }
      features.resize(params_.max_features);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  // The split maximising sum over children of S_child^2 / n_child (regression,
  // S = target sum) or sum_k c_k^2 / n_child (classification, c = class
  // counts); both are equivalent to minimising weighted child impurity.
  std::optional<Candidate> FindSplit(const std::vector<std::size_t>& rows) {
    const std::size_t n = rows.size();
    const int min_leaf = std::max(1, params_.min_samples_leaf);
    const std::size_t k = classification() ? n_classes_ : 1;

    std::vector<double> total(k, 0.0);
    for (std::size_t r : rows) Accumulate(total, r, 1.0);
    const double parent = Score(total, static_cast<double>(n));
    std::optional<Candidate> best;
    double best_proxy = parent;

    std::vector<std::pair<double, std::size_t>> sorted(n);
    std::vector<double> left(k);
    for (int f : CandidateFeatures()) {
      for (std::size_t i = 0; i < n; ++i) sorted[i] = {x_(rows[i], f), rows[i]};
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (sorted.front().first == sorted.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      std::vector<double> right = total;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        Accumulate(left, sorted[i].second, 1.0);
        Accumulate(right, sorted[i].second, -1.0);
        if (sorted[i].first == sorted[i + 1].first) continue;
        const auto n_left = static_cast<double>(i + 1);
        const auto n_right = static_cast<double>(n - i - 1);
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double proxy = Score(left, n_left) + Score(right, n_right);
        const double tolerance = 1e-12 * std::max(1.0, std::abs(best_proxy));
        if (proxy > best_proxy + tolerance) {
          best_proxy = proxy;
          double threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
          if (threshold >= sorted[i + 1].first) threshold = sorted[i].first;
          best = Candidate{f, threshold, proxy};
        }
      }
    }
    return best;
  }

  void Accumulate(std::vector<double>& stats, std::size_t row, double sign) const {
    if (classification()) {
      stats[static_cast<std::size_t>(y_[row])] += sign;
    } else {
      stats[0] += sign * y_[row];
    }
  }

  static double Score(const std::vector<double>& stats, double count) {
    double s = 0.0;
    for (double v : stats) s += v * v;
    return s / count;
  }

  const Matrix& x_;
  std::span<const double> y_;
  std::size_t n_classes_;
  TreeParams params_;
  Rng& rng_;
  LeafFn leaf_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

const std::vector<double>& Tree::Evaluate(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].leaf()) {
      depth[nodes_[i].left] = depth[i] + 1;
      depth[nodes_[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

bool Tree::operator==(const Tree& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = other.nodes_[i];
    if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left ||
        a.right != b.right || a.value != b.value) {
      return false;
    }
  }
  return true;
}

void Tree::Write(std::ostream& out) const {
  out << "tree " << nodes_.size() << '\n';
  for (const auto& node : nodes_) {
    if (node.leaf()) {
      out << "leaf";
      serial::WriteNumbers(out, node.value);
    } else {
      out << "split " << node.feature << ' ' << FormatNumber(node.threshold) << ' '
          << node.left << ' ' << node.right << '\n';
    }
  }
}

Tree Tree::Read(std::istream& in) {
  serial::Expect(in, "tree");
  const std::size_t n = serial::ReadCount(in);
  std::vector<TreeNode> nodes(n);
  for (auto& node : nodes) {
    const std::string kind = serial::ReadToken(in);
    if (kind == "leaf") {
      node.value = serial::ReadNumbers(in);
    } else if (kind == "split") {
      node.feature = static_cast<int>(serial::ReadCount(in));
      node.threshold = serial::ReadNumber(in);
      node.left = static_cast<int>(serial::ReadCount(in));
      node.right = static_cast<int>(serial::ReadCount(in));
      if (node.left >= static_cast<int>(n) || node.right >= static_cast<int>(n)) {
        throw ValidationError("model file: tree child index out of range");
      }
    } else {
      throw ValidationError("model file: unknown tree node '" + kind + "'");
    }
  }
  return Tree(std::move(nodes));
}

Tree GrowClassificationTree(const Matrix& x, std::span<const double> y,
                            std::size_t n_classes, std::vector<std::size_t> rows,
                            const TreeParams& params, Rng& rng) {
  return Grower(x, y, n_classes, params, rng, {}).Grow(std::move(rows));
}

Tree GrowRegressionTree(const Matrix& x, std::span<const double> y,
                        std::vector<std::size_t> rows, const TreeParams& params,
                        Rng& rng, const LeafFn& leaf) {
  return Grower(x, y, 0, params, rng, leaf).Grow(std::move(rows));
}

}  // namespace attrib
