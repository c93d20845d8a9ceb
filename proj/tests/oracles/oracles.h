#pragma once

// Independent reference computations used to check the library. Each one
// is written from the textbook definition, deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace attrib::oracle {

// Shapley values by the subset formula
//   phi_i = sum_{S not containing i} |S|!(n-|S|-1)!/n! (v(S+i) - v(S)).
// `value` receives a bit mask of present players.
inline std::vector<double> BruteForceShapley(
    std::size_t n, const std::function<double(std::uint64_t)>& value) {
  std::vector<double> factorial(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);
  std::vector<double> cache(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < cache.size(); ++mask) cache[mask] = value(mask);
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t mask = 0; mask < cache.size(); ++mask) {
      if (mask & (std::uint64_t{1} << i)) continue;
      const auto s = static_cast<std::size_t>(__builtin_popcountll(mask));
      const double w = factorial[s] * factorial[n - s - 1] / factorial[n];
      phi[i] += w * (cache[mask | (std::uint64_t{1} << i)] - cache[mask]);
    }
  }
  return phi;
}

// AUC as the fraction of (positive, negative) pairs ordered correctly,
// ties counted one half. Quadratic on purpose.
inline double PairwiseAuc(std::span<const double> y, std::span<const double> scores) {
  double good = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0.0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) good += 1.0;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

// Calls fn on every permutation of 0..n-1 (lexicographic order).
inline void ForEachPermutation(std::size_t n,
                               const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    fn(p);
  } while (std::next_permutation(p.begin(), p.end()));
}

// Central finite-difference gradient.
inline std::vector<double> FiniteDifference(const std::function<double(std::span<const double>)>& f,
                                            std::span<const double> x, double h) {
  std::vector<double> point(x.begin(), x.end()), grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = point[i];
    point[i] = keep + h;
    const double up = f(point);
    point[i] = keep - h;
    const double down = f(point);
    point[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Best single split by exhaustive search over every feature and midpoint,
// scored by weighted Gini impurity decrease. Returns (feature, threshold).
inline std::pair<std::size_t, double> BestGiniSplit(const std::vector<std::vector<double>>& rows,
                                                    const std::vector<double>& y) {
  auto gini = [](double pos, double n) {
    if (n == 0) return 0.0;
    const double p = pos / n;
    return 1.0 - p * p - (1 - p) * (1 - p);
  };
  const double n = static_cast<double>(y.size());
  double total_pos = 0;
  for (double v : y) total_pos += v;
  double best = -1.0;
  std::pair<std::size_t, double> best_split{0, 0.0};
  for (std::size_t f = 0; f < rows.front().size(); ++f) {
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = 0.5 * (values[k] + values[k + 1]);
      double nl = 0, pl = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][f] <= t) {
          nl += 1;
          pl += y[i];
        }
      }
      const double gain = gini(total_pos, n) - (nl / n) * gini(pl, nl) -
                          ((n - nl) / n) * gini(total_pos - pl, n - nl);
      if (gain > best + 1e-12) {
        best = gain;
        best_split = {f, t};
      }
    }
  }
  return best_split;
}

}  // namespace attrib::oracle
