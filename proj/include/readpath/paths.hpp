#pragma once

// Greedy minimum-surprise traversals and rank statistics of consecutive
// choices over the divergence matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "readpath/error.hpp"
#include "readpath/matrix.hpp"
#include "readpath/parallel.hpp"
#include "readpath/surprise.hpp"

namespace readpath {

// entry(i, j) = KL(theta_j || theta_i): the surprise of reading j right after i.
class DivergenceMatrix {
public:
  DivergenceMatrix() = default;

  explicit DivergenceMatrix(Matrix values) : m_(std::move(values)) {
    if (m_.rows() != m_.cols()) throw InputError("paths", "divergence matrix must be square");
    for (std::size_t i = 0; i < m_.rows(); ++i) {
      if (m_(i, i) != 0.0) throw InputError("paths", "divergence matrix diagonal must be 0");
      for (double x : m_.row(i))
        if (!(x >= 0.0)) throw InputError("paths", "divergences must be nonnegative");
    }
  }

  static DivergenceMatrix from_thetas(const Matrix& thetas, unsigned threads = 1) {
    const std::size_t n = thetas.rows();
    Matrix m(n, n);
    parallel_for(n, threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) m(i, j) = kl_divergence(thetas.row(j), thetas.row(i));
    });
    DivergenceMatrix out;
    out.m_ = std::move(m);
    return out;
  }

  std::size_t size() const noexcept { return m_.rows(); }
  double operator()(std::size_t from, std::size_t to) const noexcept { return m_(from, to); }
  const Matrix& values() const noexcept { return m_; }

private:
  Matrix m_;
};

struct GreedyPath {
  std::vector<std::size_t> order;
  std::vector<double> step_bits; // step_bits[s] is the cost of moving to order[s + 1]

  double mean_bits() const {
    if (step_bits.empty()) return 0.0;
    return std::accumulate(step_bits.begin(), step_bits.end(), 0.0) / static_cast<double>(step_bits.size());
  }
};

// Nearest unvisited successor at every step; equal divergences go to the
// lowest index.
inline GreedyPath greedy_t2t_path(const DivergenceMatrix& matrix, std::size_t start = 0) {
  const std::size_t n = matrix.size();
  if (n == 0) throw InputError("paths", "empty divergence matrix");
  if (start >= n) throw InputError("paths", "start index out of range");
  GreedyPath path;
  std::vector<bool> visited(n, false);
  path.order.push_back(start);
  visited[start] = true;
  std::size_t current = start;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t best = n;
    double best_bits = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (visited[j]) continue;
      if (best == n || matrix(current, j) < best_bits) {
        best = j;
        best_bits = matrix(current, j);
      }
    }
    visited[best] = true;
    path.order.push_back(best);
    path.step_bits.push_back(best_bits);
    current = best;
  }
  return path;
}

// Next document minimizes KL from itself to the running mean of the visited
// documents.
inline GreedyPath greedy_t2p_path(const Matrix& thetas, std::size_t start = 0) {
  const std::size_t n = thetas.rows();
  const std::size_t k = thetas.cols();
  if (n == 0) throw InputError("paths", "no topic distributions");
  if (start >= n) throw InputError("paths", "start index out of range");
  GreedyPath path;
  std::vector<bool> visited(n, false);
  std::vector<double> sum(thetas.row(start).begin(), thetas.row(start).end());
  std::vector<double> mean(k);
  path.order.push_back(start);
  visited[start] = true;
  for (std::size_t step = 1; step < n; ++step) {
    for (std::size_t t = 0; t < k; ++t) mean[t] = sum[t] / static_cast<double>(step);
    std::size_t best = n;
    double best_bits = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (visited[j]) continue;
      const double bits = kl_divergence(thetas.row(j), mean);
      if (best == n || bits < best_bits) {
        best = j;
        best_bits = bits;
      }
    }
    visited[best] = true;
    path.order.push_back(best);
    path.step_bits.push_back(best_bits);
    const auto row = thetas.row(best);
    for (std::size_t t = 0; t < k; ++t) sum[t] += row[t];
  }
  return path;
}

struct RankBin {
  std::size_t low = 1;  // inclusive
  std::size_t high = 1; // inclusive
  std::size_t observed = 0;
  std::size_t null = 0;
  double observed_fraction = 0.0;
  double null_fraction = 0.0;
  double ratio = 0.0; // observed_fraction / null_fraction (0 if the null bin is empty)
  // 95 % band of the ratio for `observed total` steps drawn from the null
  // bin probability (normal approximation to the binomial).
  double band_low = 0.0;
  double band_high = 0.0;
};

struct RankDistribution {
  std::vector<std::size_t> observed_ranks;
  std::vector<RankBin> bins; // bin b covers ranks [2^b, 2^(b+1) - 1]
};

// Competition rank (1 = nearest) of the divergence from `from` to `to` among
// all other documents.
inline std::size_t successor_rank(const DivergenceMatrix& m, std::size_t from, std::size_t to) {
  const double target = m(from, to);
  std::size_t closer = 0;
  for (std::size_t j = 0; j < m.size(); ++j)
    if (j != from && m(from, j) < target) ++closer;
  return closer + 1;
}

inline std::vector<std::size_t> order_ranks(const DivergenceMatrix& m, std::span<const std::size_t> order) {
  const std::size_t n = m.size();
  if (order.size() != n) throw InputError("paths", "order is not a permutation of the documents");
  std::vector<bool> seen(n, false);
  for (auto i : order) {
    if (i >= n || seen[i]) throw InputError("paths", "order is not a permutation of the documents");
    seen[i] = true;
  }
  std::vector<std::size_t> ranks;
  for (std::size_t s = 1; s < order.size(); ++s) ranks.push_back(successor_rank(m, order[s - 1], order[s]));
  return ranks;
}

inline RankDistribution rank_distribution(const DivergenceMatrix& matrix, std::span<const std::size_t> observed,
                                          const std::vector<std::vector<std::size_t>>& null_orders) {
  const std::size_t n = matrix.size();
  if (n < 2) throw InputError("paths", "rank distribution needs at least 2 documents");
  RankDistribution out;
  out.observed_ranks = order_ranks(matrix, observed);

  const std::size_t max_rank = n - 1;
  std::size_t bin_count = 0;
  while ((std::size_t{1} << bin_count) <= max_rank) ++bin_count;
  out.bins.resize(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b) {
    out.bins[b].low = std::size_t{1} << b;
    out.bins[b].high = std::min(max_rank, (std::size_t{1} << (b + 1)) - 1);
  }
  auto bin_of = [](std::size_t rank) {
    std::size_t b = 0;
    while ((std::size_t{2} << b) <= rank) ++b;
    return b;
  };
  for (auto r : out.observed_ranks) ++out.bins[bin_of(r)].observed;
  std::size_t null_total = 0;
  for (const auto& order : null_orders) {
    for (auto r : order_ranks(matrix, order)) {
      ++out.bins[bin_of(r)].null;
      ++null_total;
    }
  }
  const double obs_total = static_cast<double>(out.observed_ranks.size());
  for (auto& bin : out.bins) {
    bin.observed_fraction = static_cast<double>(bin.observed) / obs_total;
    bin.null_fraction = null_total ? static_cast<double>(bin.null) / static_cast<double>(null_total) : 0.0;
    if (bin.null_fraction > 0.0) {
      bin.ratio = bin.observed_fraction / bin.null_fraction;
      const double p = bin.null_fraction;
      const double half = 1.96 * std::sqrt((1.0 - p) / (obs_total * p));
      bin.band_low = std::max(0.0, 1.0 - half);
      bin.band_high = 1.0 + half;
    }
  }
  return out;
}

} // namespace readpath
