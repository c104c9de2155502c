#pragma once

// Publication-date-constrained null reading model and the publication-order
// baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "readpath/corpus.hpp"
#include "readpath/error.hpp"
#include "readpath/matrix.hpp"
#include "readpath/parallel.hpp"
#include "readpath/rng.hpp"
#include "readpath/surprise.hpp"

namespace readpath {

// Slot t (reading order) may hold any title published in or before the year
// of slot t's read date.
struct ReadingConstraints {
  std::vector<int> pub_years;  // per document index
  std::vector<int> slot_years; // per reading slot, nondecreasing

  std::size_t size() const noexcept { return pub_years.size(); }

  static ReadingConstraints from_records(std::span<const VolumeRecord> records) {
    ReadingConstraints c;
    for (const auto& r : records) {
      c.pub_years.push_back(r.pub_year);
      c.slot_years.push_back(year_of(r.read_date));
    }
    return c;
  }

  bool allows(std::size_t slot, std::size_t doc) const { return pub_years[doc] <= slot_years[slot]; }

  // Feasible iff every prefix of slots has at least as many eligible titles as
  // slots. Eligible sets are nested because slot years never decrease.
  void check_feasible() const {
    if (pub_years.size() != slot_years.size())
      throw InputError("nullmodel", "publication years and reading slots differ in count");
    for (std::size_t t = 1; t < slot_years.size(); ++t)
      if (slot_years[t] < slot_years[t - 1]) throw InputError("nullmodel", "reading slots are not in date order");
    std::vector<int> sorted = pub_years;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t t = 0; t < slot_years.size(); ++t) {
      const auto eligible = static_cast<std::size_t>(
          std::upper_bound(sorted.begin(), sorted.end(), slot_years[t]) - sorted.begin());
      if (eligible < t + 1)
        throw InputError("nullmodel", "infeasible constraints: reading slot " + std::to_string(t) + " (year " +
                                          std::to_string(slot_years[t]) + ") has only " +
                                          std::to_string(eligible) + " eligible titles for " +
                                          std::to_string(t + 1) + " slots");
    }
  }

  bool satisfied_by(std::span<const std::size_t> perm) const {
    if (perm.size() != size()) return false;
    std::vector<bool> used(size(), false);
    for (std::size_t t = 0; t < perm.size(); ++t) {
      if (perm[t] >= size() || used[perm[t]] || !allows(t, perm[t])) return false;
      used[perm[t]] = true;
    }
    return true;
  }
};

// perm[slot] = document. Slots are filled in ascending order, each by a
// uniform choice among the unused eligible titles. Because eligible sets are
// nested, the number of completions after any choice does not depend on which
// title was chosen, so the result is uniform over all valid permutations.
inline std::vector<std::size_t> sample_constrained_permutation(const ReadingConstraints& constraints, Rng& rng) {
  const std::size_t n = constraints.size();
  std::vector<std::size_t> by_year(n);
  std::iota(by_year.begin(), by_year.end(), std::size_t{0});
  std::stable_sort(by_year.begin(), by_year.end(), [&](std::size_t a, std::size_t b) {
    return constraints.pub_years[a] < constraints.pub_years[b];
  });
  std::vector<std::size_t> perm(n);
  std::vector<std::size_t> pool;
  pool.reserve(n);
  std::size_t next = 0;
  for (std::size_t t = 0; t < n; ++t) {
    while (next < n && constraints.pub_years[by_year[next]] <= constraints.slot_years[t])
      pool.push_back(by_year[next++]);
    if (pool.empty())
      throw InputError("nullmodel", "infeasible constraints at reading slot " + std::to_string(t));
    const auto j = static_cast<std::size_t>(rng.below(pool.size()));
    perm[t] = pool[j];
    pool[j] = pool.back();
    pool.pop_back();
  }
  return perm;
}

struct NullConfig {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::size_t within_year_exact_threshold = 6;
  std::size_t within_year_samples = 100;
  bool keep_orders = true;

  void validate() const {
    if (samples < 1) throw InputError("nullmodel", "samples must be at least 1");
    if (within_year_samples < 1) throw InputError("nullmodel", "within_year_samples must be at least 1");
  }
};

struct NullEnsemble {
  SurpriseKind kind;
  std::size_t samples = 0;
  std::vector<double> observed;          // observed series
  std::vector<double> position_mean;     // per position over samples
  std::vector<double> position_std;      // sample standard deviation
  std::vector<double> sample_aggregates; // mean bits/step of each sample
  double observed_aggregate = 0.0;
  double null_mean = 0.0;
  double null_std = 0.0;
  double percentile_low = 0.0;  // 2.5 %
  double percentile_high = 0.0; // 97.5 %
  // One-sided, add-one smoothed: (#{sample <= observed} + 1) / (M + 1).
  double p_value = 1.0;
  std::vector<std::vector<std::size_t>> orders;
};

namespace detail {

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace detail

// Sample j draws from Rng(config.seed, j), so the ensemble is the same for any
// thread count. `thetas` rows are documents in reading order.
inline NullEnsemble build_null(const Matrix& thetas, const ReadingConstraints& constraints, SurpriseKind kind,
                               const NullConfig& config, unsigned threads = 1) {
  config.validate();
  if (thetas.rows() != constraints.size())
    throw InputError("nullmodel", "topic distributions and constraints differ in document count");
  constraints.check_feasible();

  NullEnsemble ens;
  ens.kind = kind;
  ens.samples = config.samples;
  ens.observed = surprise_series(kind, thetas).values;
  const std::size_t positions = ens.observed.size();

  Matrix sampled(config.samples, positions);
  std::vector<std::vector<std::size_t>> orders(config.samples);
  parallel_for(config.samples, threads, [&](std::size_t j) {
    Rng rng(config.seed, j);
    auto perm = sample_constrained_permutation(constraints, rng);
    if (!constraints.satisfied_by(perm))
      throw InvariantError("nullmodel", "sampled permutation violates the publication constraint");
    const auto series = surprise_series(kind, thetas, perm);
    std::copy(series.values.begin(), series.values.end(), sampled.row(j).begin());
    if (config.keep_orders) orders[j] = std::move(perm);
  });

  ens.position_mean.assign(positions, 0.0);
  ens.position_std.assign(positions, 0.0);
  ens.sample_aggregates.resize(config.samples);
  for (std::size_t j = 0; j < config.samples; ++j) {
    const auto row = sampled.row(j);
    for (std::size_t i = 0; i < positions; ++i) ens.position_mean[i] += row[i];
    ens.sample_aggregates[j] = detail::mean_of(row);
  }
  const double m = static_cast<double>(config.samples);
  for (double& x : ens.position_mean) x /= m;
  if (config.samples > 1) {
    for (std::size_t j = 0; j < config.samples; ++j) {
      const auto row = sampled.row(j);
      for (std::size_t i = 0; i < positions; ++i) {
        const double d = row[i] - ens.position_mean[i];
        ens.position_std[i] += d * d;
      }
    }
    for (double& x : ens.position_std) x = std::sqrt(x / (m - 1.0));
  }

  ens.observed_aggregate = detail::mean_of(ens.observed);
  ens.null_mean = detail::mean_of(ens.sample_aggregates);
  if (config.samples > 1) {
    double ss = 0.0;
    for (double a : ens.sample_aggregates) ss += (a - ens.null_mean) * (a - ens.null_mean);
    ens.null_std = std::sqrt(ss / (m - 1.0));
  }
  ens.percentile_low = detail::quantile(ens.sample_aggregates, 0.025);
  ens.percentile_high = detail::quantile(ens.sample_aggregates, 0.975);
  const auto at_or_below = std::count_if(ens.sample_aggregates.begin(), ens.sample_aggregates.end(),
                                         [&](double a) { return a <= ens.observed_aggregate; });
  ens.p_value = (static_cast<double>(at_or_below) + 1.0) / (m + 1.0);
  ens.orders = std::move(orders);
  return ens;
}

inline NullEnsemble build_null(const Matrix& thetas, std::span<const VolumeRecord> records, SurpriseKind kind,
                               const NullConfig& config, unsigned threads = 1) {
  return build_null(thetas, ReadingConstraints::from_records(records), kind, config, threads);
}

struct PublicationOrderSeries {
  SurpriseSeries series;         // averaged over within-year orders
  std::vector<std::size_t> base; // documents by (pub_year, reading index)
  bool exact = true;             // false when Monte Carlo averaging was used
};

// Publication-order surprise averaged over the orders of titles sharing a
// publication year. With every tie group no larger than the threshold the
// average is exact: each group's permutations are enumerated, and the one
// position that straddles two groups (text-to-text) is averaged over all
// (last of previous group, first of group) pairs, which are independent and
// uniform. Otherwise `within_year_samples` random tie orders are averaged.
inline PublicationOrderSeries publication_order_series(const Matrix& thetas, std::span<const int> pub_years,
                                                       SurpriseKind kind, const NullConfig& config) {
  if (thetas.rows() == 0) throw InputError("nullmodel", "empty corpus");
  if (pub_years.size() != thetas.rows())
    throw InputError("nullmodel", "publication years and topic distributions differ in count");
  if (kind.measure == SurpriseKind::Measure::text_to_n)
    throw InputError("nullmodel", "publication order supports text-to-text and text-to-past only");
  config.validate();

  PublicationOrderSeries out;
  out.base.resize(thetas.rows());
  std::iota(out.base.begin(), out.base.end(), std::size_t{0});
  std::stable_sort(out.base.begin(), out.base.end(),
                   [&](std::size_t a, std::size_t b) { return pub_years[a] < pub_years[b]; });

  std::vector<std::pair<std::size_t, std::size_t>> groups; // [start, end) into base
  for (std::size_t i = 0; i < out.base.size();) {
    std::size_t j = i;
    while (j < out.base.size() && pub_years[out.base[j]] == pub_years[out.base[i]]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  const std::size_t largest =
      std::accumulate(groups.begin(), groups.end(), std::size_t{0},
                      [](std::size_t m, const auto& g) { return std::max(m, g.second - g.first); });

  out.series.kind = kind;
  out.series.ordering = "publication-order";
  const std::size_t n = thetas.rows();
  if (n < 2) throw InputError("nullmodel", "a surprise series needs at least 2 documents");
  std::vector<double> values(n - 1, 0.0);
  const std::size_t k = thetas.cols();

  if (largest <= config.within_year_exact_threshold) {
    out.exact = true;
    std::vector<double> past(k, 0.0);
    std::vector<double> running(k), mean(k);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto [start, end] = groups[g];
      std::vector<std::size_t> members(out.base.begin() + static_cast<std::ptrdiff_t>(start),
                                       out.base.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(members.begin(), members.end());
      std::vector<double> acc(end - start, 0.0);
      std::size_t perms = 0;
      do {
        ++perms;
        if (kind.measure == SurpriseKind::Measure::text_to_text) {
          for (std::size_t r = 1; r < members.size(); ++r)
            acc[r] += kl_divergence(thetas.row(members[r]), thetas.row(members[r - 1]));
        } else {
          running = past;
          for (std::size_t r = 0; r < members.size(); ++r) {
            const std::size_t pos = start + r;
            if (pos >= 1) {
              for (std::size_t t = 0; t < k; ++t) mean[t] = running[t] / static_cast<double>(pos);
              acc[r] += kl_divergence(thetas.row(members[r]), mean);
            }
            const auto row = thetas.row(members[r]);
            for (std::size_t t = 0; t < k; ++t) running[t] += row[t];
          }
        }
      } while (std::next_permutation(members.begin(), members.end()));

      for (std::size_t r = 0; r < members.size(); ++r) {
        const std::size_t pos = start + r;
        if (pos >= 1) values[pos - 1] = acc[r] / static_cast<double>(perms);
      }
      if (kind.measure == SurpriseKind::Measure::text_to_text && g > 0) {
        const auto [pstart, pend] = groups[g - 1];
        double sum = 0.0;
        for (std::size_t a = pstart; a < pend; ++a)
          for (std::size_t b = start; b < end; ++b)
            sum += kl_divergence(thetas.row(out.base[b]), thetas.row(out.base[a]));
        values[start - 1] = sum / static_cast<double>((pend - pstart) * (end - start));
      }
      for (std::size_t i = start; i < end; ++i) {
        const auto row = thetas.row(out.base[i]);
        for (std::size_t t = 0; t < k; ++t) past[t] += row[t];
      }
    }
  } else {
    out.exact = false;
    for (std::size_t s = 0; s < config.within_year_samples; ++s) {
      Rng rng(config.seed, (std::uint64_t{1} << 63) + s);
      auto order = out.base;
      for (const auto& [start, end] : groups)
        shuffle(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end),
                rng);
      const auto series = surprise_series(kind, thetas, order);
      for (std::size_t i = 0; i < values.size(); ++i) values[i] += series.values[i];
    }
    for (double& v : values) v /= static_cast<double>(config.within_year_samples);
  }
  out.series.values = std::move(values);
  return out;
}

inline PublicationOrderSeries publication_order_series(const Matrix& thetas, std::span<const VolumeRecord> records,
                                                       SurpriseKind kind, const NullConfig& config) {
  std::vector<int> years;
  for (const auto& r : records) years.push_back(r.pub_year);
  return publication_order_series(thetas, std::span<const int>(years), kind, config);
}

} // namespace readpath
