#pragma once

// Maximum-likelihood segmentation of a surprise series into Gaussian epochs,
// with the number of epochs chosen by AIC.
//
// An epoch [a, b) with m = b - a points, sample mean mu and mean squared
// deviation var contributes -(m / 2) (1 + ln(2 pi max(var, floor))) to the
// log-likelihood. The prior constant is dropped; every use is a comparison.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "readpath/corpus.hpp"
#include "readpath/dates.hpp"
#include "readpath/error.hpp"
#include "readpath/surprise.hpp"

namespace readpath {

// Minimum epoch length, as a point count and optionally as a calendar span.
// With `years` set, an epoch starting at a must reach a point dated at least
// `years` after the date of a (dates aligned with the series are required).
struct MinLength {
  std::size_t points = 2;
  std::optional<int> years;
};

struct EpochSearchConfig {
  std::size_t n_max = 3;
  MinLength min_length{2, 5};
  double variance_floor = 1e-12;
  // Normalize mean, variance and the likelihood prefactor by (m - 1) instead
  // of m, as in one printed form of the estimator. Off by default.
  bool literal_normalization = false;

  void validate() const {
    if (n_max < 1) throw InputError("epochs", "n_max must be at least 1");
    if (min_length.points < 2) throw InputError("epochs", "minimum epoch length must be at least 2 points");
    if (min_length.years && *min_length.years < 1) throw InputError("epochs", "minimum epoch length in years must be positive");
    if (!(variance_floor > 0.0)) throw InputError("epochs", "variance floor must be positive");
  }
};

struct Segment {
  std::size_t start = 0;
  std::size_t end = 0; // exclusive
  double mean = 0.0;
  double variance = 0.0;
  double log_likelihood = 0.0;
};

struct EpochModel {
  std::vector<std::size_t> breaks; // segment starts; breaks[0] == 0
  std::vector<Segment> segments;
  double log_likelihood = 0.0;
  double aic = 0.0;

  std::size_t n() const noexcept { return breaks.size(); }
  std::size_t parameter_count() const noexcept { return 3 * n() - 1; }
};

inline std::size_t epoch_parameter_count(std::size_t n) { return 3 * n - 1; }

inline double aic_value(std::size_t n, double log_likelihood) {
  return 2.0 * static_cast<double>(epoch_parameter_count(n)) - 2.0 * log_likelihood;
}

namespace detail {

// Welford running moments. Every segment score is produced by pushing the
// segment's points in order from its start, so a score computed inside the
// search and one computed for a given break vector agree bit for bit.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
};

inline Segment score(const Moments& mom, std::size_t start, const EpochSearchConfig& config) {
  Segment s;
  s.start = start;
  s.end = start + mom.count;
  const double m = static_cast<double>(mom.count);
  if (config.literal_normalization) {
    const double mu = mom.mean * m / (m - 1.0);
    const double var = (mom.m2 + m * (mom.mean - mu) * (mom.mean - mu)) / (m - 1.0);
    s.mean = mu;
    s.variance = var;
    s.log_likelihood =
        -((m - 1.0) / 2.0) * (1.0 + std::log(2.0 * std::numbers::pi * std::max(var, config.variance_floor)));
  } else {
    s.mean = mom.mean;
    s.variance = mom.m2 / m;
    s.log_likelihood =
        -(m / 2.0) * (1.0 + std::log(2.0 * std::numbers::pi * std::max(s.variance, config.variance_floor)));
  }
  return s;
}

inline Segment segment(std::span<const double> series, std::size_t a, std::size_t b, const EpochSearchConfig& config) {
  Moments mom;
  for (std::size_t i = a; i < b; ++i) mom.push(series[i]);
  return score(mom, a, config);
}

constexpr std::size_t unreachable = std::numeric_limits<std::size_t>::max();
constexpr double minus_inf = -std::numeric_limits<double>::infinity();

// Minimum length of an epoch starting at each index (unreachable if none).
inline std::vector<std::size_t> min_lengths(std::size_t length, const EpochSearchConfig& config,
                                            std::span<const Date> dates) {
  const std::size_t base = std::max<std::size_t>(2, config.min_length.points);
  std::vector<std::size_t> out(length, base);
  if (!config.min_length.years) {
    for (std::size_t a = 0; a < length; ++a)
      if (a + base > length) out[a] = unreachable;
    return out;
  }
  if (dates.size() != length)
    throw InputError("epochs", "a calendar minimum epoch length needs one date per series point");
  std::size_t end = 0; // last index of the minimal span, monotone in a
  for (std::size_t a = 0; a < length; ++a) {
    const auto target = std::chrono::sys_days{add_years(dates[a], *config.min_length.years)};
    end = std::max(end, a + base - 1);
    while (end < length && std::chrono::sys_days{dates[end]} < target) ++end;
    out[a] = end < length ? end - a + 1 : unreachable;
  }
  return out;
}

inline bool fits(const std::vector<std::size_t>& minlen, std::size_t a, std::size_t b) {
  return minlen[a] != unreachable && b - a >= minlen[a];
}

} // namespace detail

// Log-likelihood of a given segmentation.
inline double segment_loglik(std::span<const double> series, std::span<const std::size_t> breaks,
                             const EpochSearchConfig& config = {}) {
  if (series.empty()) throw InputError("epochs", "empty series");
  validate_breaks(breaks, series.size(), "epochs");
  double total = 0.0;
  for (std::size_t s = 0; s < breaks.size(); ++s) {
    const std::size_t end = s + 1 < breaks.size() ? breaks[s + 1] : series.size();
    if (end - breaks[s] < 2) throw InputError("epochs", "every epoch needs at least 2 points");
    total += detail::segment(series, breaks[s], end, config).log_likelihood;
  }
  return total;
}

inline EpochModel make_epoch_model(std::span<const double> series, std::vector<std::size_t> breaks,
                                   const EpochSearchConfig& config) {
  EpochModel model;
  model.log_likelihood = segment_loglik(series, breaks, config);
  for (std::size_t s = 0; s < breaks.size(); ++s) {
    const std::size_t end = s + 1 < breaks.size() ? breaks[s + 1] : series.size();
    model.segments.push_back(detail::segment(series, breaks[s], end, config));
  }
  model.breaks = std::move(breaks);
  model.aic = aic_value(model.n(), model.log_likelihood);
  return model;
}

namespace detail {

inline std::vector<std::size_t> search_direct(std::span<const double> x, std::size_t n,
                                              const std::vector<std::size_t>& minlen, const EpochSearchConfig& config) {
  const std::size_t len = x.size();
  // head[e] = score of [0, e); tail[e] = score of [e, len).
  std::vector<double> head(len + 1, minus_inf), tail(len + 1, minus_inf);
  {
    Moments mom;
    for (std::size_t e = 1; e <= len; ++e) {
      mom.push(x[e - 1]);
      if (fits(minlen, 0, e)) head[e] = score(mom, 0, config).log_likelihood;
    }
  }
  for (std::size_t e = 1; e < len; ++e)
    if (fits(minlen, e, len)) tail[e] = segment(x, e, len, config).log_likelihood;

  std::vector<std::size_t> best;
  double best_ll = minus_inf;
  if (n == 2) {
    for (std::size_t e = 1; e < len; ++e) {
      if (head[e] == minus_inf || tail[e] == minus_inf) continue;
      const double ll = head[e] + tail[e];
      if (best.empty() || ll > best_ll) {
        best = {0, e};
        best_ll = ll;
      }
    }
    return best;
  }
  for (std::size_t e2 = 1; e2 < len; ++e2) {
    if (head[e2] == minus_inf) continue;
    Moments mom;
    for (std::size_t e3 = e2 + 1; e3 < len; ++e3) {
      mom.push(x[e3 - 1]);
      if (tail[e3] == minus_inf || !fits(minlen, e2, e3)) continue;
      const double ll = head[e2] + score(mom, e2, config).log_likelihood + tail[e3];
      if (best.empty() || ll > best_ll) {
        best = {0, e2, e3};
        best_ll = ll;
      }
    }
  }
  return best;
}

// best[j][a]: maximal log-likelihood of splitting [a, len) into j epochs;
// next[j][a]: smallest second break attaining it.
inline std::vector<std::size_t> search_dynamic(std::span<const double> x, std::size_t n,
                                               const std::vector<std::size_t>& minlen, const EpochSearchConfig& config) {
  const std::size_t len = x.size();
  std::vector<std::vector<double>> best(n + 1, std::vector<double>(len + 1, minus_inf));
  std::vector<std::vector<std::size_t>> next(n + 1, std::vector<std::size_t>(len + 1, unreachable));
  for (std::size_t a = 0; a < len; ++a)
    if (fits(minlen, a, len)) best[1][a] = segment(x, a, len, config).log_likelihood;
  for (std::size_t j = 2; j <= n; ++j) {
    for (std::size_t a = 0; a < len; ++a) {
      if (minlen[a] == unreachable) continue;
      Moments mom;
      for (std::size_t b = a + 1; b < len; ++b) {
        mom.push(x[b - 1]);
        if (b - a < minlen[a] || best[j - 1][b] == minus_inf) continue;
        const double ll = score(mom, a, config).log_likelihood + best[j - 1][b];
        if (next[j][a] == unreachable || ll > best[j][a]) {
          best[j][a] = ll;
          next[j][a] = b;
        }
      }
    }
  }
  if (best[n][0] == minus_inf) return {};
  std::vector<std::size_t> breaks{0};
  std::size_t a = 0;
  for (std::size_t j = n; j >= 2; --j) {
    a = next[j][a];
    breaks.push_back(a);
  }
  return breaks;
}

} // namespace detail

enum class EpochSearch { automatic, direct, dynamic };

// Global maximum-likelihood segmentation into n epochs. Exhaustive double
// loop for n <= 3, dynamic programming beyond; ties go to the
// lexicographically smallest break vector. `dates` (one per series point) is
// needed only for a calendar minimum length.
inline EpochModel fit(std::span<const double> series, std::size_t n, const EpochSearchConfig& config,
                      std::span<const Date> dates = {}, EpochSearch method = EpochSearch::automatic) {
  config.validate();
  if (series.empty()) throw InputError("epochs", "empty series");
  if (n < 1) throw InputError("epochs", "n must be at least 1");
  const auto minlen = detail::min_lengths(series.size(), config, dates);
  const auto infeasible = [&] {
    return InputError("epochs", "series of length " + std::to_string(series.size()) + " is too short for " +
                                    std::to_string(n) + " epochs under the minimum epoch length");
  };
  if (n == 1) {
    if (!detail::fits(minlen, 0, series.size())) throw infeasible();
    return make_epoch_model(series, {0}, config);
  }
  const bool direct = method == EpochSearch::direct || (method == EpochSearch::automatic && n <= 3);
  if (direct && n > 3) throw InputError("epochs", "direct search supports at most 3 epochs");
  auto breaks = direct ? detail::search_direct(series, n, minlen, config)
                       : detail::search_dynamic(series, n, minlen, config);
  if (breaks.empty()) throw infeasible();
  return make_epoch_model(series, std::move(breaks), config);
}

struct AicRow {
  std::size_t n = 0;
  std::size_t parameters = 0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double relative_likelihood = 0.0;      // exp((AIC_min - AIC) / 2)
  std::optional<double> delta_loglik;    // against n - 1 epochs
  EpochModel model;
};

struct EpochSelection {
  EpochModel best;
  std::vector<AicRow> table;
};

// AIC over n = 1..n_max; the smallest AIC wins, ties to fewer epochs.
inline EpochSelection select_n(std::span<const double> series, const EpochSearchConfig& config,
                               std::span<const Date> dates = {}) {
  config.validate();
  EpochSelection out;
  for (std::size_t n = 1; n <= config.n_max; ++n) {
    AicRow row;
    row.n = n;
    row.model = fit(series, n, config, dates);
    row.parameters = row.model.parameter_count();
    row.log_likelihood = row.model.log_likelihood;
    row.aic = row.model.aic;
    if (n > 1) row.delta_loglik = row.log_likelihood - out.table.back().log_likelihood;
    out.table.push_back(std::move(row));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.table.size(); ++i)
    if (out.table[i].aic < out.table[best].aic) best = i;
  const double aic_min = out.table[best].aic;
  for (auto& row : out.table) row.relative_likelihood = std::exp((aic_min - row.aic) / 2.0);
  out.best = out.table[best].model;
  return out;
}

// Largest n whose segmentation is feasible under the minimum length (0 if
// even a single epoch is not).
inline std::size_t max_feasible_epochs(std::size_t length, const EpochSearchConfig& config,
                                       std::span<const Date> dates = {}) {
  if (length == 0) return 0;
  const auto minlen = detail::min_lengths(length, config, dates);
  // Greedy packing of shortest epochs from the front maximizes the count.
  std::size_t count = 0;
  std::size_t a = 0;
  while (a < length && minlen[a] != detail::unreachable && a + minlen[a] <= length) {
    ++count;
    a += minlen[a];
  }
  return count;
}

struct LandscapePoint {
  std::size_t break_index = 0;
  double log_likelihood = 0.0;
  double delta = 0.0; // against a single epoch, natural-log units
};

// Two-epoch log-likelihood at every admissible break position.
inline std::vector<LandscapePoint> break_landscape(std::span<const double> series, const EpochSearchConfig& config,
                                                   std::span<const Date> dates = {}) {
  config.validate();
  const auto minlen = detail::min_lengths(series.size(), config, dates);
  const double single = segment_loglik(series, std::vector<std::size_t>{0}, config);
  std::vector<LandscapePoint> out;
  for (std::size_t e = 1; e < series.size(); ++e) {
    if (!detail::fits(minlen, 0, e) || !detail::fits(minlen, e, series.size())) continue;
    const std::vector<std::size_t> breaks{0, e};
    const double ll = segment_loglik(series, breaks, config);
    out.push_back({e, ll, ll - single});
  }
  return out;
}

// Maps break indices to read dates. A surprise series starts at the second
// document, so callers pass offset 1 to map series index i to record i + 1.
inline std::vector<std::pair<std::size_t, Date>> break_to_date(const EpochModel& model,
                                                               std::span<const VolumeRecord> records,
                                                               std::size_t offset = 0) {
  std::vector<std::pair<std::size_t, Date>> out;
  for (auto b : model.breaks) {
    if (b + offset >= records.size())
      throw InputError("epochs", "break index " + std::to_string(b) + " has no matching record");
    out.emplace_back(b, records[b + offset].read_date);
  }
  return out;
}

} // namespace readpath
