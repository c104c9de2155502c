#pragma once

// KL divergence in bits and the surprise series built on it, plus the
// descriptive statistics that accompany them.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "readpath/dates.hpp"
#include "readpath/error.hpp"
#include "readpath/matrix.hpp"

namespace readpath {

// A point on the open simplex: strictly positive entries summing to 1.
class TopicDistribution {
public:
  static constexpr double sum_tolerance = 1e-9;

  explicit TopicDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InputError("surprise", "empty distribution");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p > 0.0)) throw InputError("surprise", "distribution entries must be strictly positive");
      sum += p;
    }
    if (std::abs(sum - 1.0) > sum_tolerance)
      throw InputError("surprise", "distribution does not sum to 1");
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

private:
  std::vector<double> probs_;
};

// sum_i q_i log2(q_i / p_i). No smoothing: zero or negative entries are
// rejected. Rounding can push a near-zero sum below 0; it is clamped.
inline double kl_divergence(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw InputError("surprise", "distribution lengths differ");
  double bits = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0.0) || !(p[i] > 0.0))
      throw InputError("surprise", "KL divergence needs strictly positive entries");
    bits += q[i] * std::log2(q[i] / p[i]);
  }
  return std::max(bits, 0.0);
}

inline double kl_divergence(const TopicDistribution& q, const TopicDistribution& p) {
  return kl_divergence(q.probs(), p.probs());
}

struct SurpriseKind {
  enum class Measure { text_to_text, text_to_past, text_to_n };
  Measure measure = Measure::text_to_text;
  std::size_t window = 1; // only for text_to_n

  static SurpriseKind t2t() { return {Measure::text_to_text, 1}; }
  static SurpriseKind t2p() { return {Measure::text_to_past, 0}; }
  static SurpriseKind t2n(std::size_t n) { return {Measure::text_to_n, n}; }

  std::string label() const {
    switch (measure) {
    case Measure::text_to_text: return "T2T";
    case Measure::text_to_past: return "T2P";
    case Measure::text_to_n: return "T2N(" + std::to_string(window) + ")";
    }
    return {};
  }

  friend bool operator==(const SurpriseKind&, const SurpriseKind&) = default;
};

// values[i - 1] is the surprise of position i; position 0 has none.
struct SurpriseSeries {
  SurpriseKind kind;
  std::string ordering = "reading-order";
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  double mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
};

namespace detail {

inline std::vector<std::size_t> resolve_order(const Matrix& thetas, std::span<const std::size_t> order) {
  std::vector<std::size_t> resolved;
  if (order.empty()) {
    resolved.resize(thetas.rows());
    std::iota(resolved.begin(), resolved.end(), std::size_t{0});
  } else {
    resolved.assign(order.begin(), order.end());
    for (auto i : resolved)
      if (i >= thetas.rows()) throw InputError("surprise", "ordering refers to a missing document");
  }
  if (resolved.size() < 2) throw InputError("surprise", "a surprise series needs at least 2 documents");
  return resolved;
}

} // namespace detail

// Rows of `thetas` are distributions; `order` lists row indices in reading
// sequence (empty = row order).
inline SurpriseSeries t2t_series(const Matrix& thetas, std::span<const std::size_t> order = {}) {
  const auto seq = detail::resolve_order(thetas, order);
  SurpriseSeries out{SurpriseKind::t2t(), "reading-order", {}};
  out.values.reserve(seq.size() - 1);
  for (std::size_t i = 1; i < seq.size(); ++i)
    out.values.push_back(kl_divergence(thetas.row(seq[i]), thetas.row(seq[i - 1])));
  return out;
}

// Past mean is the unweighted mean of all earlier rows.
inline SurpriseSeries t2p_series(const Matrix& thetas, std::span<const std::size_t> order = {}) {
  const auto seq = detail::resolve_order(thetas, order);
  const std::size_t k = thetas.cols();
  SurpriseSeries out{SurpriseKind::t2p(), "reading-order", {}};
  out.values.reserve(seq.size() - 1);
  std::vector<double> sum(k, 0.0);
  std::vector<double> mean(k);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const auto prev = thetas.row(seq[i - 1]);
    for (std::size_t t = 0; t < k; ++t) sum[t] += prev[t];
    for (std::size_t t = 0; t < k; ++t) mean[t] = sum[t] / static_cast<double>(i);
    out.values.push_back(kl_divergence(thetas.row(seq[i]), mean));
  }
  return out;
}

// Reference is the mean of the min(N, i) rows immediately before position i.
inline SurpriseSeries t2n_series(const Matrix& thetas, std::size_t n,
                                 std::span<const std::size_t> order = {}) {
  if (n < 1) throw InputError("surprise", "text-to-N needs N >= 1");
  const auto seq = detail::resolve_order(thetas, order);
  const std::size_t k = thetas.cols();
  SurpriseSeries out{SurpriseKind::t2n(n), "reading-order", {}};
  out.values.reserve(seq.size() - 1);
  std::vector<double> mean(k);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const std::size_t width = std::min(n, i);
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t j = i - width; j < i; ++j) {
      const auto row = thetas.row(seq[j]);
      for (std::size_t t = 0; t < k; ++t) mean[t] += row[t];
    }
    for (double& m : mean) m /= static_cast<double>(width);
    out.values.push_back(kl_divergence(thetas.row(seq[i]), mean));
  }
  return out;
}

inline SurpriseSeries surprise_series(SurpriseKind kind, const Matrix& thetas,
                                      std::span<const std::size_t> order = {}) {
  switch (kind.measure) {
  case SurpriseKind::Measure::text_to_text: return t2t_series(thetas, order);
  case SurpriseKind::Measure::text_to_past: return t2p_series(thetas, order);
  case SurpriseKind::Measure::text_to_n: return t2n_series(thetas, kind.window, order);
  }
  throw InvariantError("surprise", "unknown surprise kind");
}

// Running sum of (value - null mean); a falling curve means less surprise
// than the null.
inline std::vector<double> cumulative_relative(std::span<const double> values,
                                               std::span<const double> null_mean) {
  if (values.size() != null_mean.size())
    throw InputError("surprise", "series and null means differ in length");
  std::vector<double> out(values.size());
  double running = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    running += values[i] - null_mean[i];
    out[i] = running;
  }
  return out;
}

// Valid segment starts: first is 0, strictly increasing, all inside the series.
inline void validate_breaks(std::span<const std::size_t> breaks, std::size_t length,
                            const std::string& module) {
  if (breaks.empty() || breaks.front() != 0) throw InputError(module, "breaks must start at 0");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (breaks[i] <= breaks[i - 1]) throw InputError(module, "breaks must be strictly increasing");
  if (breaks.back() >= length) throw InputError(module, "break index beyond the series");
}

// Mean of (value - null mean) inside each segment; positive reads as
// exploration, negative as exploitation.
inline std::vector<double> epoch_mean_relative(std::span<const double> values,
                                               std::span<const double> null_mean,
                                               std::span<const std::size_t> breaks) {
  if (values.size() != null_mean.size())
    throw InputError("surprise", "series and null means differ in length");
  validate_breaks(breaks, values.size(), "surprise");
  std::vector<double> means;
  for (std::size_t s = 0; s < breaks.size(); ++s) {
    const std::size_t end = s + 1 < breaks.size() ? breaks[s + 1] : values.size();
    double sum = 0.0;
    for (std::size_t i = breaks[s]; i < end; ++i) sum += values[i] - null_mean[i];
    means.push_back(sum / static_cast<double>(end - breaks[s]));
  }
  return means;
}

struct DensityPoint {
  Date month;     // first day of the month
  double density; // readings per month
};

// Readings are counted per calendar month from the first to the last month
// present. Each month's density is the mean count over a centered window of
// `window_months` months (offsets -w/2 .. w - w/2 - 1), taken over the months
// of the window that fall inside the observed span.
inline std::vector<DensityPoint> reading_density(std::span<const Date> dates, int window_months = 6) {
  if (dates.empty()) throw InputError("surprise", "reading density of an empty date list");
  if (window_months < 1) throw InputError("surprise", "density window must be at least one month");
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (std::chrono::sys_days{dates[i]} < std::chrono::sys_days{dates[i - 1]})
      throw InputError("surprise", "reading dates must be sorted");
  const long first = month_index(dates.front());
  const long last = month_index(dates.back());
  const auto span = static_cast<std::size_t>(last - first + 1);
  std::vector<double> counts(span, 0.0);
  for (const auto& d : dates) counts[static_cast<std::size_t>(month_index(d) - first)] += 1.0;

  const long lo_off = -(window_months / 2);
  const long hi_off = window_months - window_months / 2 - 1;
  std::vector<DensityPoint> out;
  out.reserve(span);
  for (long m = 0; m < static_cast<long>(span); ++m) {
    const long lo = std::max(0L, m + lo_off);
    const long hi = std::min(static_cast<long>(span) - 1, m + hi_off);
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) sum += counts[static_cast<std::size_t>(j)];
    out.push_back({month_start(first + m), sum / static_cast<double>(hi - lo + 1)});
  }
  return out;
}

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares of y on x.
inline Regression ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("surprise", "regression needs at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InputError("surprise", "regression undefined: all x values are identical");
  Regression r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r2 = syy == 0.0 ? 0.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return r;
}

// Publication year regressed on read date in decimal years.
template <typename Records>
Regression pub_read_regression(const Records& records) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(decimal_year(r.read_date));
    y.push_back(static_cast<double>(r.pub_year));
  }
  if (x.size() < 2) throw InputError("surprise", "regression needs at least 2 records");
  return ols(x, y);
}

} // namespace readpath
