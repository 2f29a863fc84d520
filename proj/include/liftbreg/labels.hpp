#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftbreg/error.hpp"

namespace liftbreg {

/// Ordered labels g_1 < ... < g_L discretizing the range [g_1, g_L].
/// The lifted space has l = L - 1 channels, one per label interval.
class LabelSet {
 public:
  LabelSet() = default;

  explicit LabelSet(std::vector<double> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) throw ModelError("need at least two labels");
    for (double g : labels_)
      if (!std::isfinite(g)) throw ModelError("labels must be finite");
    widths_.resize(labels_.size() - 1);
    for (std::size_t i = 0; i + 1 < labels_.size(); ++i) {
      widths_[i] = labels_[i + 1] - labels_[i];
      if (!(widths_[i] > 0.0)) throw ModelError("labels must be strictly increasing");
    }
  }

  /// L equispaced labels spanning [lo, hi].
  static LabelSet uniform(std::size_t count, double lo, double hi) {
    if (count < 2) throw ModelError("need at least two labels");
    if (!(hi > lo)) throw ModelError("label range must satisfy lo < hi");
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
      g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    g.back() = hi;
    return LabelSet(std::move(g));
  }

  std::size_t count() const { return labels_.size(); }
  std::size_t intervals() const { return widths_.size(); }
  double front() const { return labels_.front(); }
  double back() const { return labels_.back(); }
  double operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<double>& labels() const { return labels_; }
  /// Interval widths g_{i+1} - g_i ("gamma tilde").
  const std::vector<double>& widths() const { return widths_; }

 private:
  std::vector<double> labels_;
  std::vector<double> widths_;
};

/// Position inside interval `interval` (0-based): value = g_i + alpha (g_{i+1} - g_i).
struct SublabelIndex {
  std::size_t interval = 0;
  double alpha = 0.0;
};

/// Writes the lifted vector 1_i^alpha: i ones, then alpha, then zeros.
inline void sublabel_vector(const SublabelIndex& idx, std::span<double> out) {
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = r < idx.interval ? 1.0 : (r == idx.interval ? idx.alpha : 0.0);
}

inline std::vector<double> sublabel_vector(const SublabelIndex& idx, const LabelSet& labels) {
  std::vector<double> v(labels.intervals());
  sublabel_vector(idx, v);
  return v;
}

inline double sublabel_value(const SublabelIndex& idx, const LabelSet& labels) {
  return labels[idx.interval] + idx.alpha * labels.widths()[idx.interval];
}

/// Interval/alpha of a value. An interior label is assigned to the interval on
/// its right with alpha = 0; the top label maps to the last interval, alpha = 1.
inline SublabelIndex locate(double value, const LabelSet& labels) {
  if (!std::isfinite(value) || value < labels.front() || value > labels.back())
    throw RangeError("value " + std::to_string(value) + " outside label range [" +
                     std::to_string(labels.front()) + ", " + std::to_string(labels.back()) + "]");
  const auto& g = labels.labels();
  const std::size_t l = labels.intervals();
  if (value >= g.back()) return {l - 1, 1.0};
  // first label strictly greater than value
  auto it = std::upper_bound(g.begin(), g.end(), value);
  const std::size_t i = static_cast<std::size_t>(it - g.begin()) - 1;
  const double alpha = (value - g[i]) / labels.widths()[i];
  return {i, std::clamp(alpha, 0.0, 1.0)};
}

struct Lifted {
  SublabelIndex index;
  std::vector<double> vector;
};

inline Lifted lift(double value, const LabelSet& labels) {
  SublabelIndex idx = locate(value, labels);
  return {idx, sublabel_vector(idx, labels)};
}

/// g_1 + sum_i v_i (g_{i+1} - g_i); applied verbatim to relaxed vectors.
inline double unlift(std::span<const double> v, const LabelSet& labels) {
  const auto& w = labels.widths();
  double s = labels.front();
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
  return s;
}

/// Returns (i, alpha) if `v` is within `tol` (max-norm) of some 1_i^alpha.
inline std::optional<SublabelIndex> check_sublabel_integral(std::span<const double> v,
                                                            double tol) {
  const std::size_t l = v.size();
  std::size_t ones = 0;
  while (ones < l && std::abs(v[ones] - 1.0) <= tol) ++ones;
  if (ones == l) return SublabelIndex{l - 1, 1.0};
  const double a = v[ones];
  if (a < -tol || a > 1.0 + tol) return std::nullopt;
  for (std::size_t r = ones + 1; r < l; ++r)
    if (std::abs(v[r]) > tol) return std::nullopt;
  return SublabelIndex{ones, std::clamp(a, 0.0, 1.0)};
}

}  // namespace liftbreg
