#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liftbreg/error.hpp"
#include "liftbreg/grid.hpp"
#include "liftbreg/labels.hpp"

namespace liftbreg {

enum class TvKind { iso, an };

inline TvKind parse_tv(const std::string& s) {
  if (s == "iso") return TvKind::iso;
  if (s == "an") return TvKind::an;
  throw InputError("unknown TV kind '" + s + "' (expected iso or an)");
}

inline const char* tv_name(TvKind tv) { return tv == TvKind::iso ? "iso" : "an"; }

// A pixel of a dual field is an l x d block stored row-major (row = interval).

/// Rows onto 2-norm balls of radius widths[i].
inline void project_K_iso(std::span<double> q, std::size_t dims, const LabelSet& labels) {
  const auto& w = labels.widths();
  for (std::size_t r = 0; r < w.size(); ++r) {
    double* row = q.data() + r * dims;
    double n2 = 0.0;
    for (std::size_t j = 0; j < dims; ++j) n2 += row[j] * row[j];
    if (n2 > w[r] * w[r]) {
      const double s = w[r] / std::sqrt(n2);
      for (std::size_t j = 0; j < dims; ++j) row[j] *= s;
    }
  }
}

/// Entries clamped to [-widths[i], widths[i]].
inline void project_K_an(std::span<double> q, std::size_t dims, const LabelSet& labels) {
  const auto& w = labels.widths();
  for (std::size_t r = 0; r < w.size(); ++r)
    for (std::size_t j = 0; j < dims; ++j)
      q[r * dims + j] = std::clamp(q[r * dims + j], -w[r], w[r]);
}

inline void project_K(std::span<double> q, std::size_t dims, const LabelSet& labels, TvKind tv) {
  if (tv == TvKind::iso)
    project_K_iso(q, dims, labels);
  else
    project_K_an(q, dims, labels);
}

inline void project_K(DualField& q, const LabelSet& labels, TvKind tv) {
  for (std::size_t p = 0; p < q.shape.pixels(); ++p) project_K(q.pixel(p), q.dims, labels, tv);
}

/// Max violation of the constraint set (0 when feasible).
inline double K_violation(std::span<const double> q, std::size_t dims, const LabelSet& labels,
                          TvKind tv) {
  const auto& w = labels.widths();
  double worst = 0.0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    const double* row = q.data() + r * dims;
    if (tv == TvKind::iso) {
      double n2 = 0.0;
      for (std::size_t j = 0; j < dims; ++j) n2 += row[j] * row[j];
      worst = std::max(worst, std::sqrt(n2) - w[r]);
    } else {
      for (std::size_t j = 0; j < dims; ++j) worst = std::max(worst, std::abs(row[j]) - w[r]);
    }
  }
  return worst;
}

/// sup over K of <q, g> for one pixel's gradient block g.
inline double K_support(std::span<const double> g, std::size_t dims, const LabelSet& labels,
                        TvKind tv) {
  const auto& w = labels.widths();
  double s = 0.0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    const double* row = g.data() + r * dims;
    if (tv == TvKind::iso) {
      double n2 = 0.0;
      for (std::size_t j = 0; j < dims; ++j) n2 += row[j] * row[j];
      s += w[r] * std::sqrt(n2);
    } else {
      for (std::size_t j = 0; j < dims; ++j) s += w[r] * std::abs(row[j]);
    }
  }
  return s;
}

/// Rescales row `row` of every column to all rows: out[r][j] = w[r] q[row][j] / w[row].
/// Each column of the result is a multiple of the width vector.
inline void transform_dual(std::span<const double> q, std::size_t dims, std::size_t row,
                           const LabelSet& labels, std::span<double> out) {
  const auto& w = labels.widths();
  if (row >= w.size()) throw RangeError("transform row out of range");
  for (std::size_t j = 0; j < dims; ++j) {
    const double c = q[row * dims + j] / w[row];
    for (std::size_t r = 0; r < w.size(); ++r) out[r * dims + j] = w[r] * c;
  }
}

/// Per-column variant used on fields: column j is rescaled from `rows[j]`.
inline void transform_dual_columns(std::span<const double> q, std::size_t dims,
                                   std::span<const std::size_t> rows, const LabelSet& labels,
                                   std::span<double> out) {
  const auto& w = labels.widths();
  for (std::size_t j = 0; j < dims; ++j) {
    const std::size_t row = rows[j];
    const double c = q[row * dims + j] / w[row];
    for (std::size_t r = 0; r < w.size(); ++r) out[r * dims + j] = w[r] * c;
  }
}

/// Row that carries the scalar dual at a sublabel-integral pixel. Normally the
/// pixel's own interval. When the value sits on the lower label (alpha within
/// `tol` of 0) and the forward gradient points down, that row's gradient
/// vanishes while the row below carries the jump, so the larger of the two is
/// used. Anisotropic duals decide per column; isotropic ones need a single row
/// so the rescaled rows stay inside their balls.
inline std::size_t active_row(const SublabelIndex& idx, std::span<const double> grad_pixel,
                              std::size_t dims, std::size_t j, TvKind tv, double tol) {
  const std::size_t i = idx.interval;
  if (i == 0 || idx.alpha > tol) return i;
  auto size = [&](std::size_t r) {
    if (tv == TvKind::an) return std::abs(grad_pixel[r * dims + j]);
    double n2 = 0.0;
    for (std::size_t k = 0; k < dims; ++k) n2 += grad_pixel[r * dims + k] * grad_pixel[r * dims + k];
    return n2;
  };
  return size(i - 1) > size(i) ? i - 1 : i;
}

struct TransformReport {
  std::size_t transformed = 0;
  std::size_t skipped = 0;  // pixels that failed the integrality test
  double non_integral_fraction() const {
    const std::size_t n = transformed + skipped;
    return n == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(n);
  }
};

/// Applies the transform at every pixel of `u` that is sublabel-integral within
/// `tol`; other pixels keep their dual unchanged.
inline TransformReport transform_dual_field(DualField& q, const LiftedField& u,
                                            const LabelSet& labels, TvKind tv, double tol) {
  const std::size_t l = q.rows, d = q.dims;
  DualField g = gradient(u);
  TransformReport rep;
  std::vector<double> out(l * d);
  std::size_t rows[2] = {0, 0};
  for (std::size_t p = 0; p < q.shape.pixels(); ++p) {
    auto idx = check_sublabel_integral(u.pixel(p), tol);
    if (!idx) {
      ++rep.skipped;
      continue;
    }
    ++rep.transformed;
    for (std::size_t j = 0; j < d; ++j) rows[j] = active_row(*idx, g.pixel(p), d, j, tv, tol);
    transform_dual_columns(q.pixel(p), d, std::span<const std::size_t>(rows, d), labels, out);
    std::copy(out.begin(), out.end(), q.pixel(p).begin());
  }
  return rep;
}

}  // namespace liftbreg
