#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "liftbreg/error.hpp"

namespace liftbreg {

/// Regular pixel grid. A grid with a single row is treated as a 1D signal
/// (one spatial dimension); anything taller has two.
struct GridShape {
  std::size_t height = 1;
  std::size_t width = 1;
  double h = 1.0;

  GridShape() = default;
  GridShape(std::size_t height_, std::size_t width_, double h_ = 1.0)
      : height(height_), width(width_), h(h_) {
    if (height == 0 || width == 0) throw InputError("grid must have at least one pixel");
    if (!(h > 0.0) || !std::isfinite(h)) throw InputError("grid spacing must be positive");
  }

  std::size_t pixels() const { return height * width; }
  std::size_t dims() const { return height == 1 ? 1 : 2; }

  friend bool operator==(const GridShape& a, const GridShape& b) {
    return a.height == b.height && a.width == b.width && a.h == b.h;
  }
};

struct ScalarField {
  GridShape shape;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridShape& s, double fill = 0.0)
      : shape(s), values(s.pixels(), fill) {}
  ScalarField(const GridShape& s, std::vector<double> v) : shape(s), values(std::move(v)) {
    if (values.size() != shape.pixels()) throw InputError("scalar field size mismatch");
  }

  double& operator()(std::size_t row, std::size_t col) { return values[row * shape.width + col]; }
  double operator()(std::size_t row, std::size_t col) const {
    return values[row * shape.width + col];
  }
  double& operator[](std::size_t p) { return values[p]; }
  double operator[](std::size_t p) const { return values[p]; }
};

/// Per-pixel vectors in R^l, channel index innermost.
struct LiftedField {
  GridShape shape;
  std::size_t channels = 0;
  std::vector<double> values;

  LiftedField() = default;
  LiftedField(const GridShape& s, std::size_t l, double fill = 0.0)
      : shape(s), channels(l), values(s.pixels() * l, fill) {}

  std::span<double> pixel(std::size_t p) { return {values.data() + p * channels, channels}; }
  std::span<const double> pixel(std::size_t p) const {
    return {values.data() + p * channels, channels};
  }
  double& at(std::size_t p, std::size_t c) { return values[p * channels + c]; }
  double at(std::size_t p, std::size_t c) const { return values[p * channels + c]; }
};

/// Per-pixel l x d matrices (row = label interval, column = spatial dimension).
struct DualField {
  GridShape shape;
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<double> values;

  DualField() = default;
  DualField(const GridShape& s, std::size_t l, double fill = 0.0)
      : shape(s), rows(l), dims(s.dims()), values(s.pixels() * l * s.dims(), fill) {}

  std::size_t stride() const { return rows * dims; }
  std::span<double> pixel(std::size_t p) { return {values.data() + p * stride(), stride()}; }
  std::span<const double> pixel(std::size_t p) const {
    return {values.data() + p * stride(), stride()};
  }
  double& at(std::size_t p, std::size_t r, std::size_t d) {
    return values[(p * rows + r) * dims + d];
  }
  double at(std::size_t p, std::size_t r, std::size_t d) const {
    return values[(p * rows + r) * dims + d];
  }
};

inline LiftedField as_lifted(const ScalarField& f) {
  LiftedField out(f.shape, 1);
  out.values = f.values;
  return out;
}

inline ScalarField as_scalar(const LiftedField& f) {
  if (f.channels != 1) throw InputError("as_scalar needs a single-channel field");
  return ScalarField(f.shape, f.values);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Forward differences with Neumann boundary, written into `out`
/// (`out` must already have the dual layout of `u`).
inline void gradient_into(const LiftedField& u, DualField& out) {
  const GridShape& g = u.shape;
  const std::size_t l = u.channels;
  const std::size_t d = g.dims();
  const double inv_h = 1.0 / g.h;
  for (std::size_t row = 0; row < g.height; ++row) {
    for (std::size_t col = 0; col < g.width; ++col) {
      const std::size_t p = row * g.width + col;
      const double* here = u.values.data() + p * l;
      double* q = out.values.data() + p * l * d;
      const bool has_right = col + 1 < g.width;
      const bool has_down = row + 1 < g.height;
      const double* right = here + l;
      const double* down = here + g.width * l;
      // For d == 1 the only dimension runs along the columns.
      for (std::size_t r = 0; r < l; ++r) {
        q[r * d] = has_right ? (right[r] - here[r]) * inv_h : 0.0;
        if (d == 2) q[r * d + 1] = has_down ? (down[r] - here[r]) * inv_h : 0.0;
      }
    }
  }
}

inline DualField gradient(const LiftedField& u) {
  DualField out(u.shape, u.channels);
  gradient_into(u, out);
  return out;
}

/// Exact adjoint of gradient_into (negative divergence), written into `out`.
inline void divergence_adjoint_into(const DualField& q, LiftedField& out) {
  const GridShape& g = q.shape;
  const std::size_t l = q.rows;
  const std::size_t d = q.dims;
  const double inv_h = 1.0 / g.h;
  for (std::size_t row = 0; row < g.height; ++row) {
    for (std::size_t col = 0; col < g.width; ++col) {
      const std::size_t p = row * g.width + col;
      const double* qh = q.values.data() + p * l * d;
      const double* ql = col > 0 ? qh - l * d : nullptr;
      const double* qu = row > 0 ? qh - g.width * l * d : nullptr;
      const bool has_right = col + 1 < g.width;
      const bool has_down = row + 1 < g.height;
      double* o = out.values.data() + p * l;
      for (std::size_t r = 0; r < l; ++r) {
        double s = 0.0;
        if (ql) s += ql[r * d];
        if (has_right) s -= qh[r * d];
        if (d == 2) {
          if (qu) s += qu[r * d + 1];
          if (has_down) s -= qh[r * d + 1];
        }
        o[r] = s * inv_h;
      }
    }
  }
}

inline LiftedField divergence_adjoint(const DualField& q) {
  LiftedField out(q.shape, q.rows);
  divergence_adjoint_into(q, out);
  return out;
}

}  // namespace liftbreg
