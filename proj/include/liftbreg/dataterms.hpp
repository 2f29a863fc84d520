#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "liftbreg/envelope.hpp"
#include "liftbreg/error.hpp"
#include "liftbreg/grid.hpp"
#include "liftbreg/labels.hpp"

namespace liftbreg {

/// Grayscale intensities in [0, 1].
using Image = ScalarField;

inline Image clip_image(Image im) {
  for (double& v : im.values) {
    if (!std::isfinite(v)) throw InputError("image contains non-finite values");
    v = std::clamp(v, 0.0, 1.0);
  }
  return im;
}

/// (lambda/2)(t - f(x))^2 on every interval of every pixel.
inline std::vector<PieceModel> rof_model(const Image& f, double lambda, const LabelSet& labels) {
  if (!(lambda > 0.0)) throw ModelError("lambda must be positive");
  std::vector<PieceModel> models(f.shape.pixels());
  for (std::size_t p = 0; p < models.size(); ++p) {
    const double fx = f.values[p];
    const QuadraticPiece q{0.5 * lambda, -lambda * fx, 0.5 * lambda * fx * fx};
    models[p].pieces.assign(labels.intervals(), q);
  }
  return models;
}

inline std::vector<Envelope> build_envelopes(const std::vector<PieceModel>& models,
                                             const LabelSet& labels) {
  std::vector<Envelope> env;
  env.reserve(models.size());
  for (const auto& m : models) env.push_back(Envelope::build(m, labels));
  return env;
}

struct ImageDerivatives {
  ScalarField d_row;  // along x1 (down the rows)
  ScalarField d_col;  // along x2 (along a row)
};

/// Forward differences with Neumann boundary, unit spacing.
inline ImageDerivatives image_derivatives(const Image& im) {
  const std::size_t H = im.shape.height, W = im.shape.width;
  ImageDerivatives d{ScalarField(im.shape), ScalarField(im.shape)};
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      d.d_row(r, c) = r + 1 < H ? im(r + 1, c) - im(r, c) : 0.0;
      d.d_col(r, c) = c + 1 < W ? im(r, c + 1) - im(r, c) : 0.0;
    }
  return d;
}

struct StereoConfig {
  int patch_radius = 1;
  double beta = 0.1;
  std::size_t samples = 4;  // per label interval, both ends included
  double lambda = 1.0;      // weight of the matching cost

  void validate() const {
    if (patch_radius < 0) throw InputError("patch radius must be non-negative");
    if (!(beta > 0.0)) throw InputError("beta must be positive");
    if (samples < 2) throw InputError("need at least two samples per interval");
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
  }
};

/// Truncated patch distance between derivatives of I1 shifted by t along the
/// rows and derivatives of I2.
class StereoCost {
 public:
  StereoCost(const Image& i1, const Image& i2, const StereoConfig& cfg)
      : d1_(image_derivatives(i1)), d2_(image_derivatives(i2)), cfg_(cfg) {
    if (!(i1.shape == i2.shape)) throw InputError("stereo images differ in shape");
    cfg_.validate();
  }

  double operator()(std::size_t row, std::size_t col, double t) const {
    const GridShape& s = d1_.d_row.shape;
    const long r0 = static_cast<long>(row), c0 = static_cast<long>(col);
    const long rad = cfg_.patch_radius;
    const long H = static_cast<long>(s.height), W = static_cast<long>(s.width);
    double cost = 0.0;
    for (long r = std::max(0L, r0 - rad); r <= std::min(H - 1, r0 + rad); ++r)
      for (long c = std::max(0L, c0 - rad); c <= std::min(W - 1, c0 + rad); ++c) {
        const auto ru = static_cast<std::size_t>(r), cu = static_cast<std::size_t>(c);
        const double pos = static_cast<double>(c) + t;
        cost += std::min(std::abs(sample(d1_.d_row, ru, pos) - d2_.d_row(ru, cu)), cfg_.beta);
        cost += std::min(std::abs(sample(d1_.d_col, ru, pos) - d2_.d_col(ru, cu)), cfg_.beta);
      }
    return cost;
  }

  const StereoConfig& config() const { return cfg_; }

 private:
  // linear interpolation along a row, clamped to the border
  static double sample(const ScalarField& f, std::size_t row, double pos) {
    const double last = static_cast<double>(f.shape.width - 1);
    const double x = std::clamp(pos, 0.0, last);
    const std::size_t k = std::min(static_cast<std::size_t>(x), f.shape.width - 1);
    if (k + 1 >= f.shape.width) return f(row, k);
    const double a = x - static_cast<double>(k);
    return (1.0 - a) * f(row, k) + a * f(row, k + 1);
  }

  ImageDerivatives d1_, d2_;
  StereoConfig cfg_;
};

inline double stereo_cost(const Image& i1, const Image& i2, std::size_t row, std::size_t col,
                          double t, const StereoConfig& cfg, const LabelSet& labels) {
  if (!(t >= labels.front() && t <= labels.back()))
    throw RangeError("disparity outside the label range");
  return StereoCost(i1, i2, cfg)(row, col, t);
}

/// lambda * cost sampled at `samples` points per interval; linear in between.
inline std::vector<PieceModel> stereo_model(const Image& i1, const Image& i2,
                                            const LabelSet& labels, const StereoConfig& cfg) {
  StereoCost cost(i1, i2, cfg);
  const GridShape& s = i1.shape;
  const std::size_t n = cfg.samples;
  std::vector<PieceModel> models(s.pixels());
  for (std::size_t r = 0; r < s.height; ++r)
    for (std::size_t c = 0; c < s.width; ++c) {
      PieceModel& m = models[r * s.width + c];
      double shared = cfg.lambda * cost(r, c, labels[0]);
      for (std::size_t i = 0; i < labels.intervals(); ++i) {
        SampledPiece piece;
        piece.values.resize(n);
        piece.values[0] = shared;
        for (std::size_t k = 1; k < n; ++k) {
          const double a = static_cast<double>(k) / static_cast<double>(n - 1);
          const double t = k + 1 == n ? labels[i + 1] : labels[i] + a * labels.widths()[i];
          piece.values[k] = cfg.lambda * cost(r, c, t);
        }
        shared = piece.values.back();
        m.pieces.push_back(std::move(piece));
      }
    }
  return models;
}

}  // namespace liftbreg
