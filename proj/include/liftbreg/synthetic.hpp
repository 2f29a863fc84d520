#pragma once

// Seeded test inputs: the two-squares denoising image and a stereo pair with
// known piecewise-constant disparity.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "liftbreg/dataterms.hpp"
#include "liftbreg/grid.hpp"

namespace liftbreg::synthetic {

/// 32 x 32: background 0.1, a bright square (0.9) overlapping a gray one
/// (0.4), Gaussian noise of std 0.08, clipped and quantized to 8 bit.
inline Image two_squares(std::uint32_t seed = 1) {
  GridShape s(32, 32);
  Image im(s, 0.1);
  for (std::size_t r = 14; r < 28; ++r)
    for (std::size_t c = 12; c < 28; ++c) im(r, c) = 0.4;
  for (std::size_t r = 5; r < 17; ++r)
    for (std::size_t c = 4; c < 16; ++c) im(r, c) = 0.9;
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.08);
  for (double& v : im.values) v = std::round(std::clamp(v + noise(rng), 0.0, 1.0) * 255.0) / 255.0;
  return im;
}

struct StereoPair {
  Image left;   // I1
  Image right;  // I2(y) = I1(y1, y2 + D(y))
  ScalarField disparity;
};

/// Random smooth texture sampled at column positions shifted by the
/// disparity, so the right image is an exact warp of the left one.
inline StereoPair stereo_pair(std::size_t size = 64, std::uint32_t seed = 7) {
  GridShape s(size, size);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> freq(0.15, 0.9), phase(0.0, 2.0 * std::numbers::pi),
      amp(0.5, 1.0), angle(0.0, std::numbers::pi);
  constexpr int waves = 12;
  double fx[waves], fy[waves], ph[waves], am[waves];
  double total = 0.0;
  for (int k = 0; k < waves; ++k) {
    const double f = freq(rng), a = angle(rng);
    fx[k] = f * std::cos(a);
    fy[k] = f * std::sin(a);
    ph[k] = phase(rng);
    am[k] = amp(rng);
    total += am[k];
  }
  auto texture = [&](double r, double c) {
    double v = 0.0;
    for (int k = 0; k < waves; ++k) v += am[k] * std::sin(fx[k] * r + fy[k] * c + ph[k]);
    return 0.5 + 0.5 * v / total;
  };

  StereoPair out{Image(s), Image(s), ScalarField(s, 0.5)};
  const double n = static_cast<double>(size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const double y = static_cast<double>(r) / n, x = static_cast<double>(c) / n;
      double d = 0.5;
      if (y > 0.15 && y < 0.55 && x > 0.1 && x < 0.5) d = 2.5;
      const double dy = y - 0.68, dx = x - 0.65;
      if (dy * dy + dx * dx < 0.2 * 0.2) d = 1.5;
      if (y > 0.8 && x < 0.35) d = 3.0;
      out.disparity(r, c) = d;
      out.left(r, c) = texture(static_cast<double>(r), static_cast<double>(c));
      out.right(r, c) = texture(static_cast<double>(r), static_cast<double>(c) + d);
    }
  return out;
}

}  // namespace liftbreg::synthetic
