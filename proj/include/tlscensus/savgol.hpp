#pragma once

// Savitzky-Golay smoothing on a uniform grid. Interior points use the
// symmetric window; within half a window of either end the window shrinks
// to the samples that exist, so the fit becomes one-sided at the very edge.
// Every output is the value at the evaluation point of the least-squares
// polynomial over its window, hence polynomials of degree <= order are
// reproduced exactly everywhere.

#include "tlscensus/specgen.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::analysis {

/// Least-squares weights that evaluate an order-`order` polynomial fit over
/// offsets [-left, right] at offset 0.
inline std::vector<double> savgol_weights(int left, int right, int order) {
  const int n = left + right + 1;
  if (order < 0 || n < order + 1) {
    throw std::invalid_argument("savgol_weights: window of " + std::to_string(n) + " points cannot fit order " +
                                std::to_string(order));
  }
  const double scale = std::max(1, std::max(left, right));
  Eigen::MatrixXd vander(n, order + 1);
  for (int r = 0; r < n; ++r) {
    const double x = static_cast<double>(r - left) / scale;
    double p = 1.0;
    for (int c = 0; c <= order; ++c) {
      vander(r, c) = p;
      p *= x;
    }
  }
  // w = V (V^T V)^{-1} e_0: the row of the least-squares solver that yields
  // the constant coefficient, i.e. the fitted value at offset 0.
  const Eigen::MatrixXd gram = vander.transpose() * vander;
  const Eigen::VectorXd c = gram.ldlt().solve(Eigen::VectorXd::Unit(order + 1, 0));
  const Eigen::VectorXd wv = vander * c;
  std::vector<double> w(wv.data(), wv.data() + n);
  return w;
}

/// Converts a window in MHz to an odd point count at the given grid step:
/// nearest odd integer, at least 5.
inline std::size_t sg_window_points(double window_mhz, double step_mhz) {
  if (!(window_mhz > 0.0) || !(step_mhz > 0.0)) {
    throw std::invalid_argument("sg_window_points: window and step must be positive");
  }
  const double raw = window_mhz / step_mhz;
  const auto half = static_cast<long>(std::lround((raw - 1.0) / 2.0));
  return static_cast<std::size_t>(std::max(2L, half) * 2 + 1);
}

inline std::vector<double> savgol_smooth_points(std::span<const double> y, std::size_t window_points, int order) {
  const std::size_t n = y.size();
  if (n == 0) return {};
  if (window_points % 2 == 0) throw std::invalid_argument("savgol: window must have an odd number of points");
  if (window_points > n) window_points = (n % 2 == 1) ? n : n - 1;
  if (order < 0 || window_points < static_cast<std::size_t>(order) + 2) {
    throw std::invalid_argument("savgol: window of " + std::to_string(window_points) +
                                " points must span at least order + 2 = " + std::to_string(order + 2));
  }
  const int half = static_cast<int>(window_points / 2);
  const auto centre = savgol_weights(half, half, order);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int left = std::min<int>(half, static_cast<int>(i));
    const int right = std::min<int>(half, static_cast<int>(n - 1 - i));
    std::vector<double> edge;
    const std::vector<double>* w = &centre;
    if (left != half || right != half) {
      edge = savgol_weights(left, right, order);
      w = &edge;
    }
    double acc = 0.0;
    const std::size_t start = i - static_cast<std::size_t>(left);
    for (std::size_t k = 0; k < w->size(); ++k) acc += (*w)[k] * y[start + k];
    out[i] = acc;
  }
  return out;
}

inline void require_uniform_grid(std::span<const double> freqs, double tolerance = 0.01) {
  if (freqs.size() < 2) return;
  const double mean_step = (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    const double step = freqs[i] - freqs[i - 1];
    if (std::abs(step - mean_step) > tolerance * mean_step) {
      throw std::invalid_argument("sg_smooth: grid is not uniform at row " + std::to_string(i) +
                                  "; resample the spectrum onto a uniform grid first");
    }
  }
}

/// Smooths the p_loss column of a spectrum with a window given in MHz.
inline std::vector<double> sg_smooth(const specgen::SwapSpectrum& spectrum, double window_mhz, int order) {
  spectrum.validate();
  require_uniform_grid(spectrum.freqs_ghz);
  if (spectrum.p_loss.size() < 2) return spectrum.p_loss;
  const auto points = sg_window_points(window_mhz, spectrum.step_ghz() * 1e3);
  return savgol_smooth_points(spectrum.p_loss, points, order);
}

}  // namespace tlscensus::analysis
