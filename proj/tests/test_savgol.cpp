#include "tlscensus/savgol.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

namespace {

using namespace tlscensus;
using analysis::savgol_smooth_points;

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

TEST(SavgolWeights, SumToOneAndCentreWeight) {
  const auto w = analysis::savgol_weights(35, 35, 2);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-13);
  // Closed form for the centre weight of a quadratic fit over 2m+1 points.
  const double m = 35.0;
  const double expected = 3.0 * (3.0 * m * m + 3.0 * m - 1.0) / ((2 * m - 1) * (2 * m + 1) * (2 * m + 3));
  EXPECT_NEAR(w[35], expected, 1e-14);
  EXPECT_NEAR(w[35], 0.0317006266, 1e-10);
  for (int k = 0; k < 35; ++k) EXPECT_NEAR(w[static_cast<std::size_t>(k)], w[static_cast<std::size_t>(70 - k)], 1e-15);
}

TEST(SavgolWeights, ClassicFivePointQuadratic) {
  const auto w = analysis::savgol_weights(2, 2, 2);
  const double c[] = {-3, 12, 17, 12, -3};
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(w[static_cast<std::size_t>(k)], c[k] / 35.0, 1e-14);
}

TEST(SgWindowPoints, NearestOddAtLeastFive) {
  EXPECT_EQ(analysis::sg_window_points(143.0, 2.0), 71u);
  EXPECT_EQ(analysis::sg_window_points(4.0, 2.0), 5u);
  EXPECT_EQ(analysis::sg_window_points(20.0, 1.0), 21u);
  EXPECT_EQ(analysis::sg_window_points(21.0, 1.0), 21u);
}

TEST(SavgolSmooth, ConstantInputUnchanged) {
  std::vector<double> y(300, 0.37);
  for (double v : savgol_smooth_points(y, 71, 2)) EXPECT_NEAR(v, 0.37, 1e-13);
}

TEST(SavgolSmooth, ReproducesQuadraticsEverywhere) {
  for (int n : {71, 100, 801}) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double x = 4.0 + 0.002 * i;
      y[static_cast<std::size_t>(i)] = 0.3 - 0.7 * x + 0.11 * x * x;
    }
    const auto s = savgol_smooth_points(y, 71, 2);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(s[i], y[i], 1e-9) << "n=" << n << " i=" << i;
  }
}

TEST(SavgolSmooth, Linear) {
  const auto a = noise(500, 1);
  const auto b = noise(500, 2);
  const double alpha = 0.7, beta = -2.3;
  std::vector<double> mix(500);
  for (std::size_t i = 0; i < 500; ++i) mix[i] = alpha * a[i] + beta * b[i];
  const auto sa = savgol_smooth_points(a, 71, 2);
  const auto sb = savgol_smooth_points(b, 71, 2);
  const auto sm = savgol_smooth_points(mix, 71, 2);
  for (std::size_t i = 0; i < 500; ++i) EXPECT_NEAR(sm[i], alpha * sa[i] + beta * sb[i], 1e-13);
}

TEST(SavgolSmooth, ImpulseResponseIsKernel) {
  std::vector<double> y(301, 0.0);
  y[150] = 1.0;
  const auto s = savgol_smooth_points(y, 71, 2);
  const auto w = analysis::savgol_weights(35, 35, 2);
  for (int k = -35; k <= 35; ++k) {
    EXPECT_NEAR(s[static_cast<std::size_t>(150 + k)], w[static_cast<std::size_t>(35 - k)], 1e-15);
  }
  EXPECT_EQ(s[100], 0.0);
}

TEST(SavgolSmooth, ShortSeriesAndValidation) {
  EXPECT_TRUE(savgol_smooth_points(std::vector<double>{}, 5, 2).empty());
  // The window clamps to the series length.
  const std::vector<double> y{1.0, 4.0, 9.0, 16.0, 25.0};
  const auto s = savgol_smooth_points(y, 71, 2);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(s[i], y[i], 1e-12);
  EXPECT_THROW(savgol_smooth_points(y, 6, 2), std::invalid_argument);
  EXPECT_THROW(savgol_smooth_points(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 71, 2), std::invalid_argument);
}

TEST(SgSmooth, RejectsNonUniformGrid) {
  specgen::SwapSpectrum s;
  for (int i = 0; i < 100; ++i) {
    s.freqs_ghz.push_back(4.0 + 0.002 * i + (i == 50 ? 0.0005 : 0.0));
    s.p_loss.push_back(0.02);
  }
  try {
    analysis::sg_smooth(s, 143.0, 2);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("resample"), std::string::npos);
  }
}

}  // namespace
