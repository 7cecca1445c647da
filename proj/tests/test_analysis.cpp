#include "tlscensus/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace tlscensus;
using namespace tlscensus::analysis;
using specgen::SwapSpectrum;

SwapSpectrum synthetic(double f_lo, double f_hi, double background,
                       std::initializer_list<std::pair<double, double>> peaks, double width_mhz = 4.0) {
  SwapSpectrum s;
  s.freqs_ghz = specgen::uniform_grid({f_lo, f_hi}, 2.0);
  for (double f : s.freqs_ghz) {
    double p = background;
    for (const auto& [f0, h] : peaks) {
      const double x = (f - f0) * 1e3 / width_mhz;
      p += h * std::exp(-0.5 * x * x);
    }
    s.p_loss.push_back(p);
  }
  return s;
}

DefectReport report_with(std::size_t peaks, double bandwidth, std::string chip = "c", std::string qubit = "q") {
  DefectReport r;
  for (std::size_t i = 0; i < peaks; ++i) r.peaks.push_back({4.0 + 0.2 * static_cast<double>(i), 0.5});
  r.bandwidth_ghz = bandwidth;
  r.labels.chip_id = std::move(chip);
  r.labels.qubit_id = std::move(qubit);
  return r;
}

struct Planted {
  physics::QubitModel qubit;
  specgen::Band band;
  std::vector<double> grid;
};

Planted planted_setup() {
  Planted p;
  p.qubit.t1_background = physics::T1Background::constant(30e-6);
  const double top = physics::sweet_spot_ghz(p.qubit);
  p.band = {top - 1.6, top};
  p.grid = specgen::uniform_grid(p.band, 2.0);
  return p;
}

TEST(CountDefects, FlatBackgroundHasNoPeaks) {
  const auto s = synthetic(4.0, 6.0, 0.02, {});
  const auto r = count_defects(s, {});
  EXPECT_EQ(r.count(), 0u);
  EXPECT_NEAR(r.bandwidth_ghz, 2.0, 1e-9);
}

TEST(CountDefects, ThreeIsolatedPlantedPeaks) {
  const auto s = synthetic(4.0, 6.0, 0.02, {{4.2, 0.4}, {5.0, 0.4}, {5.8, 0.4}});
  const auto r = count_defects(s, {});
  ASSERT_EQ(r.count(), 3u);
  const double expected[] = {4.2, 5.0, 5.8};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.peaks[static_cast<std::size_t>(i)].frequency_ghz, expected[i], 0.002 + 1e-9);
}

TEST(CountDefects, CloseNeighboursKeepTheHigherPeak) {
  // A narrow smoothing window resolves both maxima; exclusion keeps the higher.
  const auto s = synthetic(4.0, 6.0, 0.02, {{5.0, 0.4}, {5.06, 0.3}});
  AnalysisParams p;
  p.sg_window_mhz = 21.0;
  const auto smoothed = sg_smooth(s, p.sg_window_mhz, p.sg_order);
  ASSERT_EQ(find_prominent_peaks(smoothed, p.prominence_min).size(), 2u);
  const auto r = count_defects(s, p);
  ASSERT_EQ(r.count(), 1u);
  EXPECT_NEAR(r.peaks[0].frequency_ghz, 5.0, 0.002 + 1e-9);
  EXPECT_NEAR(r.peaks[0].p_loss_raw, 0.42, 1e-3);
}

TEST(CountDefects, CloseNeighboursMergeUnderDefaultSmoothing) {
  const auto s = synthetic(4.0, 6.0, 0.02, {{5.0, 0.4}, {5.06, 0.3}}, 20.0);
  const auto r = count_defects(s, {});
  ASSERT_EQ(r.count(), 1u);
  EXPECT_GT(r.peaks[0].frequency_ghz, 5.0 - 1e-9);
  EXPECT_LT(r.peaks[0].frequency_ghz, 5.06);
}

TEST(CountDefects, RawThresholdDecides) {
  const auto s = synthetic(4.0, 6.0, 0.02, {{5.0, 0.07}}, 15.0);
  const auto smoothed = sg_smooth(s, 143.0, 2);
  ASSERT_EQ(find_prominent_peaks(smoothed, 0.03).size(), 1u);
  EXPECT_EQ(count_defects(s, {}).count(), 0u);
  AnalysisParams low;
  low.counting_threshold = 0.05;
  EXPECT_EQ(count_defects(s, low).count(), 1u);
}

TEST(CountDefects, CarriesLabelsAndParams) {
  auto s = synthetic(4.0, 6.0, 0.02, {{5.0, 0.4}});
  s.labels = {"Q3", "4-0", 2};
  AnalysisParams p;
  p.counting_threshold = 0.2;
  const auto r = count_defects(s, p);
  EXPECT_EQ(r.labels, s.labels);
  EXPECT_EQ(r.params, p);
}

TEST(CountDefects, ExclusionInvariantOnRandomSpectra) {
  const auto setup = planted_setup();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto e = specgen::sample_defect_ensemble(setup.band, 3.0, specgen::Distribution::log_uniform(0.3, 4),
                                                   specgen::Distribution::uniform(0, 0.3), seed);
    const auto s = specgen::generate_spectrum(setup.qubit, e, setup.grid, 100e-9, 1000u, seed + 1000);
    const auto r = count_defects(s, {});
    for (std::size_t i = 0; i < r.peaks.size(); ++i) {
      EXPECT_GE(r.peaks[i].p_loss_raw, 0.1);
      for (std::size_t j = i + 1; j < r.peaks.size(); ++j) {
        EXPECT_GT(std::abs(r.peaks[i].frequency_ghz - r.peaks[j].frequency_ghz), 0.1);
      }
    }
  }
}

TEST(CountDefects, RecallForIsolatedStrongDefects) {
  const auto setup = planted_setup();
  int hit = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = make_rng(derive_seed(42, {seed}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    specgen::DefectEnsemble e;
    e.band = setup.band;
    const auto g = specgen::Distribution::log_uniform(1.0, 4.0);
    for (double f = setup.band.f_min_ghz + 0.1 + 0.05 * u(rng); f < setup.band.f_max_ghz - 0.1; f += 0.25) {
      e.defects.push_back({f, g.sample(rng), 0.0});
    }
    const auto s = specgen::generate_spectrum(setup.qubit, e, setup.grid, 100e-9, 1000u, derive_seed(43, {seed}));
    const auto r = count_defects(s, {});
    for (const auto& d : e.defects) {
      ++total;
      for (const auto& p : r.peaks) {
        if (std::abs(p.frequency_ghz - d.frequency_ghz) <= 0.01) {
          ++hit;
          break;
        }
      }
    }
  }
  EXPECT_GE(static_cast<double>(hit) / total, 0.95);
}

TEST(CountDefects, FalsePositivesOnBackgroundOnlySpectra) {
  const auto setup = planted_setup();
  specgen::DefectEnsemble empty;
  empty.band = setup.band;
  double peaks = 0.0, bandwidth = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = specgen::generate_spectrum(setup.qubit, empty, setup.grid, 100e-9, 1000u, seed);
    const auto r = count_defects(s, {});
    peaks += static_cast<double>(r.count());
    bandwidth += r.bandwidth_ghz;
  }
  EXPECT_LE(peaks / bandwidth, 0.05);
}

TEST(DefectDensity, TableArithmetic) {
  std::vector<DefectReport> one{report_with(26, 27.95)};
  EXPECT_NEAR(defect_density(one), 0.930, 5e-4);
  std::vector<DefectReport> sum{report_with(60, 80.0), report_with(49, 69.18)};
  EXPECT_NEAR(defect_density(sum), 109.0 / 149.18, 1e-12);
  EXPECT_NEAR(defect_density(sum), 0.7307, 5e-5);
  std::vector<DefectReport> none{report_with(0, 3.2)};
  EXPECT_EQ(defect_density(none), 0.0);
}

TEST(DefectDensity, Errors) {
  EXPECT_THROW(defect_density(std::vector<DefectReport>{}), std::domain_error);
  std::vector<DefectReport> zero{report_with(0, 0.0)};
  EXPECT_THROW(defect_density(zero), std::domain_error);
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.16), 1.64);
}

TEST(Bootstrap, IdenticalReportsGiveExactDensity) {
  std::vector<DefectReport> reports(17, report_with(3, 1.6));
  BootstrapOptions o;
  o.n_boot = 1000;
  const auto est = bootstrap_density(reports, o);
  EXPECT_EQ(est.rho, defect_density(reports));
  EXPECT_EQ(est.ci_low, est.rho);
  EXPECT_EQ(est.ci_high, est.rho);
  EXPECT_EQ(est.n_defects_mean, 51.0);
}

TEST(Bootstrap, DeterministicUnderSeedAndSeedSensitive) {
  std::vector<DefectReport> reports;
  for (std::size_t i = 0; i < 17; ++i) reports.push_back(report_with(i % 4, 1.6, "c", "q" + std::to_string(i)));
  BootstrapOptions o;
  o.n_boot = 2000;
  o.seed = 9;
  const auto a = bootstrap_density(reports, o);
  const auto b = bootstrap_density(reports, o);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.ci_low, b.ci_low);
  EXPECT_EQ(a.ci_high, b.ci_high);
  o.seed = 10;
  EXPECT_NE(bootstrap_density(reports, o).ci_low + bootstrap_density(reports, o).rho, a.ci_low + a.rho);
  EXPECT_LE(a.ci_low, a.rho);
  EXPECT_GE(a.ci_high, a.rho);
}

TEST(Bootstrap, PlantedSimulationRecoversScaleAndPoissonWidth) {
  // One 17-qubit run carries about 0.16 / GHz of planting noise, so the scale
  // check is made on the mean over independent runs.
  const auto setup = planted_setup();
  const int runs = 30;
  double rho_sum = 0.0;
  for (std::uint64_t run = 0; run < runs; ++run) {
    std::vector<DefectReport> reports;
    for (std::uint64_t q = 0; q < 17; ++q) {
      const auto e = specgen::sample_defect_ensemble(setup.band, 0.73, specgen::Distribution::log_uniform(1, 4),
                                                     specgen::Distribution::constant(0), derive_seed(5, {run, q}));
      const auto s = specgen::generate_spectrum(setup.qubit, e, setup.grid, 100e-9, 1000u, derive_seed(6, {run, q}));
      reports.push_back(count_defects(s, {}));
    }
    BootstrapOptions o;
    o.n_boot = 2000;
    o.seed = run;
    const auto est = bootstrap_density(reports, o);
    rho_sum += est.rho;
    double n = 0.0, bw = 0.0;
    for (const auto& r : reports) {
      n += static_cast<double>(r.count());
      bw += r.bandwidth_ghz;
    }
    const double poisson = std::sqrt(n) / bw;
    const double half_width = 0.5 * (est.ci_high - est.ci_low);
    EXPECT_GT(half_width, 0.5 * poisson);
    EXPECT_LT(half_width, 2.0 * poisson);
  }
  EXPECT_NEAR(rho_sum / runs, 0.73, 0.25);
}

TEST(Bootstrap, ChipUnitsPoolQubits) {
  std::vector<DefectReport> reports{report_with(2, 1.6, "a", "q1"), report_with(4, 1.6, "a", "q2"),
                                    report_with(1, 1.6, "b", "q1")};
  const auto units = detail::resampling_units(reports, ResampleUnit::chip);
  ASSERT_EQ(units.size(), 2u);
  EXPECT_EQ(units[0].peaks, 6.0);
  EXPECT_DOUBLE_EQ(units[0].bandwidth, 3.2);
  BootstrapOptions o;
  o.unit = ResampleUnit::chip;
  o.n_boot = 500;
  EXPECT_NO_THROW(bootstrap_density(reports, o));
  std::vector<DefectReport> one_chip{report_with(2, 1.6, "a", "q1"), report_with(4, 1.6, "a", "q2")};
  EXPECT_THROW(bootstrap_density(one_chip, o), std::invalid_argument);
}

TEST(Bootstrap, Validation) {
  std::vector<DefectReport> one{report_with(2, 1.6)};
  EXPECT_THROW(bootstrap_density(one), std::invalid_argument);
  std::vector<DefectReport> two{report_with(2, 1.6), report_with(1, 1.6)};
  BootstrapOptions o;
  o.n_boot = 10;
  EXPECT_THROW(bootstrap_density(two, o), std::invalid_argument);
  o.n_boot = 200;
  o.ci_level = 1.0;
  EXPECT_THROW(bootstrap_density(two, o), std::invalid_argument);
  EXPECT_EQ(resample_unit_from_string("chip"), ResampleUnit::chip);
  EXPECT_THROW(resample_unit_from_string("wafer"), std::invalid_argument);
}

TEST(ThresholdSweep, DensityNonIncreasing) {
  const auto setup = planted_setup();
  std::vector<SwapSpectrum> spectra;
  for (std::uint64_t q = 0; q < 10; ++q) {
    const auto e = specgen::sample_defect_ensemble(setup.band, 1.0, specgen::Distribution::log_uniform(0.1, 4),
                                                   specgen::Distribution::uniform(0, 0.2), derive_seed(1, {q}));
    spectra.push_back(specgen::generate_spectrum(setup.qubit, e, setup.grid, 100e-9, 1000u, derive_seed(2, {q})));
  }
  const std::vector<double> thresholds{0.05, 0.1, 0.2, 0.4, 0.57};
  BootstrapOptions o;
  o.n_boot = 1000;
  const auto rows = threshold_sweep(spectra, thresholds, {}, o);
  ASSERT_EQ(rows.size(), thresholds.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].rho_point, rows[i - 1].rho_point);
    EXPECT_LE(rows[i].estimate.rho, rows[i - 1].estimate.rho);
  }
  const std::vector<double> bad{0.1, 1.2};
  EXPECT_THROW(threshold_sweep(spectra, bad, {}, o), std::invalid_argument);
}

TEST(AnalysisParams, Validation) {
  AnalysisParams p;
  EXPECT_NO_THROW(p.validate());
  p.counting_threshold = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.sg_window_mhz = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
