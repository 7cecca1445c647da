#pragma once

// Defect census of swap spectra: smoothing, prominence screening,
// threshold counting with an exclusion window, spectral density and its
// bootstrap uncertainty.

#include "tlscensus/peaks.hpp"
#include "tlscensus/rng.hpp"
#include "tlscensus/savgol.hpp"
#include "tlscensus/specgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::analysis {

using specgen::SwapSpectrum;

struct AnalysisParams {
  double sg_window_mhz = 143.0;
  int sg_order = 2;
  double prominence_min = 0.03;
  double counting_threshold = 0.10;
  double exclusion_window_mhz = 100.0;

  void validate() const {
    if (!(sg_window_mhz > 0.0)) throw std::invalid_argument("AnalysisParams: sg_window_mhz must be > 0");
    if (sg_order < 0) throw std::invalid_argument("AnalysisParams: sg_order must be >= 0");
    if (!(prominence_min >= 0.0)) throw std::invalid_argument("AnalysisParams: prominence_min must be >= 0");
    if (!(counting_threshold > 0.0 && counting_threshold < 1.0)) {
      throw std::invalid_argument("AnalysisParams: counting_threshold must lie in (0, 1)");
    }
    if (!(exclusion_window_mhz >= 0.0)) {
      throw std::invalid_argument("AnalysisParams: exclusion_window_mhz must be >= 0");
    }
  }
  bool operator==(const AnalysisParams&) const = default;
};

struct DetectedPeak {
  double frequency_ghz = 0.0;
  double p_loss_raw = 0.0;
  bool operator==(const DetectedPeak&) const = default;
};

struct DefectReport {
  std::vector<DetectedPeak> peaks;  // sorted by frequency
  double bandwidth_ghz = 0.0;
  AnalysisParams params;
  specgen::SpectrumLabels labels;

  std::size_t count() const { return peaks.size(); }
  bool operator==(const DefectReport&) const = default;
};

struct DensityEstimate {
  double rho = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_boot = 0;
  double n_defects_mean = 0.0;
};

namespace detail {
// Grid frequencies carry rounding noise; separations equal to the window
// within this slack count as "within".
inline constexpr double kSeparationSlackGhz = 1e-9;
}  // namespace detail

/// Counts defect peaks in one spectrum.
///
/// Local maxima of the smoothed series with enough prominence become
/// candidates; a candidate counts if the raw loss at its frequency reaches
/// the threshold. Candidates are accepted greedily by raw loss (highest
/// first) and any candidate within the exclusion window of an accepted one
/// is dropped.
inline DefectReport count_defects(const SwapSpectrum& spectrum, const AnalysisParams& params) {
  params.validate();
  spectrum.validate();

  DefectReport report;
  report.params = params;
  report.labels = spectrum.labels;
  report.bandwidth_ghz = spectrum.span_ghz();
  if (spectrum.p_loss.size() < 3) return report;

  const auto smoothed = sg_smooth(spectrum, params.sg_window_mhz, params.sg_order);
  auto candidates = find_prominent_peaks(smoothed, params.prominence_min);
  std::erase_if(candidates, [&](const PeakCandidate& c) {
    return spectrum.p_loss[c.index] < params.counting_threshold;
  });
  std::stable_sort(candidates.begin(), candidates.end(), [&](const PeakCandidate& a, const PeakCandidate& b) {
    return spectrum.p_loss[a.index] > spectrum.p_loss[b.index];
  });

  const double window_ghz = params.exclusion_window_mhz * 1e-3;
  for (const auto& c : candidates) {
    const double f = spectrum.freqs_ghz[c.index];
    const bool crowded = std::any_of(report.peaks.begin(), report.peaks.end(), [&](const DetectedPeak& p) {
      return std::abs(p.frequency_ghz - f) <= window_ghz + detail::kSeparationSlackGhz;
    });
    if (!crowded) report.peaks.push_back({f, spectrum.p_loss[c.index]});
  }
  std::sort(report.peaks.begin(), report.peaks.end(),
            [](const DetectedPeak& a, const DetectedPeak& b) { return a.frequency_ghz < b.frequency_ghz; });
  return report;
}

/// Total peaks over total analyzed bandwidth, defects per GHz.
inline double defect_density(std::span<const DefectReport> reports) {
  if (reports.empty()) throw std::domain_error("defect_density: no reports");
  double peaks = 0.0;
  double bandwidth = 0.0;
  for (const auto& r : reports) {
    peaks += static_cast<double>(r.count());
    bandwidth += r.bandwidth_ghz;
  }
  if (!(bandwidth > 0.0)) throw std::domain_error("defect_density: total bandwidth is zero");
  return peaks / bandwidth;
}

enum class ResampleUnit { qubit, chip };

inline const char* to_string(ResampleUnit u) { return u == ResampleUnit::qubit ? "qubit" : "chip"; }

inline ResampleUnit resample_unit_from_string(const std::string& s) {
  if (s == "qubit") return ResampleUnit::qubit;
  if (s == "chip") return ResampleUnit::chip;
  throw std::invalid_argument("unknown resample unit '" + s + "'");
}

struct BootstrapOptions {
  int n_boot = 10000;
  double ci_level = 0.68;
  std::uint64_t seed = 0;
  ResampleUnit unit = ResampleUnit::qubit;
};

/// Linear-interpolation percentile of a sorted sample, q in [0, 1].
/// Mean as x0 + sum(x - x0) / n, exact when every sample is equal.
inline double stable_mean(std::span<const double> v) {
  if (v.empty()) throw std::domain_error("mean: empty sample");
  double acc = 0.0;
  for (double x : v) acc += x - v[0];
  return v[0] + acc / static_cast<double>(v.size());
}

inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::domain_error("percentile: empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace detail {

struct Unit {
  double peaks = 0.0;
  double bandwidth = 0.0;
};

inline std::vector<Unit> resampling_units(std::span<const DefectReport> reports, ResampleUnit unit) {
  std::vector<Unit> units;
  if (unit == ResampleUnit::qubit) {
    for (const auto& r : reports) units.push_back({static_cast<double>(r.count()), r.bandwidth_ghz});
    return units;
  }
  std::map<std::string, Unit> by_chip;
  for (const auto& r : reports) {
    auto& u = by_chip[r.labels.chip_id];
    u.peaks += static_cast<double>(r.count());
    u.bandwidth += r.bandwidth_ghz;
  }
  for (const auto& [chip, u] : by_chip) units.push_back(u);
  return units;
}

}  // namespace detail

struct Replicates {
  std::vector<double> rho;
  double mean_peaks = 0.0;
};

/// Replicate densities for a bootstrap over resampling units. Replicate b
/// draws from its own stream derive_seed(seed, {b}), so the result does not
/// depend on evaluation order.
inline Replicates bootstrap_replicates(std::span<const DefectReport> reports, const BootstrapOptions& opts) {
  const auto units = detail::resampling_units(reports, opts.unit);
  if (units.size() < 2) {
    throw std::invalid_argument("bootstrap_density: need at least 2 resampling units, got " +
                                std::to_string(units.size()));
  }
  if (opts.n_boot < 100) throw std::invalid_argument("bootstrap_density: n_boot must be >= 100");

  Replicates out;
  out.rho.resize(static_cast<std::size_t>(opts.n_boot));
  std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
  for (int b = 0; b < opts.n_boot; ++b) {
    auto rng = make_rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(b)}));
    double peaks = 0.0;
    double bandwidth = 0.0;
    for (std::size_t k = 0; k < units.size(); ++k) {
      const auto& u = units[pick(rng)];
      peaks += u.peaks;
      bandwidth += u.bandwidth;
    }
    out.rho[static_cast<std::size_t>(b)] = bandwidth > 0.0 ? peaks / bandwidth : 0.0;
    out.mean_peaks += peaks;
  }
  out.mean_peaks /= static_cast<double>(opts.n_boot);
  return out;
}

/// Bootstrap estimate of the defect density: mean of the replicates and the
/// central percentile interval at ci_level. The interval is widened to
/// contain the mean if a strongly skewed replicate distribution puts the
/// mean outside it.
inline DensityEstimate bootstrap_density(std::span<const DefectReport> reports, const BootstrapOptions& opts = {}) {
  if (reports.size() < 2) throw std::invalid_argument("bootstrap_density: need at least 2 reports");
  if (!(opts.ci_level > 0.0 && opts.ci_level < 1.0)) {
    throw std::invalid_argument("bootstrap_density: ci_level must lie in (0, 1)");
  }
  auto boot = bootstrap_replicates(reports, opts);
  auto& reps = boot.rho;

  DensityEstimate est;
  est.n_boot = opts.n_boot;
  est.rho = stable_mean(reps);
  std::sort(reps.begin(), reps.end());
  const double tail = 0.5 * (1.0 - opts.ci_level);
  est.ci_low = std::min(percentile_sorted(reps, tail), est.rho);
  est.ci_high = std::max(percentile_sorted(reps, 1.0 - tail), est.rho);
  est.n_defects_mean = boot.mean_peaks;
  return est;
}

struct SweepRow {
  double threshold = 0.0;
  double rho_point = 0.0;  // plain density of the counted reports
  DensityEstimate estimate;
  std::vector<DefectReport> reports;
};

/// Recounts every spectrum at each threshold, other parameters fixed, and
/// bootstraps the density. The bootstrap seed is shared across thresholds.
inline std::vector<SweepRow> threshold_sweep(std::span<const SwapSpectrum> spectra, std::span<const double> thresholds,
                                             const AnalysisParams& params, const BootstrapOptions& opts = {}) {
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("threshold_sweep: thresholds must lie in (0, 1)");
  }
  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size());
  for (double t : thresholds) {
    AnalysisParams p = params;
    p.counting_threshold = t;
    SweepRow row;
    row.threshold = t;
    row.reports.reserve(spectra.size());
    for (const auto& s : spectra) row.reports.push_back(count_defects(s, p));
    row.rho_point = defect_density(row.reports);
    row.estimate = bootstrap_density(row.reports, opts);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tlscensus::analysis
