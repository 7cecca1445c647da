#pragma once

// Cross-chip statistics: junction-area scaling fit, qubit quality factors,
// device-table aggregation and grouped density comparisons.

#include "tlscensus/analysis.hpp"
#include "tlscensus/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::fitstats {

using analysis::DefectReport;

/// Q = omega * T1 with omega = 2 pi f.
inline double quality_factor(double freq_ghz, double t1_s) {
  if (!(freq_ghz > 0.0) || !(t1_s > 0.0)) {
    throw std::domain_error("quality_factor: frequency and T1 must be positive");
  }
  return physics::ghz_to_angular(freq_ghz) * t1_s;
}

struct AreaPoint {
  double s_total_um2 = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  std::string cohort_label;
};

/// Symmetrized bootstrap half-width, used as the fit uncertainty.
inline AreaPoint area_point(double s_total_um2, const analysis::DensityEstimate& est, std::string label) {
  return {s_total_um2, est.rho, 0.5 * (est.ci_high - est.ci_low), std::move(label)};
}

struct LineFit {
  double alpha = 0.0;  // defects / (GHz um^2)
  double beta = 0.0;   // defects / GHz
  double alpha_err = 0.0;
  double beta_err = 0.0;
  std::optional<double> chi2_red;  // absent for two points
  bool unit_weights = false;       // set when no usable sigmas were supplied
};

enum class FitMode { weighted, unweighted };

/// Straight-line least squares rho = alpha * S + beta.
///
/// Weighted mode uses 1/sigma^2 and reports parameter errors from the
/// inverse normal matrix. If every sigma is zero, or in unweighted mode,
/// unit weights are used and the covariance is scaled by the residual
/// variance (for n > 2).
inline LineFit fit_area_scaling(std::span<const AreaPoint> points, FitMode mode = FitMode::weighted) {
  if (points.size() < 2) throw std::invalid_argument("fit_area_scaling: need at least 2 points");
  std::set<double> abscissae;
  for (const auto& p : points) {
    if (!(p.s_total_um2 > 0.0)) throw std::invalid_argument("fit_area_scaling: s_total must be positive");
    if (!(p.sigma >= 0.0)) throw std::invalid_argument("fit_area_scaling: sigma must be non-negative");
    abscissae.insert(p.s_total_um2);
  }
  if (abscissae.size() < 2) throw std::invalid_argument("fit_area_scaling: degenerate abscissa (all S equal)");

  LineFit fit;
  const bool all_zero = std::all_of(points.begin(), points.end(), [](const AreaPoint& p) { return p.sigma == 0.0; });
  fit.unit_weights = mode == FitMode::unweighted || all_zero;
  if (!fit.unit_weights) {
    for (const auto& p : points) {
      if (!(p.sigma > 0.0)) {
        throw std::invalid_argument("fit_area_scaling: cohort '" + p.cohort_label +
                                    "' has zero sigma while others do not");
      }
    }
  }

  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double w = fit.unit_weights ? 1.0 : 1.0 / (p.sigma * p.sigma);
    sw += w;
    sx += w * p.s_total_um2;
    sy += w * p.rho;
    sxx += w * p.s_total_um2 * p.s_total_um2;
    sxy += w * p.s_total_um2 * p.rho;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw std::invalid_argument("fit_area_scaling: singular normal equations");
  fit.alpha = (sw * sxy - sx * sy) / det;
  fit.beta = (sxx * sy - sx * sxy) / det;

  double chi2 = 0.0;
  for (const auto& p : points) {
    const double w = fit.unit_weights ? 1.0 : 1.0 / (p.sigma * p.sigma);
    const double r = p.rho - (fit.alpha * p.s_total_um2 + fit.beta);
    chi2 += w * r * r;
  }
  const auto dof = static_cast<double>(points.size()) - 2.0;
  if (dof > 0.0) fit.chi2_red = chi2 / dof;

  double var_alpha = sw / det;
  double var_beta = sxx / det;
  if (fit.unit_weights) {
    const double s2 = fit.chi2_red.value_or(0.0);
    var_alpha *= s2;
    var_beta *= s2;
  }
  fit.alpha_err = std::sqrt(var_alpha);
  fit.beta_err = std::sqrt(var_beta);
  return fit;
}

enum class CleaningLabel { A, B, C1, C2, other };

inline const char* to_string(CleaningLabel c) {
  switch (c) {
    case CleaningLabel::A: return "A";
    case CleaningLabel::B: return "B";
    case CleaningLabel::C1: return "C1";
    case CleaningLabel::C2: return "C2";
    case CleaningLabel::other: return "other";
  }
  return "other";
}

inline CleaningLabel cleaning_from_string(const std::string& s) {
  if (s == "A") return CleaningLabel::A;
  if (s == "B") return CleaningLabel::B;
  if (s == "C1") return CleaningLabel::C1;
  if (s == "C2") return CleaningLabel::C2;
  if (s == "other") return CleaningLabel::other;
  throw std::invalid_argument("unknown cleaning label '" + s + "' (expected A, B, C1, C2 or other)");
}

struct QubitRecord {
  std::string qubit_id;
  double freq_ghz = 0.0;  // idle (sweet-spot) frequency
  double t1_us = 0.0;
  double s_total_um2 = 0.0;
};

struct ChipDataset {
  std::string chip_label;
  CleaningLabel cleaning = CleaningLabel::other;
  double jc_ua_per_um2 = 0.0;
  std::vector<QubitRecord> qubits;
};

struct ChipSummary {
  std::string chip_label;
  CleaningLabel cleaning = CleaningLabel::other;
  double jc_ua_per_um2 = 0.0;
  int n_qubits = 0;
  double mean_freq_ghz = 0.0;
  std::optional<double> sd_freq_ghz;  // absent for a single qubit
  double mean_t1_us = 0.0;
  std::optional<double> sd_t1_us;
  std::size_t n_defects = 0;
  double bandwidth_ghz = 0.0;
};

namespace detail {

struct MeanSd {
  double mean = 0.0;
  std::optional<double> sd;
};

// Sample standard deviation (n - 1).
inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

}  // namespace detail

/// One device-table row from a chip and the reports of its qubits.
inline ChipSummary aggregate_chip(const ChipDataset& dataset, std::span<const DefectReport> reports) {
  if (dataset.qubits.empty()) {
    throw std::invalid_argument("aggregate_chip: chip '" + dataset.chip_label + "' has no qubits");
  }
  std::set<std::string> ids;
  for (const auto& q : dataset.qubits) ids.insert(q.qubit_id);

  std::vector<std::string> orphans;
  for (const auto& r : reports) {
    if (r.labels.chip_id != dataset.chip_label || !ids.contains(r.labels.qubit_id)) {
      orphans.push_back(r.labels.chip_id + "/" + r.labels.qubit_id);
    }
  }
  if (!orphans.empty()) {
    std::string msg = "aggregate_chip: reports do not belong to chip '" + dataset.chip_label + "':";
    for (const auto& o : orphans) msg += " " + o;
    throw std::invalid_argument(msg);
  }

  ChipSummary s;
  s.chip_label = dataset.chip_label;
  s.cleaning = dataset.cleaning;
  s.jc_ua_per_um2 = dataset.jc_ua_per_um2;
  s.n_qubits = static_cast<int>(dataset.qubits.size());
  std::vector<double> freqs, t1s;
  for (const auto& q : dataset.qubits) {
    freqs.push_back(q.freq_ghz);
    t1s.push_back(q.t1_us);
  }
  const auto f = detail::mean_sd(freqs);
  const auto t = detail::mean_sd(t1s);
  s.mean_freq_ghz = f.mean;
  s.sd_freq_ghz = f.sd;
  s.mean_t1_us = t.mean;
  s.sd_t1_us = t.sd;
  for (const auto& r : reports) {
    s.n_defects += r.count();
    s.bandwidth_ghz += r.bandwidth_ghz;
  }
  return s;
}

struct DifferenceEstimate {
  double diff = 0.0;  // mean of rho_a - rho_b over replicates
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_boot = 0;
};

/// Two-sample bootstrap of rho(group_a) - rho(group_b). Each group is
/// resampled independently; the central percentile interval is reported
/// without a significance verdict.
inline DifferenceEstimate bootstrap_density_difference(std::span<const DefectReport> group_a,
                                                       std::span<const DefectReport> group_b,
                                                       const analysis::BootstrapOptions& opts = {}) {
  auto opts_a = opts;
  auto opts_b = opts;
  opts_a.seed = derive_seed(opts.seed, {0});
  opts_b.seed = derive_seed(opts.seed, {1});
  const auto a = analysis::bootstrap_replicates(group_a, opts_a);
  const auto b = analysis::bootstrap_replicates(group_b, opts_b);
  std::vector<double> d(a.rho.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.rho[i] - b.rho[i];

  DifferenceEstimate out;
  out.n_boot = opts.n_boot;
  out.diff = analysis::stable_mean(d);
  std::sort(d.begin(), d.end());
  const double tail = 0.5 * (1.0 - opts.ci_level);
  out.ci_low = analysis::percentile_sorted(d, tail);
  out.ci_high = analysis::percentile_sorted(d, 1.0 - tail);
  return out;
}

}  // namespace tlscensus::fitstats
