#pragma once

// Synthetic swap spectra: defect ensembles drawn as a Poisson point process
// on a frequency band, their slow evolution (spectral drift, sudden
// reconfiguration, thermal cycling) and shot-noise limited readout.

#include "tlscensus/physics.hpp"
#include "tlscensus/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::specgen {

using physics::DefectMode;
using physics::QubitModel;

enum class DistKind { constant, uniform, log_uniform };

/// A scalar distribution with at most two parameters. For `constant` only
/// `lo` is used.
struct Distribution {
  DistKind kind = DistKind::constant;
  double lo = 0.0;
  double hi = 0.0;

  static Distribution constant(double v) { return {DistKind::constant, v, v}; }
  static Distribution uniform(double a, double b) { return {DistKind::uniform, a, b}; }
  static Distribution log_uniform(double a, double b) { return {DistKind::log_uniform, a, b}; }

  void validate() const {
    if (kind == DistKind::constant) {
      if (!(lo >= 0.0)) throw std::domain_error("Distribution: constant value must be >= 0");
      return;
    }
    if (!(lo >= 0.0) || !(hi >= lo)) throw std::domain_error("Distribution: need 0 <= lo <= hi");
    if (kind == DistKind::log_uniform && !(lo > 0.0)) {
      throw std::domain_error("Distribution: log-uniform lower bound must be > 0");
    }
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case DistKind::constant:
        return lo;
      case DistKind::uniform:
        return std::uniform_real_distribution<double>(lo, hi)(rng);
      case DistKind::log_uniform:
        return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
    }
    return lo;
  }

  bool operator==(const Distribution&) const = default;
};

inline const char* to_string(DistKind k) {
  switch (k) {
    case DistKind::constant: return "constant";
    case DistKind::uniform: return "uniform";
    case DistKind::log_uniform: return "log_uniform";
  }
  return "constant";
}

inline DistKind dist_kind_from_string(const std::string& s) {
  if (s == "constant") return DistKind::constant;
  if (s == "uniform") return DistKind::uniform;
  if (s == "log_uniform") return DistKind::log_uniform;
  throw std::invalid_argument("unknown distribution kind '" + s + "'");
}

struct Band {
  double f_min_ghz = 0.0;
  double f_max_ghz = 0.0;
  double width() const { return f_max_ghz - f_min_ghz; }
  bool contains(double f) const { return f >= f_min_ghz && f <= f_max_ghz; }
  bool operator==(const Band&) const = default;
};

struct DefectEnsemble {
  std::vector<DefectMode> defects;
  Band band;
  double density_per_ghz = 0.0;
  Distribution g_distribution = Distribution::log_uniform(0.05, 5.0);
  Distribution gamma_distribution = Distribution::constant(0.0);
  std::uint64_t rng_seed = 0;

  bool operator==(const DefectEnsemble&) const = default;
};

struct SpectrumLabels {
  std::string qubit_id;
  std::string chip_id;
  int cooldown_index = 0;
  bool operator==(const SpectrumLabels&) const = default;
};

struct SwapSpectrum {
  std::vector<double> freqs_ghz;
  std::vector<double> p_loss;
  double tau_s = 100e-9;
  std::optional<std::uint32_t> shots;  // nullopt: exact expectation values
  SpectrumLabels labels;
  std::uint64_t rng_seed = 0;
  std::optional<double> pulse_amplitude;  // V_A record, metadata only

  double step_ghz() const {
    return freqs_ghz.size() < 2 ? 0.0
                                : (freqs_ghz.back() - freqs_ghz.front()) / static_cast<double>(freqs_ghz.size() - 1);
  }
  double span_ghz() const { return freqs_ghz.empty() ? 0.0 : freqs_ghz.back() - freqs_ghz.front(); }

  void validate() const {
    if (freqs_ghz.size() != p_loss.size()) {
      throw std::invalid_argument("SwapSpectrum: frequency and loss columns differ in length");
    }
    for (std::size_t i = 1; i < freqs_ghz.size(); ++i) {
      if (!(freqs_ghz[i] > freqs_ghz[i - 1])) {
        throw std::invalid_argument("SwapSpectrum: frequencies must be strictly increasing (row " +
                                    std::to_string(i) + ")");
      }
    }
    for (std::size_t i = 0; i < p_loss.size(); ++i) {
      if (!(p_loss[i] >= 0.0 && p_loss[i] <= 1.0)) {
        throw std::invalid_argument("SwapSpectrum: p_loss outside [0, 1] at row " + std::to_string(i));
      }
    }
  }
};

inline void validate_band(const Band& band) {
  if (!(band.f_max_ghz > band.f_min_ghz) || !(band.f_min_ghz > 0.0)) {
    throw std::domain_error("empty or invalid frequency band");
  }
}

/// Grid f_min, f_min + step, ... up to f_max (inclusive within 1e-9 GHz).
inline std::vector<double> uniform_grid(const Band& band, double step_mhz) {
  validate_band(band);
  if (!(step_mhz > 0.0)) throw std::domain_error("uniform_grid: step must be positive");
  const double step = step_mhz * 1e-3;
  const auto n = static_cast<std::size_t>(std::floor(band.width() / step + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = band.f_min_ghz + step * static_cast<double>(i);
  return grid;
}

inline DefectMode draw_defect(const DefectEnsemble& ens, double freq_ghz, Rng& rng) {
  DefectMode d;
  d.frequency_ghz = freq_ghz;
  d.g_mhz = ens.g_distribution.sample(rng);
  d.gamma_mhz = ens.gamma_distribution.sample(rng);
  return d;
}

/// Poisson(density * bandwidth) defects with i.i.d. uniform frequencies.
inline DefectEnsemble sample_defect_ensemble(const Band& band, double density_per_ghz, const Distribution& g_dist,
                                             const Distribution& gamma_dist, std::uint64_t seed) {
  validate_band(band);
  if (!(density_per_ghz >= 0.0)) throw std::domain_error("sample_defect_ensemble: density must be >= 0");
  g_dist.validate();
  gamma_dist.validate();

  DefectEnsemble ens;
  ens.band = band;
  ens.density_per_ghz = density_per_ghz;
  ens.g_distribution = g_dist;
  ens.gamma_distribution = gamma_dist;
  ens.rng_seed = seed;

  auto rng = make_rng(seed);
  const double mean = density_per_ghz * band.width();
  const int count = mean > 0.0 ? std::poisson_distribution<int>(mean)(rng) : 0;
  std::uniform_real_distribution<double> freq(band.f_min_ghz, band.f_max_ghz);
  ens.defects.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double f = freq(rng);
    ens.defects.push_back(draw_defect(ens, f, rng));
  }
  return ens;
}

/// Probability of losing the excitation at one interaction frequency.
/// Defects act independently: P_survive = (1 - p_bg) * prod_i (1 - p_i).
inline double true_loss(const QubitModel& qubit, const DefectEnsemble& ens, double freq_ghz, double tau_s) {
  const double t1 = qubit.t1_background.at(freq_ghz);
  double survive = std::isinf(t1) ? 1.0 : std::exp(-tau_s / t1);
  for (const auto& d : ens.defects) {
    const double detuning_mhz = (freq_ghz - d.frequency_ghz) * 1e3;
    survive *= 1.0 - physics::loss_from_coupling(d.g_mhz, detuning_mhz, tau_s, d.gamma_mhz).p_loss;
  }
  return std::clamp(1.0 - survive, 0.0, 1.0);
}

/// Swap spectrum sampled on `grid`. With finite shots each point is
/// Binomial(shots, p) / shots.
inline SwapSpectrum generate_spectrum(const QubitModel& qubit, const DefectEnsemble& ens, std::span<const double> grid,
                                      double tau_s, std::optional<std::uint32_t> shots, std::uint64_t seed,
                                      SpectrumLabels labels = {}) {
  qubit.validate();
  if (!(tau_s > 0.0)) throw std::domain_error("generate_spectrum: tau must be positive");
  if (shots && *shots == 0) throw std::domain_error("generate_spectrum: shots must be >= 1");

  const double f_hi = physics::sweet_spot_ghz(qubit) + 1e-9;
  const double f_lo = physics::min_reachable_ghz(qubit) - 1e-9;
  std::vector<std::size_t> offending;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > f_hi || grid[i] < f_lo) offending.push_back(i);
  }
  if (!offending.empty()) {
    std::ostringstream msg;
    msg << "generate_spectrum: " << offending.size() << " grid point(s) outside reachable band [" << f_lo << ", "
        << f_hi << "] GHz:";
    for (std::size_t k = 0; k < std::min<std::size_t>(offending.size(), 10); ++k) {
      msg << ' ' << grid[offending[k]];
    }
    if (offending.size() > 10) msg << " ...";
    throw std::domain_error(msg.str());
  }

  SwapSpectrum out;
  out.freqs_ghz.assign(grid.begin(), grid.end());
  out.p_loss.resize(grid.size());
  out.tau_s = tau_s;
  out.shots = shots;
  out.labels = std::move(labels);
  out.rng_seed = seed;

  auto rng = make_rng(seed);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = true_loss(qubit, ens, grid[i], tau_s);
    if (shots) {
      std::binomial_distribution<std::uint32_t> readout(*shots, p);
      out.p_loss[i] = static_cast<double>(readout(rng)) / static_cast<double>(*shots);
    } else {
      out.p_loss[i] = p;
    }
  }
  return out;
}

/// Folds f back into [lo, hi] by mirror reflection at the edges.
inline double reflect_into(double f, double lo, double hi) {
  const double w = hi - lo;
  double x = std::fmod(f - lo, 2.0 * w);
  if (x < 0.0) x += 2.0 * w;
  return x <= w ? lo + x : hi - (x - w);
}

/// Spectral diffusion over `days`: a Gaussian random walk with per-day
/// standard deviation drift_sigma_mhz, taken in whole-day steps plus a
/// fractional remainder, and with probability 1 - exp(-rate * days) a single
/// reconfiguration that re-draws `reconfig_fraction` of the frequencies.
inline DefectEnsemble evolve_day(const DefectEnsemble& ens, double drift_sigma_mhz, double reconfig_rate_per_day,
                                 double days, std::uint64_t seed, double reconfig_fraction = 0.5) {
  if (!(drift_sigma_mhz >= 0.0) || !(reconfig_rate_per_day >= 0.0) || !(days >= 0.0) ||
      !(reconfig_fraction >= 0.0 && reconfig_fraction <= 1.0)) {
    throw std::domain_error("evolve_day: parameters must be non-negative (fraction in [0, 1])");
  }
  DefectEnsemble out = ens;
  if (days == 0.0 || out.defects.empty()) return out;

  auto rng = make_rng(seed);
  const double lo = out.band.f_min_ghz;
  const double hi = out.band.f_max_ghz;
  const double whole = std::floor(days);
  const double frac = days - whole;
  std::normal_distribution<double> step(0.0, 1.0);
  for (auto& d : out.defects) {
    double f = d.frequency_ghz;
    for (int k = 0; k < static_cast<int>(whole); ++k) {
      f = reflect_into(f + drift_sigma_mhz * 1e-3 * step(rng), lo, hi);
    }
    if (frac > 0.0) f = reflect_into(f + drift_sigma_mhz * 1e-3 * std::sqrt(frac) * step(rng), lo, hi);
    d.frequency_ghz = f;
  }

  const double p_event = 1.0 - std::exp(-reconfig_rate_per_day * days);
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_event) {
    const auto n = out.defects.size();
    const auto n_move = static_cast<std::size_t>(std::lround(reconfig_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_real_distribution<double> freq(lo, hi);
    for (std::size_t k = 0; k < n_move; ++k) out.defects[idx[k]].frequency_ghz = freq(rng);
  }
  return out;
}

/// Warm-up and re-cool: same number of defects, fresh frequencies and
/// couplings drawn from the ensemble's own distributions.
inline DefectEnsemble thermal_cycle(const DefectEnsemble& ens, std::uint64_t seed) {
  DefectEnsemble out = ens;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> freq(ens.band.f_min_ghz, ens.band.f_max_ghz);
  for (auto& d : out.defects) d = draw_defect(ens, freq(rng), rng);
  return out;
}

}  // namespace tlscensus::specgen
