#pragma once

// Closed-form relations for a flux-tunable transmon exchanging a single
// excitation with a two-level defect.
//
// Unit conventions: frequencies and rates are stored as cyclic values
// (GHz for qubit energies, MHz for couplings, detunings and defect
// relaxation rates). A defect relaxation "rate" gamma_mhz denotes the
// energy decay rate Gamma = 2*pi*gamma_mhz*1e6 s^-1. Angular conversion
// happens only inside the functions below.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace tlscensus::physics {

inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultTransmonFloor = 20.0;

inline double mhz_to_angular(double mhz) { return kTwoPi * mhz * 1e6; }
inline double ghz_to_angular(double ghz) { return kTwoPi * ghz * 1e9; }
inline double gamma_mhz_to_rate(double gamma_mhz) { return kTwoPi * gamma_mhz * 1e6; }
inline double t1_to_rate(double t1_s) { return std::isinf(t1_s) ? 0.0 : 1.0 / t1_s; }

class OutOfRangeFrequency : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Qubit energy relaxation time as a function of qubit frequency.
class T1Background {
 public:
  T1Background() = default;
  static T1Background constant(double t1_s) {
    T1Background t;
    t.constant_s_ = t1_s;
    return t;
  }
  static T1Background from_function(std::function<double(double)> t1_of_freq_ghz) {
    T1Background t;
    t.fn_ = std::move(t1_of_freq_ghz);
    return t;
  }

  double at(double freq_ghz) const { return fn_ ? fn_(freq_ghz) : constant_s_; }
  bool is_constant() const { return !fn_; }
  double constant_value() const { return constant_s_; }

 private:
  double constant_s_ = kInfinity;
  std::function<double(double)> fn_;
};

struct JunctionAreas {
  double s_j1_um2 = 0.05;
  double s_j2_um2 = 0.05;
  double total() const { return s_j1_um2 + s_j2_um2; }
};

struct QubitModel {
  double ej_sum_ghz = 22.0;
  double ec_ghz = 0.2;
  double c_total_f = 65e-15;
  double d_barrier_m = 2e-9;
  T1Background t1_background = T1Background::constant(kInfinity);
  JunctionAreas junction_areas{};
  double squid_asymmetry = 0.0;
  double transmon_floor = kDefaultTransmonFloor;

  void validate() const {
    if (!(ej_sum_ghz > 0.0) || !(ec_ghz > 0.0)) {
      throw std::domain_error("QubitModel: E_J and E_C must be positive");
    }
    if (ej_sum_ghz / ec_ghz < transmon_floor) {
      throw std::domain_error("QubitModel: E_J/E_C = " + std::to_string(ej_sum_ghz / ec_ghz) +
                              " below transmon floor " + std::to_string(transmon_floor));
    }
    if (!(c_total_f > 0.0) || !(d_barrier_m > 0.0)) {
      throw std::domain_error("QubitModel: capacitance and barrier thickness must be positive");
    }
    if (!(junction_areas.s_j1_um2 > 0.0) || !(junction_areas.s_j2_um2 > 0.0)) {
      throw std::domain_error("QubitModel: junction areas must be positive");
    }
    if (!(squid_asymmetry >= 0.0 && squid_asymmetry < 1.0)) {
      throw std::domain_error("QubitModel: SQUID asymmetry must lie in [0, 1)");
    }
  }
};

struct DefectMode {
  double frequency_ghz = 0.0;
  double g_mhz = 0.0;
  double gamma_mhz = 0.0;
  double dipole_scale = 1.0;

  void validate() const {
    if (!(frequency_ghz > 0.0) || !(g_mhz >= 0.0) || !(gamma_mhz >= 0.0)) {
      throw std::domain_error("DefectMode: need frequency > 0, g >= 0, gamma >= 0");
    }
  }
  bool operator==(const DefectMode&) const = default;
};

struct ExchangeResult {
  double p_loss = 0.0;
  double rabi_freq_mhz = 0.0;
  double max_transfer = 0.0;
};

/// Zero-point electric field across the junction barrier, 2 e n_zpf / (C d), in V/m.
inline double zpf_field(double c_total_f, double d_barrier_m, double n_zpf) {
  if (!(c_total_f > 0.0) || !(d_barrier_m > 0.0)) {
    throw std::domain_error("zpf_field: capacitance and barrier thickness must be positive");
  }
  if (!(n_zpf >= 0.0)) {
    throw std::domain_error("zpf_field: n_zpf must be non-negative");
  }
  return 2.0 * kElementaryCharge * n_zpf / (c_total_f * d_barrier_m);
}

/// Charge zero-point fluctuation of a transmon, (E_J / 32 E_C)^(1/4).
inline double n_zpf(double ej_ghz, double ec_ghz) {
  if (!(ej_ghz > 0.0) || !(ec_ghz > 0.0)) {
    throw std::domain_error("n_zpf: E_J and E_C must be positive");
  }
  return std::pow(ej_ghz / (32.0 * ec_ghz), 0.25);
}

/// Smallest coupling g/2pi (MHz) that produces loss p_loss in time tau
/// through purely coherent exchange.
inline double coupling_from_loss(double p_loss, double tau_s) {
  if (!(p_loss >= 0.0 && p_loss <= 1.0)) {
    throw std::domain_error("coupling_from_loss: p_loss must lie in [0, 1]");
  }
  if (!(tau_s > 0.0)) {
    throw std::domain_error("coupling_from_loss: tau must be positive");
  }
  return std::acos(1.0 - 2.0 * p_loss) / (4.0 * std::numbers::pi * tau_s) * 1e-6;
}

namespace detail {

// sin(z)/z, continuous through z = 0.
inline std::complex<double> sinc(std::complex<double> z) {
  if (std::abs(z) < 1e-4) {
    const auto z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sin(z) / z;
}

}  // namespace detail

/// Qubit population lost after dwelling for tau next to one defect.
///
/// Solves the two-amplitude problem {|e,0>, |g,1>} with qubit and defect
/// energy decay entering as anti-Hermitian diagonal terms. With
/// z = delta - i (Gamma_q - Gamma_tls)/2 and Omega = sqrt(z^2 + 4 g^2),
///   c_e(tau) = exp(-(Gamma_q + Gamma_tls) tau / 4) [cos(Omega tau/2) - i (z/Omega) sin(Omega tau/2)],
/// and p_loss = 1 - |c_e|^2. In the coherent limit this is
/// A sin^2(Omega tau / 2) with A = (2g)^2 / ((2g)^2 + delta^2); far off
/// resonance it reduces to the background channel 1 - exp(-tau/T1).
///
/// rabi_freq_mhz and max_transfer report the coherent quantities.
inline ExchangeResult loss_from_coupling(double g_mhz, double detuning_mhz, double tau_s,
                                         double gamma1_tls_mhz = 0.0,
                                         double t1_qubit_s = kInfinity) {
  if (!(g_mhz >= 0.0)) throw std::domain_error("loss_from_coupling: g must be non-negative");
  if (!(tau_s > 0.0)) throw std::domain_error("loss_from_coupling: tau must be positive");
  if (!(gamma1_tls_mhz >= 0.0)) throw std::domain_error("loss_from_coupling: gamma must be non-negative");
  if (!(t1_qubit_s > 0.0)) throw std::domain_error("loss_from_coupling: T1 must be positive");

  const double g = mhz_to_angular(g_mhz);
  const double delta = mhz_to_angular(detuning_mhz);
  const double gamma_q = t1_to_rate(t1_qubit_s);
  const double gamma_t = gamma_mhz_to_rate(gamma1_tls_mhz);

  ExchangeResult out;
  const double two_g_sq = 4.0 * g * g;
  const double omega_coh = std::sqrt(two_g_sq + delta * delta);
  out.rabi_freq_mhz = omega_coh / kTwoPi * 1e-6;
  out.max_transfer = omega_coh > 0.0 ? two_g_sq / (omega_coh * omega_coh) : 0.0;

  if (gamma_q == 0.0 && gamma_t == 0.0) {
    const double s = std::sin(0.5 * omega_coh * tau_s);
    out.p_loss = out.max_transfer * s * s;
    return out;
  }

  using cd = std::complex<double>;
  const cd z(delta, -0.5 * (gamma_q - gamma_t));
  const cd omega = std::sqrt(z * z + two_g_sq);
  const cd half = 0.5 * omega * tau_s;
  const cd ce = std::exp(-0.25 * (gamma_q + gamma_t) * tau_s) *
                (std::cos(half) - cd(0.0, 1.0) * z * (0.5 * tau_s) * detail::sinc(half));
  out.p_loss = std::clamp(1.0 - std::norm(ce), 0.0, 1.0);
  return out;
}

/// Transition frequency of a transmon, sqrt(8 E_J E_C) - E_C.
inline double transmon_freq(double ej_ghz, double ec_ghz, double floor = kDefaultTransmonFloor) {
  if (!(ej_ghz > 0.0) || !(ec_ghz > 0.0)) {
    throw std::domain_error("transmon_freq: E_J and E_C must be positive");
  }
  if (ej_ghz / ec_ghz < floor) {
    throw OutOfRangeFrequency("transmon_freq: E_J/E_C = " + std::to_string(ej_ghz / ec_ghz) +
                              " outside transmon regime (floor " + std::to_string(floor) + ")");
  }
  return std::sqrt(8.0 * ej_ghz * ec_ghz) - ec_ghz;
}

inline double effective_ej(double phi, const QubitModel& qubit) {
  const double c = std::cos(std::numbers::pi * phi);
  const double s = std::sin(std::numbers::pi * phi);
  const double d = qubit.squid_asymmetry;
  return qubit.ej_sum_ghz * std::sqrt(c * c + d * d * s * s);
}

/// Qubit frequency at flux phi (units of the flux quantum); maximal at phi = 0.
inline double flux_to_freq(double phi, const QubitModel& qubit) {
  qubit.validate();
  return transmon_freq(effective_ej(phi, qubit), qubit.ec_ghz, qubit.transmon_floor);
}

inline double sweet_spot_ghz(const QubitModel& qubit) { return flux_to_freq(0.0, qubit); }

/// Lowest frequency reachable while staying in the transmon regime.
inline double min_reachable_ghz(const QubitModel& qubit) {
  qubit.validate();
  const double ej_min = std::max(qubit.ej_sum_ghz * qubit.squid_asymmetry,
                                 qubit.transmon_floor * qubit.ec_ghz);
  return std::sqrt(8.0 * ej_min * qubit.ec_ghz) - qubit.ec_ghz;
}

}  // namespace tlscensus::physics
