#pragma once

// Reference integrator for one qubit coupled to up to eight defects in the
// single-excitation manifold. Amplitude damping enters as anti-Hermitian
// diagonal terms; the population that leaks out is integrated alongside the
// amplitudes so that the probability budget can be audited step by step.

#include "tlscensus/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::oracle {

using physics::DefectMode;

inline constexpr std::size_t kMaxDefects = 8;

struct CoupledSystem {
  double qubit_freq_ghz = 5.0;
  std::vector<DefectMode> defects;
  double t1_qubit_s = physics::kInfinity;
  double frame_ghz = 5.0;

  void validate() const {
    if (defects.size() > kMaxDefects) {
      throw std::invalid_argument("CoupledSystem: at most 8 defects supported, got " +
                                  std::to_string(defects.size()));
    }
    if (!(t1_qubit_s > 0.0)) throw std::invalid_argument("CoupledSystem: T1 must be positive");
    for (const auto& d : defects) {
      if (!std::isfinite(d.g_mhz) || !std::isfinite(d.gamma_mhz) || d.g_mhz < 0.0 || d.gamma_mhz < 0.0) {
        throw std::invalid_argument("CoupledSystem: defect rates must be finite and non-negative");
      }
    }
  }
};

struct Trajectory {
  std::vector<double> time_s;
  std::vector<double> p_excited;
  std::vector<double> p_lost;
  // max over samples of |sum of populations + lost - 1|
  double max_norm_error = 0.0;
  std::vector<double> final_defect_populations;
};

namespace detail {

using cd = std::complex<double>;

struct Generator {
  std::size_t dim = 1;
  std::array<cd, kMaxDefects + 1> diag{};     // -i * (omega - i Gamma/2)
  std::array<double, kMaxDefects + 1> decay{};  // Gamma per level
  std::array<cd, kMaxDefects + 1> coupling{};   // -i * g for qubit <-> defect k (index k >= 1)
};

struct State {
  std::array<cd, kMaxDefects + 1> amp{};
  double lost = 0.0;
};

inline Generator build(const CoupledSystem& sys) {
  Generator gen;
  gen.dim = sys.defects.size() + 1;
  const cd minus_i(0.0, -1.0);
  const double gq = physics::t1_to_rate(sys.t1_qubit_s);
  gen.decay[0] = gq;
  gen.diag[0] = minus_i * cd(physics::ghz_to_angular(sys.qubit_freq_ghz - sys.frame_ghz), -0.5 * gq);
  for (std::size_t k = 0; k < sys.defects.size(); ++k) {
    const auto& d = sys.defects[k];
    const double gk = physics::gamma_mhz_to_rate(d.gamma_mhz);
    gen.decay[k + 1] = gk;
    gen.diag[k + 1] = minus_i * cd(physics::ghz_to_angular(d.frequency_ghz - sys.frame_ghz), -0.5 * gk);
    gen.coupling[k + 1] = minus_i * physics::mhz_to_angular(d.g_mhz);
  }
  return gen;
}

inline State derivative(const Generator& gen, const State& s) {
  State out;
  out.amp[0] = gen.diag[0] * s.amp[0];
  double leak = gen.decay[0] * std::norm(s.amp[0]);
  for (std::size_t k = 1; k < gen.dim; ++k) {
    out.amp[0] += gen.coupling[k] * s.amp[k];
    out.amp[k] = gen.diag[k] * s.amp[k] + gen.coupling[k] * s.amp[0];
    leak += gen.decay[k] * std::norm(s.amp[k]);
  }
  out.lost = leak;
  return out;
}

inline State axpy(const State& s, double h, const State& d, std::size_t dim) {
  State out;
  for (std::size_t k = 0; k < dim; ++k) out.amp[k] = s.amp[k] + h * d.amp[k];
  out.lost = s.lost + h * d.lost;
  return out;
}

inline void rk4_step(const Generator& gen, State& s, double h) {
  const State k1 = derivative(gen, s);
  const State k2 = derivative(gen, axpy(s, 0.5 * h, k1, gen.dim));
  const State k3 = derivative(gen, axpy(s, 0.5 * h, k2, gen.dim));
  const State k4 = derivative(gen, axpy(s, h, k3, gen.dim));
  for (std::size_t k = 0; k < gen.dim; ++k) {
    s.amp[k] += (h / 6.0) * (k1.amp[k] + 2.0 * k2.amp[k] + 2.0 * k3.amp[k] + k4.amp[k]);
  }
  s.lost += (h / 6.0) * (k1.lost + 2.0 * k2.lost + 2.0 * k3.lost + k4.lost);
}

inline double budget(const State& s, std::size_t dim) {
  double total = s.lost;
  for (std::size_t k = 0; k < dim; ++k) total += std::norm(s.amp[k]);
  return total;
}

}  // namespace detail

/// Largest angular frequency scale in the generator (rad/s): a Gershgorin
/// style bound over level offsets, total coupling and decay rates.
inline double max_rate_scale(const CoupledSystem& sys) {
  double offset = std::abs(physics::ghz_to_angular(sys.qubit_freq_ghz - sys.frame_ghz));
  double g_sq = 0.0;
  double decay = physics::t1_to_rate(sys.t1_qubit_s);
  for (const auto& d : sys.defects) {
    offset = std::max(offset, std::abs(physics::ghz_to_angular(d.frequency_ghz - sys.frame_ghz)));
    const double g = physics::mhz_to_angular(d.g_mhz);
    g_sq += g * g;
    decay = std::max(decay, physics::gamma_mhz_to_rate(d.gamma_mhz));
  }
  return offset + 2.0 * std::sqrt(g_sq) + decay;
}

/// Integrates the qubit from |e> for time tau with a fixed-step RK4 scheme.
/// The step actually used is tau / ceil(tau / dt) <= dt.
inline Trajectory oracle_trajectory(const CoupledSystem& sys, double tau_s, double dt_s) {
  sys.validate();
  if (!(tau_s > 0.0)) throw std::invalid_argument("oracle_trajectory: tau must be positive");
  const double scale = max_rate_scale(sys);
  if (!(dt_s > 0.0) || (scale > 0.0 && dt_s > 1.0 / (20.0 * scale))) {
    std::ostringstream msg;
    msg << "oracle_trajectory: step " << dt_s << " s violates dt <= 1/(20 * Omega_max) = "
        << (scale > 0.0 ? 1.0 / (20.0 * scale) : physics::kInfinity) << " s (Omega_max = " << scale
        << " rad/s)";
    throw std::invalid_argument(msg.str());
  }

  const auto steps = static_cast<std::size_t>(std::ceil(tau_s / dt_s - 1e-9));
  const double h = tau_s / static_cast<double>(steps);
  const auto gen = detail::build(sys);

  detail::State s;
  s.amp[0] = 1.0;

  Trajectory traj;
  traj.time_s.reserve(steps + 1);
  traj.p_excited.reserve(steps + 1);
  traj.p_lost.reserve(steps + 1);
  auto record = [&](std::size_t i) {
    traj.time_s.push_back(h * static_cast<double>(i));
    traj.p_excited.push_back(std::norm(s.amp[0]));
    traj.p_lost.push_back(s.lost);
    traj.max_norm_error = std::max(traj.max_norm_error, std::abs(detail::budget(s, gen.dim) - 1.0));
  };
  record(0);
  for (std::size_t i = 1; i <= steps; ++i) {
    detail::rk4_step(gen, s, h);
    record(i);
  }
  traj.final_defect_populations.reserve(sys.defects.size());
  for (std::size_t k = 1; k < gen.dim; ++k) traj.final_defect_populations.push_back(std::norm(s.amp[k]));
  return traj;
}

/// Population loss 1 - P_e(tau) after an ideal square excursion of the
/// qubit to omega_target. The step is chosen at 1/40 of the fastest scale.
inline double oracle_swap(CoupledSystem sys, double omega_target_ghz, double tau_s) {
  sys.qubit_freq_ghz = omega_target_ghz;
  sys.frame_ghz = omega_target_ghz;
  const double scale = max_rate_scale(sys);
  double dt = tau_s / 400.0;
  if (scale > 0.0) dt = std::min(dt, 1.0 / (40.0 * scale));
  const auto traj = oracle_trajectory(sys, tau_s, dt);
  return 1.0 - traj.p_excited.back();
}

}  // namespace tlscensus::oracle
