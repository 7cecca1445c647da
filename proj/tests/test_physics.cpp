#include "tlscensus/physics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace {

using namespace tlscensus::physics;

constexpr double kTau = 100e-9;

TEST(ZpfField, TypicalTransmonGivesSeveralKilovoltsPerMetre) {
  // 2 * 1.602176634e-19 * 1.3 / (65e-15 * 2e-9)
  EXPECT_NEAR(zpf_field(65e-15, 2e-9, 1.3), 3204.353268, 1e-5);
}

TEST(ZpfField, ZeroFluctuationGivesZeroField) { EXPECT_EQ(zpf_field(65e-15, 2e-9, 0.0), 0.0); }

TEST(ZpfField, ScalesLinearlyAndInversely) {
  const double base = zpf_field(65e-15, 2e-9, 1.3);
  EXPECT_DOUBLE_EQ(zpf_field(65e-15, 4e-9, 1.3), base / 2.0);
  EXPECT_DOUBLE_EQ(zpf_field(130e-15, 2e-9, 1.3), base / 2.0);
  EXPECT_DOUBLE_EQ(zpf_field(65e-15, 2e-9, 2.6), base * 2.0);
}

TEST(ZpfField, RejectsNonPositiveGeometry) {
  EXPECT_THROW(zpf_field(0.0, 2e-9, 1.0), std::domain_error);
  EXPECT_THROW(zpf_field(65e-15, -1e-9, 1.0), std::domain_error);
}

TEST(NZpf, KnownRatios) {
  EXPECT_DOUBLE_EQ(n_zpf(32.0, 1.0), 1.0);
  EXPECT_NEAR(n_zpf(50.0, 1.0), 1.118033988749895, 1e-12);
  EXPECT_NEAR(n_zpf(512.0, 1.0), 2.0, 1e-12);
  EXPECT_THROW(n_zpf(0.0, 1.0), std::domain_error);
}

TEST(CouplingFromLoss, TenPercentIn100nsIsHalfMegahertz) {
  EXPECT_NEAR(coupling_from_loss(0.10, kTau), 0.5120819117478336, 1e-10);
  EXPECT_EQ(coupling_from_loss(0.0, kTau), 0.0);
  EXPECT_NEAR(coupling_from_loss(1.0, kTau), 2.5, 1e-12);
}

TEST(CouplingFromLoss, RejectsProbabilitiesOutsideUnitInterval) {
  EXPECT_THROW(coupling_from_loss(-0.01, kTau), std::domain_error);
  EXPECT_THROW(coupling_from_loss(1.01, kTau), std::domain_error);
}

TEST(LossFromCoupling, InvertsTheCouplingBound) {
  EXPECT_NEAR(loss_from_coupling(coupling_from_loss(0.1, kTau), 0.0, kTau).p_loss, 0.1, 1e-12);
  EXPECT_NEAR(loss_from_coupling(2.5, 0.0, kTau).p_loss, 1.0, 1e-12);
}

TEST(LossFromCoupling, DetunedExample) {
  const auto r = loss_from_coupling(1.0, 2.0, kTau);
  EXPECT_NEAR(r.max_transfer, 0.5, 1e-12);
  EXPECT_NEAR(r.rabi_freq_mhz, 2.0 * std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(r.p_loss, 0.30122385237678473, 1e-12);
}

TEST(LossFromCoupling, RoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> p(1e-6, 1.0 - 1e-6);
  for (int i = 0; i < 1000; ++i) {
    const double target = p(rng);
    const double g = coupling_from_loss(target, kTau);
    EXPECT_NEAR(loss_from_coupling(g, 0.0, kTau).p_loss, target, 1e-10);
  }
}

TEST(LossFromCoupling, MonotoneInCouplingUpToQuarterPeriod) {
  // g tau in [0, pi/2] in angular units: g/2pi <= 1/(4 tau) = 2.5 MHz.
  double prev = -1.0;
  for (int i = 0; i <= 500; ++i) {
    const double g = 2.5 * i / 500.0;
    const double p = loss_from_coupling(g, 0.0, kTau).p_loss;
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(LossFromCoupling, MaxTransferLimitsAndSymmetry) {
  EXPECT_NEAR(loss_from_coupling(1.0, 1e-9, kTau).max_transfer, 1.0, 1e-12);
  EXPECT_LT(loss_from_coupling(1.0, 1e6, kTau).max_transfer, 1e-11);
  for (double d : {0.3, 1.0, 7.0, 40.0}) {
    const auto a = loss_from_coupling(1.3, d, kTau);
    const auto b = loss_from_coupling(1.3, -d, kTau);
    EXPECT_DOUBLE_EQ(a.max_transfer, b.max_transfer);
    EXPECT_NEAR(a.p_loss, b.p_loss, 1e-15);
    EXPECT_GE(a.rabi_freq_mhz, 2.0 * 1.3);
  }
}

TEST(LossFromCoupling, FarDetunedReducesToBackgroundChannel) {
  const double t1 = 20e-6;
  const auto r = loss_from_coupling(1.0, 1e5, kTau, 0.05, t1);
  EXPECT_NEAR(r.p_loss, 1.0 - std::exp(-kTau / t1), 1e-9);
}

TEST(LossFromCoupling, EqualDecayRatesFactorOut) {
  // With Gamma_q == Gamma_tls the damping is a common envelope exp(-Gamma t).
  const double gamma_mhz = 0.2;
  const double t1 = 1.0 / (2.0 * std::numbers::pi * gamma_mhz * 1e6);
  for (double d : {0.0, 1.5, 4.0}) {
    const double coh = loss_from_coupling(1.2, d, kTau).p_loss;
    const double damped = loss_from_coupling(1.2, d, kTau, gamma_mhz, t1).p_loss;
    EXPECT_NEAR(1.0 - damped, std::exp(-kTau / t1) * (1.0 - coh), 1e-12);
  }
}

TEST(LossFromCoupling, ExceptionalPointIsFinite) {
  // z^2 + 4g^2 = 0 at delta = 0 when (Gamma_tls - Gamma_q)/2 = 2g.
  const double g = 0.5;
  const double gamma_mhz = 2.0 * g * 2.0;
  const auto r = loss_from_coupling(g, 0.0, kTau, gamma_mhz);
  EXPECT_TRUE(std::isfinite(r.p_loss));
  EXPECT_GT(r.p_loss, 0.0);
  EXPECT_LT(r.p_loss, 1.0);
  const auto nearby = loss_from_coupling(g, 1e-7, kTau, gamma_mhz);
  EXPECT_NEAR(r.p_loss, nearby.p_loss, 1e-9);
}

TEST(TransmonFreq, KnownValues) {
  EXPECT_NEAR(transmon_freq(20.0, 0.2), 5.45685424949238, 1e-12);
  // 8 ej ec = ec^2 k^2 with ec = 0.25, k = 24 -> ej = 18.
  EXPECT_NEAR(transmon_freq(18.0, 0.25), 0.25 * 23.0, 1e-12);
  EXPECT_NEAR(transmon_freq(2.0, 0.2, 10.0), 1.5888543819998318, 1e-12);
  EXPECT_THROW(transmon_freq(2.0, 0.2), OutOfRangeFrequency);
}

TEST(FluxToFreq, SweetSpotAndQuarterFlux) {
  QubitModel q;
  q.ej_sum_ghz = 20.0;
  q.ec_ghz = 0.2;
  EXPECT_DOUBLE_EQ(flux_to_freq(0.0, q), transmon_freq(20.0, 0.2));
  EXPECT_NEAR(flux_to_freq(0.25, q), transmon_freq(20.0 / std::numbers::sqrt2, 0.2), 1e-12);
  EXPECT_NEAR(flux_to_freq(0.25, q), 4.556828460010884, 1e-12);
  EXPECT_THROW(flux_to_freq(0.5, q), OutOfRangeFrequency);
}

TEST(FluxToFreq, FlatAtSweetSpotPeriodicAndEven) {
  QubitModel q;
  q.squid_asymmetry = 0.3;
  const double h = 1e-5;
  const double slope = (flux_to_freq(h, q) - flux_to_freq(-h, q)) / (2 * h);
  EXPECT_NEAR(slope, 0.0, 1e-9);
  for (double phi : {0.05, 0.13, 0.31, 0.42}) {
    EXPECT_NEAR(flux_to_freq(phi, q), flux_to_freq(-phi, q), 1e-12);
    EXPECT_NEAR(flux_to_freq(phi, q), flux_to_freq(phi + 1.0, q), 1e-12);
    EXPECT_LT(flux_to_freq(phi, q), flux_to_freq(0.0, q));
  }
}

TEST(QubitModel, ValidatesInvariants) {
  QubitModel q;
  EXPECT_NO_THROW(q.validate());
  q.ej_sum_ghz = 2.0;
  EXPECT_THROW(q.validate(), std::domain_error);
  q = QubitModel{};
  q.junction_areas.s_j2_um2 = 0.0;
  EXPECT_THROW(q.validate(), std::domain_error);
  q = QubitModel{};
  q.squid_asymmetry = 1.0;
  EXPECT_THROW(q.validate(), std::domain_error);
}

TEST(MinReachable, MatchesTransmonFloor) {
  QubitModel q;
  q.ej_sum_ghz = 20.0;
  q.ec_ghz = 0.2;
  EXPECT_NEAR(min_reachable_ghz(q), transmon_freq(4.0, 0.2), 1e-12);
  q.squid_asymmetry = 0.5;
  EXPECT_NEAR(min_reachable_ghz(q), transmon_freq(10.0, 0.2), 1e-12);
  EXPECT_NEAR(min_reachable_ghz(q), flux_to_freq(0.5, q), 1e-12);
}

}  // namespace
