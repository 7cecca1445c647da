#pragma once

// Run configuration. JSON with units in key names; every chip inherits the
// "defaults" block and may override any qubit or ensemble key. The expanded
// form (defaults merged into every chip, every optional key present) is what
// simulate persists into the dataset.

#include "tlscensus/analysis.hpp"
#include "tlscensus/fitstats.hpp"
#include "tlscensus/io.hpp"
#include "tlscensus/physics.hpp"
#include "tlscensus/specgen.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::config {

using io::json;

/// Invalid configuration; the message starts with "<file>:<line>:" when the
/// offending key can be located.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QubitSpec {
  double ej_sum_ghz = 22.0;
  double ej_sum_sd_ghz = 0.0;  // per-qubit spread of the junction energy
  double ec_ghz = 0.2;
  double capacitance_ff = 65.0;
  double barrier_thickness_nm = 2.0;
  double t1_us = 30.0;
  double squid_asymmetry = 0.0;
  double transmon_floor = physics::kDefaultTransmonFloor;
  double junction_area_um2[2] = {0.05, 0.05};

  double s_total_um2() const { return junction_area_um2[0] + junction_area_um2[1]; }

  physics::QubitModel model(double ej_sum_ghz_actual) const {
    physics::QubitModel q;
    q.ej_sum_ghz = ej_sum_ghz_actual;
    q.ec_ghz = ec_ghz;
    q.c_total_f = capacitance_ff * 1e-15;
    q.d_barrier_m = barrier_thickness_nm * 1e-9;
    q.t1_background = physics::T1Background::constant(t1_us * 1e-6);
    q.junction_areas = {junction_area_um2[0], junction_area_um2[1]};
    q.squid_asymmetry = squid_asymmetry;
    q.transmon_floor = transmon_floor;
    return q;
  }
};

struct EnsembleSpec {
  double density_per_ghz = 0.0;
  double density_per_ghz_um2 = 0.0;  // adds density_per_ghz_um2 * S_total
  specgen::Distribution g_mhz = specgen::Distribution::log_uniform(0.05, 5.0);
  specgen::Distribution gamma_mhz = specgen::Distribution::constant(0.0);

  double density_for(double s_total_um2) const { return density_per_ghz + density_per_ghz_um2 * s_total_um2; }
};

struct ChipSpec {
  std::string label;
  fitstats::CleaningLabel cleaning = fitstats::CleaningLabel::other;
  double jc_ua_per_um2 = 0.0;
  int n_qubits = 1;
  QubitSpec qubit;
  EnsembleSpec ensemble;

  std::string qubit_id(int i) const { return "Q" + std::to_string(i + 1); }
};

struct MeasurementSpec {
  double tau_ns = 100.0;
  std::optional<std::uint32_t> shots = 1000u;  // null: exact expectation values
  double grid_step_mhz = 2.0;
  double span_ghz = 1.6;  // analyzed band reaching down from the sweet spot
};

struct TemporalSpec {
  int cooldowns = 1;
  double days_per_cooldown = 0.0;
  double drift_sigma_mhz_per_day = 1.0;
  double reconfig_rate_per_day = 0.0;
  double reconfig_fraction = 0.5;
};

struct BootstrapSpec {
  int n_boot = 10000;
  double ci_level = 0.68;
  analysis::ResampleUnit unit = analysis::ResampleUnit::qubit;
};

struct RunConfig {
  std::uint64_t master_seed = 0;
  MeasurementSpec measurement;
  TemporalSpec temporal;
  analysis::AnalysisParams analysis;
  BootstrapSpec bootstrap;
  std::vector<double> sweep_thresholds{0.05, 0.1, 0.2, 0.4, 0.57};
  fitstats::FitMode fit_mode = fitstats::FitMode::weighted;
  std::vector<ChipSpec> chips;

  analysis::BootstrapOptions bootstrap_options(std::uint64_t seed) const {
    return {bootstrap.n_boot, bootstrap.ci_level, seed, bootstrap.unit};
  }
};

namespace detail {

/// Line (1-based) of the last token of `anchors`, each searched as a quoted
/// string after the previous one. Returns 0 when not found.
inline std::size_t locate(const std::string& text, const std::vector<std::string>& anchors) {
  std::size_t pos = 0;
  for (const auto& a : anchors) {
    const auto hit = text.find("\"" + a + "\"", pos);
    if (hit == std::string::npos) return 0;
    pos = hit + 1;
  }
  if (anchors.empty()) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  Reader(std::string source, std::string text) : source_(std::move(source)), text_(std::move(text)) {}

  [[noreturn]] void fail(const std::vector<std::string>& anchors, const std::string& msg) const {
    const auto line = locate(text_, anchors);
    throw ConfigError(source_ + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg);
  }

  const json& object(const json& parent, const std::vector<std::string>& at, const std::string& what) const {
    if (!parent.is_object()) fail(at, what + " must be an object");
    return parent;
  }

  void only_keys(const json& obj, const std::vector<std::string>& at, const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.contains(k)) {
        auto anchors = at;
        anchors.push_back(k);
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(anchors, "unknown key '" + k + "' (allowed: " + list + ")");
      }
    }
  }

  double number(const json& obj, const std::string& key, std::vector<std::string> at, double fallback) const {
    at.push_back(key);
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(at, "'" + key + "' must be a number");
    return v.get<double>();
  }

  template <class Int>
  Int integer(const json& obj, const std::string& key, std::vector<std::string> at, Int fallback) const {
    at.push_back(key);
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(at, "'" + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) return v.get<Int>();
      if (v.get<std::int64_t>() < 0) fail(at, "'" + key + "' must be non-negative");
    }
    return v.get<Int>();
  }

  std::string string(const json& obj, const std::string& key, std::vector<std::string> at, std::string fallback) const {
    at.push_back(key);
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(at, "'" + key + "' must be a string");
    return v.get<std::string>();
  }

  const std::string& text() const { return text_; }

 private:
  std::string source_;
  std::string text_;
};

inline specgen::Distribution read_distribution(const Reader& r, const json& j, std::vector<std::string> at,
                                               specgen::Distribution fallback) {
  if (!j.is_object()) r.fail(at, "distribution must be an object with kind, lo, hi");
  r.only_keys(j, at, {"kind", "lo", "hi"});
  specgen::Distribution d = fallback;
  const auto kind = r.string(j, "kind", at, specgen::to_string(fallback.kind));
  try {
    d.kind = specgen::dist_kind_from_string(kind);
  } catch (const std::exception& e) {
    auto a = at;
    a.push_back("kind");
    r.fail(a, e.what());
  }
  d.lo = r.number(j, "lo", at, fallback.lo);
  d.hi = r.number(j, "hi", at, d.kind == specgen::DistKind::constant ? d.lo : fallback.hi);
  try {
    d.validate();
  } catch (const std::exception& e) {
    r.fail(at, e.what());
  }
  return d;
}

inline void read_qubit(const Reader& r, const json& j, const std::vector<std::string>& at, QubitSpec& q) {
  r.object(j, at, "qubit");
  r.only_keys(j, at,
              {"ej_sum_ghz", "ej_sum_sd_ghz", "ec_ghz", "capacitance_ff", "barrier_thickness_nm", "t1_us",
               "squid_asymmetry", "transmon_floor", "junction_area_um2"});
  q.ej_sum_ghz = r.number(j, "ej_sum_ghz", at, q.ej_sum_ghz);
  q.ej_sum_sd_ghz = r.number(j, "ej_sum_sd_ghz", at, q.ej_sum_sd_ghz);
  q.ec_ghz = r.number(j, "ec_ghz", at, q.ec_ghz);
  q.capacitance_ff = r.number(j, "capacitance_ff", at, q.capacitance_ff);
  q.barrier_thickness_nm = r.number(j, "barrier_thickness_nm", at, q.barrier_thickness_nm);
  q.t1_us = r.number(j, "t1_us", at, q.t1_us);
  q.squid_asymmetry = r.number(j, "squid_asymmetry", at, q.squid_asymmetry);
  q.transmon_floor = r.number(j, "transmon_floor", at, q.transmon_floor);
  if (j.contains("junction_area_um2")) {
    auto a = at;
    a.push_back("junction_area_um2");
    const auto& v = j.at("junction_area_um2");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      r.fail(a, "'junction_area_um2' must be a pair of numbers [s_j1, s_j2]");
    }
    q.junction_area_um2[0] = v[0].get<double>();
    q.junction_area_um2[1] = v[1].get<double>();
  }
  if (!(q.ej_sum_sd_ghz >= 0.0)) r.fail(at, "ej_sum_sd_ghz must be >= 0");
  if (!(q.t1_us > 0.0)) r.fail(at, "t1_us must be positive");
  try {
    q.model(q.ej_sum_ghz).validate();
  } catch (const std::exception& e) {
    r.fail(at, e.what());
  }
}

inline void read_ensemble(const Reader& r, const json& j, const std::vector<std::string>& at, EnsembleSpec& e) {
  r.object(j, at, "ensemble");
  r.only_keys(j, at, {"density_per_ghz", "density_per_ghz_um2", "g_mhz", "gamma_mhz"});
  e.density_per_ghz = r.number(j, "density_per_ghz", at, e.density_per_ghz);
  e.density_per_ghz_um2 = r.number(j, "density_per_ghz_um2", at, e.density_per_ghz_um2);
  if (j.contains("g_mhz")) {
    auto a = at;
    a.push_back("g_mhz");
    e.g_mhz = read_distribution(r, j.at("g_mhz"), a, e.g_mhz);
  }
  if (j.contains("gamma_mhz")) {
    auto a = at;
    a.push_back("gamma_mhz");
    e.gamma_mhz = read_distribution(r, j.at("gamma_mhz"), a, e.gamma_mhz);
  }
  if (!(e.density_per_ghz >= 0.0) || !(e.density_per_ghz_um2 >= 0.0)) r.fail(at, "densities must be >= 0");
}

}  // namespace detail

/// Parses and validates a configuration; `source` names the text in messages.
inline RunConfig parse(const std::string& text, const std::string& source = "config") {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    std::string msg = e.what();
    throw ConfigError(source + ":" + std::to_string(line) + ": JSON syntax error: " + msg);
  }
  const detail::Reader r(source, text);
  if (!root.is_object()) r.fail({}, "top level must be an object");
  r.only_keys(root, {},
              {"master_seed", "measurement", "temporal", "analysis", "bootstrap", "sweep_thresholds", "fit_mode",
               "defaults", "chips"});

  RunConfig c;
  c.master_seed = r.integer<std::uint64_t>(root, "master_seed", {}, c.master_seed);

  if (root.contains("measurement")) {
    const std::vector<std::string> at{"measurement"};
    const auto& m = r.object(root.at("measurement"), at, "measurement");
    r.only_keys(m, at, {"tau_ns", "shots", "grid_step_mhz", "span_ghz"});
    c.measurement.tau_ns = r.number(m, "tau_ns", at, c.measurement.tau_ns);
    if (m.contains("shots")) {
      if (m.at("shots").is_null()) {
        c.measurement.shots.reset();
      } else {
        const auto s = r.integer<std::uint32_t>(m, "shots", at, 1000u);
        if (s == 0) r.fail({"measurement", "shots"}, "shots must be >= 1 (null for exact values)");
        c.measurement.shots = s;
      }
    }
    c.measurement.grid_step_mhz = r.number(m, "grid_step_mhz", at, c.measurement.grid_step_mhz);
    c.measurement.span_ghz = r.number(m, "span_ghz", at, c.measurement.span_ghz);
    if (!(c.measurement.tau_ns > 0.0)) r.fail({"measurement", "tau_ns"}, "tau_ns must be positive");
    if (!(c.measurement.grid_step_mhz > 0.0)) r.fail({"measurement", "grid_step_mhz"}, "grid_step_mhz must be positive");
    if (!(c.measurement.span_ghz > 0.0)) r.fail({"measurement", "span_ghz"}, "span_ghz must be positive");
  }

  if (root.contains("temporal")) {
    const std::vector<std::string> at{"temporal"};
    const auto& t = r.object(root.at("temporal"), at, "temporal");
    r.only_keys(t, at,
                {"cooldowns", "days_per_cooldown", "drift_sigma_mhz_per_day", "reconfig_rate_per_day",
                 "reconfig_fraction"});
    c.temporal.cooldowns = r.integer<int>(t, "cooldowns", at, c.temporal.cooldowns);
    c.temporal.days_per_cooldown = r.number(t, "days_per_cooldown", at, c.temporal.days_per_cooldown);
    c.temporal.drift_sigma_mhz_per_day = r.number(t, "drift_sigma_mhz_per_day", at, c.temporal.drift_sigma_mhz_per_day);
    c.temporal.reconfig_rate_per_day = r.number(t, "reconfig_rate_per_day", at, c.temporal.reconfig_rate_per_day);
    c.temporal.reconfig_fraction = r.number(t, "reconfig_fraction", at, c.temporal.reconfig_fraction);
    if (c.temporal.cooldowns < 1) r.fail({"temporal", "cooldowns"}, "cooldowns must be >= 1");
    if (!(c.temporal.days_per_cooldown >= 0.0) || !(c.temporal.drift_sigma_mhz_per_day >= 0.0) ||
        !(c.temporal.reconfig_rate_per_day >= 0.0)) {
      r.fail(at, "temporal rates and durations must be >= 0");
    }
    if (!(c.temporal.reconfig_fraction >= 0.0 && c.temporal.reconfig_fraction <= 1.0)) {
      r.fail({"temporal", "reconfig_fraction"}, "reconfig_fraction must lie in [0, 1]");
    }
  }

  if (root.contains("analysis")) {
    const std::vector<std::string> at{"analysis"};
    const auto& a = r.object(root.at("analysis"), at, "analysis");
    r.only_keys(a, at,
                {"sg_window_mhz", "sg_order", "prominence_min", "counting_threshold", "exclusion_window_mhz"});
    c.analysis.sg_window_mhz = r.number(a, "sg_window_mhz", at, c.analysis.sg_window_mhz);
    c.analysis.sg_order = r.integer<int>(a, "sg_order", at, c.analysis.sg_order);
    c.analysis.prominence_min = r.number(a, "prominence_min", at, c.analysis.prominence_min);
    c.analysis.counting_threshold = r.number(a, "counting_threshold", at, c.analysis.counting_threshold);
    c.analysis.exclusion_window_mhz = r.number(a, "exclusion_window_mhz", at, c.analysis.exclusion_window_mhz);
    try {
      c.analysis.validate();
    } catch (const std::exception& e) {
      r.fail(at, e.what());
    }
  }

  if (root.contains("bootstrap")) {
    const std::vector<std::string> at{"bootstrap"};
    const auto& b = r.object(root.at("bootstrap"), at, "bootstrap");
    r.only_keys(b, at, {"n_boot", "ci_level", "resample_unit"});
    c.bootstrap.n_boot = r.integer<int>(b, "n_boot", at, c.bootstrap.n_boot);
    c.bootstrap.ci_level = r.number(b, "ci_level", at, c.bootstrap.ci_level);
    const auto unit = r.string(b, "resample_unit", at, analysis::to_string(c.bootstrap.unit));
    try {
      c.bootstrap.unit = analysis::resample_unit_from_string(unit);
    } catch (const std::exception& e) {
      r.fail({"bootstrap", "resample_unit"}, e.what());
    }
    if (c.bootstrap.n_boot < 100) r.fail({"bootstrap", "n_boot"}, "n_boot must be >= 100");
    if (!(c.bootstrap.ci_level > 0.0 && c.bootstrap.ci_level < 1.0)) {
      r.fail({"bootstrap", "ci_level"}, "ci_level must lie in (0, 1)");
    }
  }

  if (root.contains("sweep_thresholds")) {
    const auto& s = root.at("sweep_thresholds");
    if (!s.is_array() || s.empty()) r.fail({"sweep_thresholds"}, "sweep_thresholds must be a non-empty array");
    c.sweep_thresholds.clear();
    for (const auto& v : s) {
      if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0)) {
        r.fail({"sweep_thresholds"}, "sweep thresholds must be numbers in (0, 1)");
      }
      c.sweep_thresholds.push_back(v.get<double>());
    }
  }

  const auto mode = r.string(root, "fit_mode", {}, "weighted");
  if (mode == "weighted") {
    c.fit_mode = fitstats::FitMode::weighted;
  } else if (mode == "unweighted") {
    c.fit_mode = fitstats::FitMode::unweighted;
  } else {
    r.fail({"fit_mode"}, "fit_mode must be 'weighted' or 'unweighted'");
  }

  QubitSpec default_qubit;
  EnsembleSpec default_ensemble;
  if (root.contains("defaults")) {
    const std::vector<std::string> at{"defaults"};
    const auto& d = r.object(root.at("defaults"), at, "defaults");
    r.only_keys(d, at, {"qubit", "ensemble"});
    if (d.contains("qubit")) detail::read_qubit(r, d.at("qubit"), {"defaults", "qubit"}, default_qubit);
    if (d.contains("ensemble")) detail::read_ensemble(r, d.at("ensemble"), {"defaults", "ensemble"}, default_ensemble);
  }

  if (!root.contains("chips") || !root.at("chips").is_array() || root.at("chips").empty()) {
    r.fail({"chips"}, "'chips' must be a non-empty array");
  }
  std::set<std::string> labels;
  for (const auto& cj : root.at("chips")) {
    if (!cj.is_object()) r.fail({"chips"}, "each chip must be an object");
    ChipSpec chip;
    chip.label = r.string(cj, "label", {"chips"}, "");
    const std::vector<std::string> at{"chips", chip.label};
    if (chip.label.empty()) r.fail({"chips"}, "every chip needs a non-empty 'label'");
    if (chip.label.find_first_of("/\\ ") != std::string::npos || chip.label == "." || chip.label == "..") {
      r.fail(at, "chip label '" + chip.label + "' must not contain '/', '\\' or spaces");
    }
    if (!labels.insert(chip.label).second) r.fail(at, "duplicate chip label '" + chip.label + "'");
    r.only_keys(cj, at, {"label", "cleaning", "jc_ua_per_um2", "n_qubits", "qubit", "ensemble"});
    try {
      chip.cleaning = fitstats::cleaning_from_string(r.string(cj, "cleaning", at, "other"));
    } catch (const std::exception& e) {
      r.fail({"chips", chip.label, "cleaning"}, e.what());
    }
    chip.jc_ua_per_um2 = r.number(cj, "jc_ua_per_um2", at, 0.0);
    chip.n_qubits = r.integer<int>(cj, "n_qubits", at, 1);
    if (chip.n_qubits < 1) r.fail({"chips", chip.label, "n_qubits"}, "n_qubits must be >= 1");
    chip.qubit = default_qubit;
    chip.ensemble = default_ensemble;
    if (cj.contains("qubit")) detail::read_qubit(r, cj.at("qubit"), {"chips", chip.label, "qubit"}, chip.qubit);
    if (cj.contains("ensemble")) {
      detail::read_ensemble(r, cj.at("ensemble"), {"chips", chip.label, "ensemble"}, chip.ensemble);
    }
    const auto nominal = chip.qubit.model(chip.qubit.ej_sum_ghz);
    const double reach = physics::sweet_spot_ghz(nominal) - physics::min_reachable_ghz(nominal);
    if (c.measurement.span_ghz > reach + 1e-9) {
      r.fail(at, "measurement span " + io::format_double(c.measurement.span_ghz) + " GHz exceeds the " +
                     io::format_double(reach) + " GHz tuning range of chip '" + chip.label + "'");
    }
    c.chips.push_back(std::move(chip));
  }
  return c;
}

inline RunConfig load(const std::filesystem::path& path) { return parse(io::read_text(path), path.string()); }

inline json to_json(const specgen::Distribution& d) { return io::distribution_json(d); }

inline json qubit_json(const QubitSpec& q) {
  return {{"ej_sum_ghz", q.ej_sum_ghz},
          {"ej_sum_sd_ghz", q.ej_sum_sd_ghz},
          {"ec_ghz", q.ec_ghz},
          {"capacitance_ff", q.capacitance_ff},
          {"barrier_thickness_nm", q.barrier_thickness_nm},
          {"t1_us", q.t1_us},
          {"squid_asymmetry", q.squid_asymmetry},
          {"transmon_floor", q.transmon_floor},
          {"junction_area_um2", {q.junction_area_um2[0], q.junction_area_um2[1]}}};
}

inline json ensemble_json(const EnsembleSpec& e) {
  return {{"density_per_ghz", e.density_per_ghz},
          {"density_per_ghz_um2", e.density_per_ghz_um2},
          {"g_mhz", to_json(e.g_mhz)},
          {"gamma_mhz", to_json(e.gamma_mhz)}};
}

/// Fully explicit form: parse(expanded(c).dump()) reproduces c.
inline json expanded(const RunConfig& c) {
  json j;
  j["master_seed"] = c.master_seed;
  j["measurement"] = {{"tau_ns", c.measurement.tau_ns},
                      {"shots", c.measurement.shots ? json(*c.measurement.shots) : json(nullptr)},
                      {"grid_step_mhz", c.measurement.grid_step_mhz},
                      {"span_ghz", c.measurement.span_ghz}};
  j["temporal"] = {{"cooldowns", c.temporal.cooldowns},
                   {"days_per_cooldown", c.temporal.days_per_cooldown},
                   {"drift_sigma_mhz_per_day", c.temporal.drift_sigma_mhz_per_day},
                   {"reconfig_rate_per_day", c.temporal.reconfig_rate_per_day},
                   {"reconfig_fraction", c.temporal.reconfig_fraction}};
  j["analysis"] = io::params_json(c.analysis);
  j["bootstrap"] = {{"n_boot", c.bootstrap.n_boot},
                    {"ci_level", c.bootstrap.ci_level},
                    {"resample_unit", analysis::to_string(c.bootstrap.unit)}};
  j["sweep_thresholds"] = c.sweep_thresholds;
  j["fit_mode"] = c.fit_mode == fitstats::FitMode::weighted ? "weighted" : "unweighted";
  json chips = json::array();
  for (const auto& chip : c.chips) {
    chips.push_back({{"label", chip.label},
                     {"cleaning", fitstats::to_string(chip.cleaning)},
                     {"jc_ua_per_um2", chip.jc_ua_per_um2},
                     {"n_qubits", chip.n_qubits},
                     {"qubit", qubit_json(chip.qubit)},
                     {"ensemble", ensemble_json(chip.ensemble)}});
  }
  j["chips"] = std::move(chips);
  return j;
}

/// Applies one "key=value" override to the analysis-stage settings.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must have the form key=value");
  }
  const auto key = assignment.substr(0, eq);
  const auto value = assignment.substr(eq + 1);
  auto num = [&]() {
    try {
      return io::parse_double(value, "override " + key);
    } catch (const io::IoError& e) {
      throw ConfigError(e.what());
    }
  };
  auto integer = [&]() {
    const double v = num();
    if (v != std::floor(v)) throw ConfigError("override " + key + ": expected an integer, got '" + value + "'");
    return static_cast<int>(v);
  };
  try {
    if (key == "sg_window_mhz") {
      c.analysis.sg_window_mhz = num();
    } else if (key == "sg_order") {
      c.analysis.sg_order = integer();
    } else if (key == "prominence_min") {
      c.analysis.prominence_min = num();
    } else if (key == "counting_threshold") {
      c.analysis.counting_threshold = num();
    } else if (key == "exclusion_window_mhz") {
      c.analysis.exclusion_window_mhz = num();
    } else if (key == "n_boot") {
      c.bootstrap.n_boot = integer();
    } else if (key == "ci_level") {
      c.bootstrap.ci_level = num();
    } else if (key == "resample_unit") {
      c.bootstrap.unit = analysis::resample_unit_from_string(value);
    } else if (key == "fit_mode") {
      if (value != "weighted" && value != "unweighted") throw ConfigError("fit_mode must be weighted or unweighted");
      c.fit_mode = value == "weighted" ? fitstats::FitMode::weighted : fitstats::FitMode::unweighted;
    } else {
      throw ConfigError("unknown override key '" + key +
                        "' (allowed: sg_window_mhz, sg_order, prominence_min, counting_threshold, "
                        "exclusion_window_mhz, n_boot, ci_level, resample_unit, fit_mode)");
    }
    c.analysis.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("override " + key + ": " + e.what());
  }
  if (c.bootstrap.n_boot < 100) throw ConfigError("override n_boot: must be >= 100");
  if (!(c.bootstrap.ci_level > 0.0 && c.bootstrap.ci_level < 1.0)) {
    throw ConfigError("override ci_level: must lie in (0, 1)");
  }
}

}  // namespace tlscensus::config
