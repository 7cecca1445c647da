#pragma once

// On-disk formats: spectrum CSV with a JSON sidecar, ensemble JSON, defect
// report JSON and the small CSV tables written by the pipeline.
//
// CSV files are UTF-8 with '\n' line endings, '.' decimals and a mandatory
// header row. Doubles are written in shortest round-trip form.

#include "tlscensus/analysis.hpp"
#include "tlscensus/specgen.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace tlscensus::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Raised for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  if (r.ec != std::errc{}) throw IoError("format_double: conversion failed");
  return {buf, r.ptr};
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw IoError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline json read_json(const fs::path& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Splits CSV text into rows of fields; the header row is checked and dropped.
inline std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, const std::vector<std::string>& header) {
  const auto text = read_text(path);
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (!seen_header) {
      if (fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw IoError(path.string() + ": missing header row");
  return rows;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row_strings(header); }

  CsvWriter& field(const std::string& s) {
    sep();
    out_ += s;
    return *this;
  }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(std::size_t v) { return field(std::to_string(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  CsvWriter& end_row() {
    out_ += '\n';
    first_ = true;
    return *this;
  }
  const std::string& text() const { return out_; }

 private:
  void sep() {
    if (!first_) out_ += ',';
    first_ = false;
  }
  void row_strings(const std::vector<std::string>& v) {
    for (const auto& s : v) field(s);
    end_row();
  }
  std::string out_;
  bool first_ = true;
};

// ---- spectra ---------------------------------------------------------------

inline const std::vector<std::string>& spectrum_header() {
  static const std::vector<std::string> h{"freq_ghz", "p_loss"};
  return h;
}

inline std::string spectrum_csv(const specgen::SwapSpectrum& s) {
  CsvWriter w(spectrum_header());
  for (std::size_t i = 0; i < s.freqs_ghz.size(); ++i) w.field(s.freqs_ghz[i]).field(s.p_loss[i]).end_row();
  return w.text();
}

inline json labels_json(const specgen::SpectrumLabels& l) {
  return {{"qubit_id", l.qubit_id}, {"chip_id", l.chip_id}, {"cooldown_index", l.cooldown_index}};
}

inline specgen::SpectrumLabels labels_from_json(const json& j) {
  specgen::SpectrumLabels l;
  l.qubit_id = j.at("qubit_id").get<std::string>();
  l.chip_id = j.at("chip_id").get<std::string>();
  l.cooldown_index = j.at("cooldown_index").get<int>();
  return l;
}

inline json spectrum_sidecar(const specgen::SwapSpectrum& s) {
  json j;
  j["tau_ns"] = std::round(s.tau_s * 1e15) / 1e6;  // fs resolution
  j["shots"] = s.shots ? json(*s.shots) : json(nullptr);
  j["rng_seed"] = s.rng_seed;
  j["labels"] = labels_json(s.labels);
  j["pulse_amplitude"] = s.pulse_amplitude ? json(*s.pulse_amplitude) : json(nullptr);
  j["points"] = s.freqs_ghz.size();
  return j;
}

inline void write_spectrum(const fs::path& csv_path, const fs::path& sidecar_path, const specgen::SwapSpectrum& s) {
  write_text(csv_path, spectrum_csv(s));
  write_json(sidecar_path, spectrum_sidecar(s));
}

inline specgen::SwapSpectrum read_spectrum(const fs::path& csv_path, const fs::path& sidecar_path) {
  specgen::SwapSpectrum s;
  const auto rows = read_csv_rows(csv_path, spectrum_header());
  s.freqs_ghz.reserve(rows.size());
  s.p_loss.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto where = csv_path.string() + ":" + std::to_string(i + 2);
    s.freqs_ghz.push_back(parse_double(rows[i][0], where));
    s.p_loss.push_back(parse_double(rows[i][1], where));
  }
  try {
    const auto j = read_json(sidecar_path);
    s.tau_s = j.at("tau_ns").get<double>() * 1e-9;
    if (!j.at("shots").is_null()) s.shots = j.at("shots").get<std::uint32_t>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.labels = labels_from_json(j.at("labels"));
    if (j.contains("pulse_amplitude") && !j.at("pulse_amplitude").is_null()) {
      s.pulse_amplitude = j.at("pulse_amplitude").get<double>();
    }
  } catch (const json::exception& e) {
    throw IoError(sidecar_path.string() + ": " + e.what());
  }
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw IoError(csv_path.string() + ": " + e.what());
  }
  return s;
}

// ---- ensembles ---------------------------------------------------------------

inline json distribution_json(const specgen::Distribution& d) {
  return {{"kind", specgen::to_string(d.kind)}, {"lo", d.lo}, {"hi", d.hi}};
}

inline specgen::Distribution distribution_from_json(const json& j) {
  specgen::Distribution d;
  d.kind = specgen::dist_kind_from_string(j.at("kind").get<std::string>());
  d.lo = j.at("lo").get<double>();
  d.hi = j.contains("hi") ? j.at("hi").get<double>() : d.lo;
  return d;
}

inline json ensemble_json(const specgen::DefectEnsemble& e) {
  json j;
  j["band_ghz"] = {e.band.f_min_ghz, e.band.f_max_ghz};
  j["density_per_ghz"] = e.density_per_ghz;
  j["g_mhz"] = distribution_json(e.g_distribution);
  j["gamma_mhz"] = distribution_json(e.gamma_distribution);
  j["rng_seed"] = e.rng_seed;
  json defects = json::array();
  for (const auto& d : e.defects) {
    defects.push_back({{"frequency_ghz", d.frequency_ghz}, {"g_mhz", d.g_mhz}, {"gamma_mhz", d.gamma_mhz}});
  }
  j["defects"] = std::move(defects);
  return j;
}

inline specgen::DefectEnsemble ensemble_from_json(const json& j) {
  specgen::DefectEnsemble e;
  e.band = {j.at("band_ghz").at(0).get<double>(), j.at("band_ghz").at(1).get<double>()};
  e.density_per_ghz = j.at("density_per_ghz").get<double>();
  e.g_distribution = distribution_from_json(j.at("g_mhz"));
  e.gamma_distribution = distribution_from_json(j.at("gamma_mhz"));
  e.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& d : j.at("defects")) {
    physics::DefectMode m;
    m.frequency_ghz = d.at("frequency_ghz").get<double>();
    m.g_mhz = d.at("g_mhz").get<double>();
    m.gamma_mhz = d.at("gamma_mhz").get<double>();
    e.defects.push_back(m);
  }
  return e;
}

// ---- reports ------------------------------------------------------------------

inline json params_json(const analysis::AnalysisParams& p) {
  return {{"sg_window_mhz", p.sg_window_mhz},
          {"sg_order", p.sg_order},
          {"prominence_min", p.prominence_min},
          {"counting_threshold", p.counting_threshold},
          {"exclusion_window_mhz", p.exclusion_window_mhz}};
}

inline analysis::AnalysisParams params_from_json(const json& j) {
  analysis::AnalysisParams p;
  p.sg_window_mhz = j.at("sg_window_mhz").get<double>();
  p.sg_order = j.at("sg_order").get<int>();
  p.prominence_min = j.at("prominence_min").get<double>();
  p.counting_threshold = j.at("counting_threshold").get<double>();
  p.exclusion_window_mhz = j.at("exclusion_window_mhz").get<double>();
  return p;
}

inline json report_json(const analysis::DefectReport& r) {
  json j;
  j["labels"] = labels_json(r.labels);
  j["bandwidth_ghz"] = r.bandwidth_ghz;
  j["params"] = params_json(r.params);
  j["n_defects"] = r.count();
  json peaks = json::array();
  for (const auto& p : r.peaks) peaks.push_back({{"frequency_ghz", p.frequency_ghz}, {"p_loss_raw", p.p_loss_raw}});
  j["peaks"] = std::move(peaks);
  return j;
}

inline analysis::DefectReport report_from_json(const json& j) {
  analysis::DefectReport r;
  r.labels = labels_from_json(j.at("labels"));
  r.bandwidth_ghz = j.at("bandwidth_ghz").get<double>();
  r.params = params_from_json(j.at("params"));
  for (const auto& p : j.at("peaks")) {
    r.peaks.push_back({p.at("frequency_ghz").get<double>(), p.at("p_loss_raw").get<double>()});
  }
  return r;
}

inline json estimate_json(const analysis::DensityEstimate& e) {
  return {{"rho_per_ghz", e.rho},
          {"ci_low_per_ghz", e.ci_low},
          {"ci_high_per_ghz", e.ci_high},
          {"n_boot", e.n_boot},
          {"n_defects_mean", e.n_defects_mean}};
}

}  // namespace tlscensus::io
