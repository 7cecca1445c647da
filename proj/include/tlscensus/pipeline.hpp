#pragma once

// The five dataset commands: simulate, analyze, sweep, fit, report. Every
// command that writes into a dataset finishes by rewriting its manifest, so
// every output file is listed there.

#include "tlscensus/analysis.hpp"
#include "tlscensus/config.hpp"
#include "tlscensus/dataset.hpp"
#include "tlscensus/fitstats.hpp"
#include "tlscensus/io.hpp"
#include "tlscensus/rng.hpp"
#include "tlscensus/savgol.hpp"
#include "tlscensus/specgen.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace tlscensus::pipeline {

namespace fs = std::filesystem;
using io::json;

/// Runs fn(0..n-1) on up to `jobs` threads. Results must go to per-index
/// slots; the lowest-index exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::optional<std::size_t> failed_at;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failed_at || i < *failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// --jobs if positive, else TLS_CENSUS_JOBS, else the hardware thread count.
inline int resolve_jobs(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("TLS_CENSUS_JOBS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) {
      throw config::ConfigError(std::string("TLS_CENSUS_JOBS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---- seeds -----------------------------------------------------------------

inline std::uint64_t qubit_seed(std::uint64_t master, std::string_view purpose, const std::string& chip,
                                const std::string& qubit, std::uint64_t k = 0) {
  return derive_seed(master, {hash_label(purpose), hash_label(chip), hash_label(qubit), k});
}

inline std::uint64_t group_seed(std::uint64_t master, std::string_view kind, const std::string& group) {
  return derive_seed(master, {hash_label("bootstrap"), hash_label(kind), hash_label(group)});
}

// ---- simulate --------------------------------------------------------------

struct QubitInstance {
  std::string chip;
  std::string qubit_id;
  double ej_sum_ghz = 0.0;
  double freq_ghz = 0.0;  // sweet spot
  double t1_us = 0.0;
  double s_total_um2 = 0.0;
  specgen::Band band;
};

inline QubitInstance instantiate(const config::RunConfig& cfg, const config::ChipSpec& chip, int index) {
  QubitInstance q;
  q.chip = chip.label;
  q.qubit_id = chip.qubit_id(index);
  q.ej_sum_ghz = chip.qubit.ej_sum_ghz;
  if (chip.qubit.ej_sum_sd_ghz > 0.0) {
    auto rng = make_rng(qubit_seed(cfg.master_seed, "junction", q.chip, q.qubit_id));
    q.ej_sum_ghz += chip.qubit.ej_sum_sd_ghz * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  const auto model = chip.qubit.model(q.ej_sum_ghz);
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw config::ConfigError("chip '" + q.chip + "' qubit " + q.qubit_id + ": drawn E_J = " +
                              io::format_double(q.ej_sum_ghz) + " GHz is invalid: " + e.what());
  }
  q.freq_ghz = physics::sweet_spot_ghz(model);
  if (physics::min_reachable_ghz(model) > q.freq_ghz - cfg.measurement.span_ghz + 1e-9) {
    throw config::ConfigError("chip '" + q.chip + "' qubit " + q.qubit_id + ": span " +
                              io::format_double(cfg.measurement.span_ghz) + " GHz exceeds its tuning range");
  }
  q.t1_us = chip.qubit.t1_us;
  q.s_total_um2 = chip.qubit.s_total_um2();
  q.band = {q.freq_ghz - cfg.measurement.span_ghz, q.freq_ghz};
  return q;
}

inline json chip_meta_json(const config::ChipSpec& chip, const std::vector<QubitInstance>& qubits) {
  json qs = json::array();
  for (const auto& q : qubits) {
    qs.push_back({{"qubit_id", q.qubit_id},
                  {"ej_sum_ghz", q.ej_sum_ghz},
                  {"freq_ghz", q.freq_ghz},
                  {"t1_us", q.t1_us},
                  {"s_total_um2", q.s_total_um2},
                  {"band_ghz", {q.band.f_min_ghz, q.band.f_max_ghz}}});
  }
  return {{"chip_label", chip.label},
          {"cleaning", fitstats::to_string(chip.cleaning)},
          {"jc_ua_per_um2", chip.jc_ua_per_um2},
          {"s_total_um2", chip.qubit.s_total_um2()},
          {"qubits", std::move(qs)}};
}

inline fitstats::ChipDataset chip_dataset_from_json(const json& j) {
  fitstats::ChipDataset d;
  d.chip_label = j.at("chip_label").get<std::string>();
  d.cleaning = fitstats::cleaning_from_string(j.at("cleaning").get<std::string>());
  d.jc_ua_per_um2 = j.at("jc_ua_per_um2").get<double>();
  for (const auto& q : j.at("qubits")) {
    d.qubits.push_back({q.at("qubit_id").get<std::string>(), q.at("freq_ghz").get<double>(),
                        q.at("t1_us").get<double>(), q.at("s_total_um2").get<double>()});
  }
  return d;
}

struct CooldownRecord {
  specgen::DefectEnsemble ensemble;  // state at the time of measurement
  specgen::SwapSpectrum spectrum;
};

/// Simulates one qubit through every cooldown: the first cooldown measures
/// the sampled ensemble after its drift days, later ones thermally cycle the
/// previous state first.
inline std::vector<CooldownRecord> simulate_series(const config::RunConfig& cfg, const config::ChipSpec& chip,
                                                   const QubitInstance& q) {
  const auto model = chip.qubit.model(q.ej_sum_ghz);
  const auto grid = specgen::uniform_grid(q.band, cfg.measurement.grid_step_mhz);
  const double lambda = chip.ensemble.density_for(q.s_total_um2);
  auto ens = specgen::sample_defect_ensemble(q.band, lambda, chip.ensemble.g_mhz, chip.ensemble.gamma_mhz,
                                             qubit_seed(cfg.master_seed, "ensemble", q.chip, q.qubit_id));
  const auto& t = cfg.temporal;
  std::vector<CooldownRecord> out;
  out.reserve(static_cast<std::size_t>(t.cooldowns));
  for (int k = 0; k < t.cooldowns; ++k) {
    const auto kk = static_cast<std::uint64_t>(k);
    if (k > 0) ens = specgen::thermal_cycle(ens, qubit_seed(cfg.master_seed, "thermal_cycle", q.chip, q.qubit_id, kk));
    ens = specgen::evolve_day(ens, t.drift_sigma_mhz_per_day, t.reconfig_rate_per_day, t.days_per_cooldown,
                              qubit_seed(cfg.master_seed, "drift", q.chip, q.qubit_id, kk), t.reconfig_fraction);
    const specgen::SpectrumLabels labels{q.qubit_id, q.chip, k};
    auto spectrum =
        specgen::generate_spectrum(model, ens, grid, cfg.measurement.tau_ns * 1e-9, cfg.measurement.shots,
                                   qubit_seed(cfg.master_seed, "readout", q.chip, q.qubit_id, kk), labels);
    out.push_back({ens, std::move(spectrum)});
  }
  return out;
}

inline void simulate_qubit(const config::RunConfig& cfg, const config::ChipSpec& chip, const QubitInstance& q,
                           const dataset::Layout& layout) {
  for (const auto& rec : simulate_series(cfg, chip, q)) {
    io::write_spectrum(layout.spectrum_csv(rec.spectrum.labels), layout.spectrum_sidecar(rec.spectrum.labels),
                       rec.spectrum);
    io::write_json(layout.ensemble(rec.spectrum.labels), io::ensemble_json(rec.ensemble));
  }
}

/// Removes a previous dataset's outputs. Refuses to touch a non-empty
/// directory that has no manifest.
inline void prepare_dataset_dir(const dataset::Layout& layout) {
  std::error_code ec;
  if (fs::exists(layout.root, ec)) {
    if (!fs::is_directory(layout.root, ec)) throw io::IoError(layout.root.string() + " exists and is not a directory");
    const bool empty = fs::directory_iterator(layout.root, ec) == fs::directory_iterator();
    if (!empty && !fs::exists(layout.manifest(), ec)) {
      throw io::IoError("refusing to overwrite " + layout.root.string() + ": not empty and has no manifest.json");
    }
    for (const auto& sub : {layout.root / "chips", layout.analysis_dir()}) fs::remove_all(sub, ec);
    fs::remove(layout.config(), ec);
    fs::remove(layout.manifest(), ec);
  }
  fs::create_directories(layout.root, ec);
  if (ec) throw io::IoError("cannot create " + layout.root.string() + ": " + ec.message());
}

inline void simulate(const config::RunConfig& cfg, const fs::path& dataset_dir, int jobs) {
  const dataset::Layout layout{dataset_dir};
  std::vector<std::pair<const config::ChipSpec*, QubitInstance>> work;
  std::map<std::string, std::vector<QubitInstance>> by_chip;
  for (const auto& chip : cfg.chips) {
    for (int i = 0; i < chip.n_qubits; ++i) {
      auto q = instantiate(cfg, chip, i);
      by_chip[chip.label].push_back(q);
      work.emplace_back(&chip, std::move(q));
    }
  }
  prepare_dataset_dir(layout);
  io::write_json(layout.config(), config::expanded(cfg));
  for (const auto& chip : cfg.chips) io::write_json(layout.chip_meta(chip.label), chip_meta_json(chip, by_chip[chip.label]));
  parallel_for(work.size(), jobs, [&](std::size_t i) { simulate_qubit(cfg, *work[i].first, work[i].second, layout); });
  dataset::write_manifest(layout);
}

// ---- loading ---------------------------------------------------------------

struct LoadedDataset {
  dataset::Layout layout;
  config::RunConfig cfg;
  std::vector<specgen::SpectrumLabels> spectra;  // manifest order
  std::map<std::string, fitstats::ChipDataset> chips;
};

/// Verifies the manifest and indexes the dataset's spectra.
inline LoadedDataset open_dataset(const fs::path& dir) {
  LoadedDataset d;
  d.layout = dataset::Layout{dir};
  dataset::verify(d.layout);
  d.cfg = config::load(d.layout.config());
  for (const auto& f : dataset::read_manifest(d.layout).files) {
    // chips/<chip>/qubits/<qb>/cooldown_<k>/spectrum.csv
    const fs::path p(f.path);
    if (p.filename() != "spectrum.csv") continue;
    std::vector<std::string> parts;
    for (const auto& part : p) parts.push_back(part.string());
    if (parts.size() != 6 || parts[0] != "chips" || parts[2] != "qubits" || parts[4].rfind("cooldown_", 0) != 0) {
      throw dataset::IntegrityError("unexpected spectrum location " + f.path);
    }
    specgen::SpectrumLabels l;
    l.chip_id = parts[1];
    l.qubit_id = parts[3];
    try {
      l.cooldown_index = std::stoi(parts[4].substr(9));
    } catch (const std::exception&) {
      throw dataset::IntegrityError("bad cooldown directory in " + f.path);
    }
    d.spectra.push_back(l);
  }
  if (d.spectra.empty()) throw dataset::IntegrityError("dataset " + dir.string() + " contains no spectra");
  for (const auto& chip : d.cfg.chips) {
    try {
      d.chips[chip.label] = chip_dataset_from_json(io::read_json(d.layout.chip_meta(chip.label)));
    } catch (const io::json::exception& e) {
      throw io::IoError(d.layout.chip_meta(chip.label).string() + ": " + e.what());
    }
  }
  return d;
}

inline std::vector<specgen::SwapSpectrum> load_spectra(const LoadedDataset& d, int jobs) {
  std::vector<specgen::SwapSpectrum> out(d.spectra.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    out[i] = io::read_spectrum(d.layout.spectrum_csv(d.spectra[i]), d.layout.spectrum_sidecar(d.spectra[i]));
  });
  return out;
}

inline std::vector<analysis::DefectReport> count_all(const std::vector<specgen::SwapSpectrum>& spectra,
                                                     const analysis::AnalysisParams& params, int jobs) {
  std::vector<analysis::DefectReport> out(spectra.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = analysis::count_defects(spectra[i], params); });
  return out;
}

// ---- grouping ----------------------------------------------------------------

struct GroupRow {
  std::string kind;   // all, cohort, chip, qubit, cooldown
  std::string group;  // name within the kind
  double s_total_um2 = 0.0;
  std::size_t n_reports = 0;
  std::size_t n_defects = 0;
  double bandwidth_ghz = 0.0;
  double rho_point = 0.0;
  std::optional<analysis::DensityEstimate> estimate;  // absent with fewer than 2 resampling units
};

inline std::string cohort_name(double s_total_um2) { return "S=" + io::format_double(s_total_um2); }

inline GroupRow summarize_group(const std::string& kind, const std::string& group,
                                const std::vector<analysis::DefectReport>& reports, const config::RunConfig& cfg,
                                double s_total_um2 = 0.0) {
  GroupRow row;
  row.kind = kind;
  row.group = group;
  row.s_total_um2 = s_total_um2;
  row.n_reports = reports.size();
  for (const auto& r : reports) {
    row.n_defects += r.count();
    row.bandwidth_ghz += r.bandwidth_ghz;
  }
  row.rho_point = analysis::defect_density(reports);
  const auto opts = cfg.bootstrap_options(group_seed(cfg.master_seed, kind, group));
  if (reports.size() >= 2 && analysis::detail::resampling_units(reports, opts.unit).size() >= 2) {
    row.estimate = analysis::bootstrap_density(reports, opts);
  }
  return row;
}

inline std::vector<GroupRow> group_rows(const LoadedDataset& d, const std::vector<analysis::DefectReport>& reports,
                                        int jobs) {
  std::map<std::string, std::vector<analysis::DefectReport>> chips, qubits, cooldowns, cohorts;
  std::map<std::string, double> cohort_s;
  for (const auto& r : reports) {
    const auto& chip = d.chips.at(r.labels.chip_id);
    const double s = chip.qubits.empty() ? 0.0 : chip.qubits.front().s_total_um2;
    chips[r.labels.chip_id].push_back(r);
    qubits[r.labels.chip_id + "/" + r.labels.qubit_id].push_back(r);
    cooldowns[std::to_string(r.labels.cooldown_index)].push_back(r);
    cohorts[cohort_name(s)].push_back(r);
    cohort_s[cohort_name(s)] = s;
  }
  struct Job {
    std::string kind, group;
    const std::vector<analysis::DefectReport>* reports;
    double s;
  };
  std::vector<Job> jobs_list;
  jobs_list.push_back({"all", "all", &reports, 0.0});
  for (const auto& [g, rs] : cohorts) jobs_list.push_back({"cohort", g, &rs, cohort_s[g]});
  for (const auto& [g, rs] : chips) {
    jobs_list.push_back({"chip", g, &rs, d.chips.at(g).qubits.empty() ? 0.0 : d.chips.at(g).qubits.front().s_total_um2});
  }
  for (const auto& [g, rs] : qubits) jobs_list.push_back({"qubit", g, &rs, 0.0});
  for (const auto& [g, rs] : cooldowns) jobs_list.push_back({"cooldown", g, &rs, 0.0});
  std::vector<GroupRow> rows(jobs_list.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const auto& j = jobs_list[i];
    rows[i] = summarize_group(j.kind, j.group, *j.reports, d.cfg, j.s);
  });
  return rows;
}

inline std::string optional_field(const std::optional<analysis::DensityEstimate>& e, double analysis::DensityEstimate::*m) {
  return e ? io::format_double((*e).*m) : std::string();
}

inline std::string densities_csv(const std::vector<GroupRow>& rows) {
  io::CsvWriter w({"group_kind", "group", "n_reports", "n_defects", "bandwidth_ghz", "rho_point", "rho", "ci_low",
                   "ci_high"});
  for (const auto& r : rows) {
    w.field(r.kind).field(r.group).field(r.n_reports).field(r.n_defects).field(r.bandwidth_ghz).field(r.rho_point);
    w.field(optional_field(r.estimate, &analysis::DensityEstimate::rho))
        .field(optional_field(r.estimate, &analysis::DensityEstimate::ci_low))
        .field(optional_field(r.estimate, &analysis::DensityEstimate::ci_high))
        .end_row();
  }
  return w.text();
}

inline const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h{"cohort", "s_total_um2", "n_reports", "n_defects", "bandwidth_ghz",
                                          "rho",    "ci_low",      "ci_high"};
  return h;
}

/// One row per junction-area cohort: the input of the area-scaling fit.
inline std::string summary_csv(const std::vector<GroupRow>& rows) {
  io::CsvWriter w(summary_header());
  for (const auto& r : rows) {
    if (r.kind != "cohort") continue;
    const double rho = r.estimate ? r.estimate->rho : r.rho_point;
    const double lo = r.estimate ? r.estimate->ci_low : r.rho_point;
    const double hi = r.estimate ? r.estimate->ci_high : r.rho_point;
    w.field(r.group).field(r.s_total_um2).field(r.n_reports).field(r.n_defects).field(r.bandwidth_ghz);
    w.field(rho).field(lo).field(hi).end_row();
  }
  return w.text();
}

// ---- analyze -----------------------------------------------------------------

struct AnalyzeResult {
  std::vector<analysis::DefectReport> reports;
  std::vector<GroupRow> groups;
};

inline AnalyzeResult analyze(const fs::path& dataset_dir, const std::vector<std::string>& overrides,
                             std::optional<double> threshold, int jobs) {
  auto d = open_dataset(dataset_dir);
  for (const auto& o : overrides) config::apply_override(d.cfg, o);
  if (threshold) config::apply_override(d.cfg, "counting_threshold=" + io::format_double(*threshold));
  const auto spectra = load_spectra(d, jobs);
  AnalyzeResult res;
  res.reports = count_all(spectra, d.cfg.analysis, jobs);
  parallel_for(res.reports.size(), jobs, [&](std::size_t i) {
    io::write_json(d.layout.report(res.reports[i].labels), io::report_json(res.reports[i]));
  });
  res.groups = group_rows(d, res.reports, jobs);
  io::write_text(d.layout.analysis_dir() / "densities.csv", densities_csv(res.groups));
  io::write_text(d.layout.analysis_dir() / "summary.csv", summary_csv(res.groups));
  json settings;
  settings["analysis"] = io::params_json(d.cfg.analysis);
  settings["bootstrap"] = {{"n_boot", d.cfg.bootstrap.n_boot},
                           {"ci_level", d.cfg.bootstrap.ci_level},
                           {"resample_unit", analysis::to_string(d.cfg.bootstrap.unit)}};
  settings["fit_mode"] = d.cfg.fit_mode == fitstats::FitMode::weighted ? "weighted" : "unweighted";
  io::write_json(d.layout.analysis_dir() / "settings.json", settings);
  dataset::write_manifest(d.layout);
  return res;
}

// ---- sweep -------------------------------------------------------------------

struct SweepPoint {
  double threshold = 0.0;
  GroupRow all;
  std::vector<GroupRow> cohorts;
  std::optional<fitstats::LineFit> fit;
};

inline std::optional<fitstats::LineFit> fit_cohorts(const std::vector<GroupRow>& cohorts, fitstats::FitMode mode) {
  std::vector<fitstats::AreaPoint> pts;
  std::set<double> s;
  for (const auto& r : cohorts) {
    const auto est = r.estimate.value_or(analysis::DensityEstimate{r.rho_point, r.rho_point, r.rho_point, 0, 0.0});
    pts.push_back(fitstats::area_point(r.s_total_um2, est, r.group));
    s.insert(r.s_total_um2);
  }
  if (s.size() < 2) return std::nullopt;
  try {
    return fitstats::fit_area_scaling(pts, mode);
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // e.g. a zero-width interval next to finite ones
  }
}

inline std::vector<SweepPoint> sweep(const fs::path& dataset_dir, std::vector<double> thresholds,
                                     const std::vector<std::string>& overrides, int jobs) {
  auto d = open_dataset(dataset_dir);
  for (const auto& o : overrides) config::apply_override(d.cfg, o);
  if (thresholds.empty()) thresholds = d.cfg.sweep_thresholds;
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw config::ConfigError("threshold " + io::format_double(t) + " must lie in (0, 1)");
  }
  const auto spectra = load_spectra(d, jobs);
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    auto params = d.cfg.analysis;
    params.counting_threshold = t;
    const auto reports = count_all(spectra, params, jobs);
    const auto rows = group_rows(d, reports, jobs);
    SweepPoint p;
    p.threshold = t;
    for (const auto& r : rows) {
      if (r.kind == "all") p.all = r;
      if (r.kind == "cohort") p.cohorts.push_back(r);
    }
    p.fit = fit_cohorts(p.cohorts, d.cfg.fit_mode);
    out.push_back(std::move(p));
  }

  io::CsvWriter w({"threshold", "rho", "ci_low", "ci_high", "n_defects", "bandwidth_ghz"});
  io::CsvWriter wc({"cohort", "s_total_um2", "threshold", "rho", "ci_low", "ci_high", "n_defects", "bandwidth_ghz"});
  io::CsvWriter wf({"threshold", "alpha", "alpha_err", "beta", "beta_err", "chi2_red"});
  for (const auto& p : out) {
    const auto row = [&](io::CsvWriter& writer, const GroupRow& r) {
      const double rho = r.estimate ? r.estimate->rho : r.rho_point;
      writer.field(rho)
          .field(r.estimate ? r.estimate->ci_low : rho)
          .field(r.estimate ? r.estimate->ci_high : rho)
          .field(r.n_defects)
          .field(r.bandwidth_ghz)
          .end_row();
    };
    w.field(p.threshold);
    row(w, p.all);
    for (const auto& c : p.cohorts) {
      wc.field(c.group).field(c.s_total_um2).field(p.threshold);
      row(wc, c);
    }
    if (p.fit) {
      wf.field(p.threshold).field(p.fit->alpha).field(p.fit->alpha_err).field(p.fit->beta).field(p.fit->beta_err);
      wf.field(p.fit->chi2_red ? io::format_double(*p.fit->chi2_red) : std::string()).end_row();
    }
  }
  io::write_text(d.layout.analysis_dir() / "sweep.csv", w.text());
  io::write_text(d.layout.analysis_dir() / "sweep_by_cohort.csv", wc.text());
  io::write_text(d.layout.analysis_dir() / "sweep_fit.csv", wf.text());
  dataset::write_manifest(d.layout);
  return out;
}

// ---- fit -----------------------------------------------------------------------

inline std::vector<fitstats::AreaPoint> read_summary(const fs::path& csv) {
  std::vector<fitstats::AreaPoint> pts;
  for (const auto& row : io::read_csv_rows(csv, summary_header())) {
    const auto where = csv.string();
    analysis::DensityEstimate est;
    est.rho = io::parse_double(row[5], where);
    est.ci_low = io::parse_double(row[6], where);
    est.ci_high = io::parse_double(row[7], where);
    pts.push_back(fitstats::area_point(io::parse_double(row[1], where), est, row[0]));
  }
  return pts;
}

inline json fit_json(const fitstats::LineFit& f, std::size_t n_points) {
  return {{"alpha_per_ghz_um2", f.alpha},
          {"alpha_err", f.alpha_err},
          {"beta_per_ghz", f.beta},
          {"beta_err", f.beta_err},
          {"chi2_red", f.chi2_red ? json(*f.chi2_red) : json(nullptr)},
          {"unit_weights", f.unit_weights},
          {"n_points", n_points}};
}

/// Fits the summary table. When the table lives inside a dataset the result
/// is written next to it and the manifest is refreshed.
inline fitstats::LineFit fit(const fs::path& summary_csv, fitstats::FitMode mode,
                             std::optional<fs::path> dataset_root = std::nullopt) {
  if (dataset_root) dataset::verify(dataset::Layout{*dataset_root});
  const auto pts = read_summary(summary_csv);
  fitstats::LineFit f;
  try {
    f = fitstats::fit_area_scaling(pts, mode);
  } catch (const std::invalid_argument& e) {
    throw io::IoError(summary_csv.string() + ": cannot fit: " + e.what());
  }
  io::write_json(summary_csv.parent_path() / "fit.json", fit_json(f, pts.size()));
  if (dataset_root) dataset::write_manifest(dataset::Layout{*dataset_root});
  return f;
}

// ---- report --------------------------------------------------------------------

inline std::vector<analysis::DefectReport> read_reports(const LoadedDataset& d) {
  std::vector<analysis::DefectReport> out;
  std::vector<std::string> missing;
  for (const auto& l : d.spectra) {
    const auto path = d.layout.report(l);
    if (!fs::exists(path)) {
      missing.push_back(dataset::relative_key(d.layout.root, path));
      continue;
    }
    try {
      out.push_back(io::report_from_json(io::read_json(path)));
    } catch (const io::json::exception& e) {
      throw io::IoError(path.string() + ": " + e.what());
    }
  }
  if (!missing.empty()) {
    std::string msg = "no defect reports yet (run analyze first); missing " + std::to_string(missing.size()) + ":";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) msg += " " + missing[i];
    throw io::IoError(msg);
  }
  return out;
}

/// Device table plus plot-ready tables. Returns the per-chip rows.
inline std::vector<fitstats::ChipSummary> report(const fs::path& dataset_dir, int jobs) {
  const auto d = open_dataset(dataset_dir);
  const auto reports = read_reports(d);
  const auto out_dir = d.layout.analysis_dir();

  std::map<std::string, std::vector<analysis::DefectReport>> by_chip;
  for (const auto& r : reports) by_chip[r.labels.chip_id].push_back(r);
  std::vector<fitstats::ChipSummary> rows;
  io::CsvWriter table({"chip", "cleaning", "jc_ua_per_um2", "n_qubits", "mean_freq_ghz", "sd_freq_ghz", "mean_t1_us",
                       "sd_t1_us", "mean_q", "n_defects", "bandwidth_ghz", "rho"});
  std::size_t total_defects = 0;
  double total_bw = 0.0;
  int total_qubits = 0;
  for (const auto& chip : d.cfg.chips) {
    const auto& ds = d.chips.at(chip.label);
    const auto s = fitstats::aggregate_chip(ds, by_chip[chip.label]);
    double q_sum = 0.0;
    for (const auto& q : ds.qubits) q_sum += fitstats::quality_factor(q.freq_ghz, q.t1_us * 1e-6);
    const auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
    table.field(s.chip_label).field(std::string(fitstats::to_string(s.cleaning))).field(s.jc_ua_per_um2);
    table.field(s.n_qubits).field(s.mean_freq_ghz).field(opt(s.sd_freq_ghz)).field(s.mean_t1_us).field(opt(s.sd_t1_us));
    table.field(q_sum / static_cast<double>(ds.qubits.size())).field(s.n_defects).field(s.bandwidth_ghz);
    table.field(s.bandwidth_ghz > 0.0 ? static_cast<double>(s.n_defects) / s.bandwidth_ghz : 0.0).end_row();
    total_defects += s.n_defects;
    total_bw += s.bandwidth_ghz;
    total_qubits += s.n_qubits;
    rows.push_back(s);
  }
  table.field(std::string("total")).field(std::string()).field(std::string()).field(total_qubits);
  for (int i = 0; i < 5; ++i) table.field(std::string());
  table.field(total_defects).field(total_bw).field(total_bw > 0.0 ? static_cast<double>(total_defects) / total_bw : 0.0);
  table.end_row();
  io::write_text(out_dir / "table.csv", table.text());

  // Raw and smoothed spectra of each chip's first qubit across cooldowns.
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < d.spectra.size(); ++i) {
    const auto& chip = d.chips.at(d.spectra[i].chip_id);
    if (!chip.qubits.empty() && d.spectra[i].qubit_id == chip.qubits.front().qubit_id) picks.push_back(i);
  }
  std::vector<std::string> blocks(picks.size());
  parallel_for(picks.size(), jobs, [&](std::size_t k) {
    const auto& l = d.spectra[picks[k]];
    const auto s = io::read_spectrum(d.layout.spectrum_csv(l), d.layout.spectrum_sidecar(l));
    const auto smooth = analysis::sg_smooth(s, reports[picks[k]].params.sg_window_mhz, reports[picks[k]].params.sg_order);
    std::string text;
    for (std::size_t i = 0; i < s.freqs_ghz.size(); ++i) {
      text += l.chip_id + "," + l.qubit_id + "," + std::to_string(l.cooldown_index) + "," +
              io::format_double(s.freqs_ghz[i]) + "," + io::format_double(s.p_loss[i]) + "," +
              io::format_double(smooth[i]) + "\n";
    }
    blocks[k] = std::move(text);
  });
  std::string spectra_text = "chip,qubit,cooldown,freq_ghz,p_loss,p_loss_smoothed\n";
  for (const auto& b : blocks) spectra_text += b;
  io::write_text(out_dir / "plot_spectra.csv", spectra_text);

  // Density per chip and cooldown.
  std::map<std::pair<std::string, int>, std::vector<analysis::DefectReport>> by_cooldown;
  for (const auto& r : reports) by_cooldown[{r.labels.chip_id, r.labels.cooldown_index}].push_back(r);
  std::vector<std::pair<std::pair<std::string, int>, const std::vector<analysis::DefectReport>*>> items;
  for (const auto& [k, v] : by_cooldown) items.emplace_back(k, &v);
  std::vector<GroupRow> cd_rows(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& [key, rs] = items[i];
    cd_rows[i] = summarize_group("chip_cooldown", key.first + "/" + std::to_string(key.second), *rs, d.cfg);
  });
  io::CsvWriter cd({"chip", "cooldown", "n_defects", "bandwidth_ghz", "rho", "ci_low", "ci_high"});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& r = cd_rows[i];
    const double rho = r.estimate ? r.estimate->rho : r.rho_point;
    cd.field(items[i].first.first).field(items[i].first.second).field(r.n_defects).field(r.bandwidth_ghz).field(rho);
    cd.field(r.estimate ? r.estimate->ci_low : rho).field(r.estimate ? r.estimate->ci_high : rho).end_row();
  }
  io::write_text(out_dir / "plot_density_by_cooldown.csv", cd.text());

  // Area-scaling points with the fitted line, when a summary exists.
  const auto summary = out_dir / "summary.csv";
  if (fs::exists(summary)) {
    const auto pts = read_summary(summary);
    std::optional<fitstats::LineFit> f;
    std::set<double> s;
    for (const auto& p : pts) s.insert(p.s_total_um2);
    if (s.size() >= 2) {
      try {
        f = fitstats::fit_area_scaling(pts, d.cfg.fit_mode);
      } catch (const std::invalid_argument&) {
      }
    }
    io::CsvWriter area({"cohort", "s_total_um2", "rho", "sigma", "rho_fit"});
    for (const auto& p : pts) {
      area.field(p.cohort_label).field(p.s_total_um2).field(p.rho).field(p.sigma);
      area.field(f ? io::format_double(f->alpha * p.s_total_um2 + f->beta) : std::string()).end_row();
    }
    io::write_text(out_dir / "plot_area.csv", area.text());
  }
  dataset::write_manifest(d.layout);
  return rows;
}

}  // namespace tlscensus::pipeline
