#include "tlscensus/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace tlscensus;

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kIntegrity = 4 };

std::string fmt(double v) { return io::format_double(v); }

void print_row(const pipeline::GroupRow& r) {
  std::cout << r.kind << " " << r.group << ": " << r.n_defects << " defects in " << fmt(r.bandwidth_ghz) << " GHz";
  if (r.estimate) {
    std::cout << ", rho = " << fmt(r.estimate->rho) << " /GHz [" << fmt(r.estimate->ci_low) << ", "
              << fmt(r.estimate->ci_high) << "]";
  } else {
    std::cout << ", rho = " << fmt(r.rho_point) << " /GHz";
  }
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tls_census: simulate swap spectra, count two-level-system defects, fit their area scaling"};
  app.require_subcommand(1);

  std::string config_path, dataset_dir, summary_path, fit_mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::vector<double> thresholds;
  std::vector<std::string> params;
  int jobs = 0;

  auto* sim = app.add_subcommand("simulate", "Generate a dataset from a run configuration");
  sim->add_option("--config", config_path, "Run configuration (JSON)")->required();
  sim->add_option("--dataset", dataset_dir, "Output dataset directory")->required();
  sim->add_option("--seed", seed, "Override master_seed");
  sim->add_option("--jobs", jobs, "Worker threads (default: TLS_CENSUS_JOBS or all cores)");

  auto* ana = app.add_subcommand("analyze", "Count defects in every spectrum and estimate densities");
  ana->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  ana->add_option("--threshold", threshold, "Counting threshold on the raw loss");
  ana->add_option("--param", params, "Analysis override key=value (repeatable)");
  ana->add_option("--jobs", jobs, "Worker threads");

  auto* swp = app.add_subcommand("sweep", "Repeat the count over several thresholds");
  swp->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  swp->add_option("--threshold", thresholds, "Thresholds (repeatable; default from config)");
  swp->add_option("--param", params, "Analysis override key=value (repeatable)");
  swp->add_option("--jobs", jobs, "Worker threads");

  auto* fit = app.add_subcommand("fit", "Fit density against total junction area");
  auto* fit_ds = fit->add_option("--dataset", dataset_dir, "Dataset directory (uses analysis/summary.csv)");
  fit->add_option("--summary", summary_path, "Summary CSV outside a dataset")->excludes(fit_ds);
  fit->add_option("--mode", fit_mode, "weighted or unweighted (default from config)")
      ->check(CLI::IsMember({"weighted", "unweighted"}));

  auto* rep = app.add_subcommand("report", "Write the device table and plot-ready tables");
  rep->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  rep->add_option("--jobs", jobs, "Worker threads");

  auto* exp = app.add_subcommand("expand", "Print a configuration with every default filled in");
  exp->add_option("--config", config_path, "Run configuration (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      auto cfg = config::load(config_path);
      if (seed) cfg.master_seed = *seed;
      pipeline::simulate(cfg, dataset_dir, pipeline::resolve_jobs(jobs));
      std::size_t n = 0;
      for (const auto& c : cfg.chips) n += static_cast<std::size_t>(c.n_qubits * cfg.temporal.cooldowns);
      std::cout << "wrote " << n << " spectra to " << dataset_dir << "\n";
    } else if (*ana) {
      const auto res = pipeline::analyze(dataset_dir, params, threshold, pipeline::resolve_jobs(jobs));
      for (const auto& r : res.groups) {
        if (r.kind == "all" || r.kind == "cohort" || r.kind == "chip") print_row(r);
      }
    } else if (*swp) {
      const auto pts = pipeline::sweep(dataset_dir, thresholds, params, pipeline::resolve_jobs(jobs));
      for (const auto& p : pts) {
        std::cout << "threshold " << fmt(p.threshold) << ": ";
        print_row(p.all);
      }
    } else if (*fit) {
      if (dataset_dir.empty() && summary_path.empty()) throw io::IoError("fit needs --dataset or --summary");
      fitstats::FitMode mode;
      if (!fit_mode.empty()) {
        mode = fit_mode == "weighted" ? fitstats::FitMode::weighted : fitstats::FitMode::unweighted;
      } else if (!dataset_dir.empty()) {
        mode = config::load(dataset::Layout{dataset_dir}.config()).fit_mode;
      } else {
        mode = fitstats::FitMode::weighted;
      }
      const auto f = dataset_dir.empty()
                         ? pipeline::fit(summary_path, mode)
                         : pipeline::fit(dataset::Layout{dataset_dir}.analysis_dir() / "summary.csv", mode,
                                         std::filesystem::path(dataset_dir));
      std::cout << "alpha = " << fmt(f.alpha) << " +- " << fmt(f.alpha_err) << " /(GHz um^2), beta = " << fmt(f.beta)
                << " +- " << fmt(f.beta_err) << " /GHz";
      if (f.chi2_red) std::cout << ", chi2_red = " << fmt(*f.chi2_red);
      std::cout << "\n";
    } else if (*rep) {
      const auto rows = pipeline::report(dataset_dir, pipeline::resolve_jobs(jobs));
      for (const auto& r : rows) {
        std::cout << r.chip_label << ": " << r.n_qubits << " qubits, " << r.n_defects << " defects in "
                  << fmt(r.bandwidth_ghz) << " GHz\n";
      }
    } else if (*exp) {
      std::cout << config::expanded(config::load(config_path)).dump(2) << "\n";
    }
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const dataset::IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const io::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
