#pragma once

// Dataset directory layout and its content manifest.
//
//   <dataset>/config.json                       expanded run configuration
//   <dataset>/manifest.json                     sha256 + size of every other file
//   <dataset>/chips/<chip>/chip.json            chip and per-qubit metadata
//   <dataset>/chips/<chip>/qubits/<qb>/cooldown_<k>/spectrum.csv
//                                              .../spectrum.json   sidecar
//                                              .../ensemble.json   planted defects
//                                              .../report.json     written by analyze
//   <dataset>/analysis/...                      tables written by analyze/sweep/fit/report

#include "tlscensus/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlscensus::dataset {

namespace fs = std::filesystem;
using io::json;

/// Raised when files on disk do not match the manifest.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(io::read_text(path)); }

struct Layout {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path manifest() const { return root / "manifest.json"; }
  fs::path chip_dir(const std::string& chip) const { return root / "chips" / chip; }
  fs::path chip_meta(const std::string& chip) const { return chip_dir(chip) / "chip.json"; }
  fs::path cooldown_dir(const std::string& chip, const std::string& qubit, int k) const {
    return chip_dir(chip) / "qubits" / qubit / ("cooldown_" + std::to_string(k));
  }
  fs::path spectrum_csv(const specgen::SpectrumLabels& l) const {
    return cooldown_dir(l.chip_id, l.qubit_id, l.cooldown_index) / "spectrum.csv";
  }
  fs::path spectrum_sidecar(const specgen::SpectrumLabels& l) const {
    return cooldown_dir(l.chip_id, l.qubit_id, l.cooldown_index) / "spectrum.json";
  }
  fs::path ensemble(const specgen::SpectrumLabels& l) const {
    return cooldown_dir(l.chip_id, l.qubit_id, l.cooldown_index) / "ensemble.json";
  }
  fs::path report(const specgen::SpectrumLabels& l) const {
    return cooldown_dir(l.chip_id, l.qubit_id, l.cooldown_index) / "report.json";
  }
  fs::path analysis_dir() const { return root / "analysis"; }
};

struct ManifestEntry {
  std::string path;  // relative, '/' separated
  std::string sha256;
  std::uintmax_t bytes = 0;
  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> files;  // sorted by path

  json to_json() const {
    json arr = json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return {{"format", "tls-census-manifest/1"}, {"files", std::move(arr)}};
  }

  static Manifest from_json(const json& j) {
    Manifest m;
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::uintmax_t>()});
    }
    return m;
  }
};

inline std::string relative_key(const fs::path& root, const fs::path& file) {
  return fs::relative(file, root).generic_string();
}

/// Hashes every regular file under the dataset root except the manifest.
inline Manifest scan(const fs::path& root) {
  Manifest m;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw io::IoError("dataset directory " + root.string() + " does not exist");
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const auto key = relative_key(root, it->path());
    if (key == "manifest.json") continue;
    const auto text = io::read_text(it->path());
    m.files.push_back({key, sha256_hex(text), static_cast<std::uintmax_t>(text.size())});
  }
  if (ec) throw io::IoError("cannot walk " + root.string() + ": " + ec.message());
  std::sort(m.files.begin(), m.files.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return m;
}

inline void write_manifest(const Layout& layout) { io::write_json(layout.manifest(), scan(layout.root).to_json()); }

inline Manifest read_manifest(const Layout& layout) {
  if (!fs::exists(layout.manifest())) {
    throw IntegrityError("no manifest at " + layout.manifest().string() + "; was the dataset created by simulate?");
  }
  try {
    return Manifest::from_json(io::read_json(layout.manifest()));
  } catch (const json::exception& e) {
    throw IntegrityError(layout.manifest().string() + ": " + e.what());
  }
}

/// Checks the files on disk against the manifest. Missing, altered and
/// unlisted files are all reported by name.
inline void verify(const Layout& layout) {
  std::error_code ec;
  if (!fs::is_directory(layout.root, ec)) throw io::IoError("dataset directory " + layout.root.string() + " does not exist");
  const auto expected = read_manifest(layout);
  const auto actual = scan(layout.root);
  std::map<std::string, const ManifestEntry*> have;
  for (const auto& f : actual.files) have[f.path] = &f;
  std::vector<std::string> problems;
  for (const auto& f : expected.files) {
    const auto it = have.find(f.path);
    if (it == have.end()) {
      problems.push_back("missing: " + f.path);
    } else {
      if (it->second->sha256 != f.sha256) problems.push_back("hash mismatch: " + f.path);
      have.erase(it);
    }
  }
  for (const auto& [path, entry] : have) problems.push_back("not in manifest: " + path);
  if (!problems.empty()) {
    std::string msg = "dataset " + layout.root.string() + " failed integrity check:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw IntegrityError(msg);
  }
}

}  // namespace tlscensus::dataset
