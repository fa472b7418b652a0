#pragma once

// Configuration-driven experiment runs over the numerical modules, with
// CSV outputs, a JSON run report and a text cache for length spectra.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwlab/arith.hpp"

namespace dwlab::cli {

enum class ExperimentKind { Spectrum, Thermo, Flowavg, Arith, Trace, Count };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Spectrum;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int threads = 1;

  /// Top-level keys: kind, parameters, seed, output_dir, threads. Unknown
  /// keys here or in parameters raise DomainError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Parameters with every default filled in; throws on unknown keys or
  /// wrongly typed values.
  nlohmann::json resolved_parameters() const;
};

struct Assertion {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
};

struct ProducedFile {
  std::string name;
  std::string sha1;
};

struct RunReport {
  nlohmann::json config;
  std::string input_hash;  // git blob hash of the canonical config
  double wall_seconds = 0.0;
  std::vector<ProducedFile> files;
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

/// Hex SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_hash(const std::string& content);

/// Validates the config, runs the pipeline for its kind, writes the CSVs and
/// report.json into output_dir. Nothing is written when validation fails.
RunReport run_experiment(const ExperimentConfig& config);

/// Text cache of a length spectrum:
///   # dwlab length-spectrum cache
///   # A=..,p=..,box=..,seed=..,weight_mode=..,m_max=..
///   m,y0,y1,y2,y3,class_id,primitive_length,omega_integral
///   one record per class
///   # end records=N
/// Reals are written with 17 significant digits. Class member counts are not
/// stored; loaded classes report members = 0.
void cache_length_spectrum(const arith::WeightedLengthSpectrum& wls,
                           const std::filesystem::path& path);

struct CacheKey {
  std::int64_t A = 0;
  std::int64_t p = 0;
  std::int64_t box = 0;
};

/// Parses a cache file. Errors carry the offending line number; a missing
/// trailer means the file was truncated. With `expect`, (A, p, box) must match.
arith::WeightedLengthSpectrum load_cache(const std::filesystem::path& path,
                                         std::optional<CacheKey> expect = std::nullopt);

}  // namespace dwlab::cli
