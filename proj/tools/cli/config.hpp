#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lif/metrics.hpp"
#include "lif/optimize.hpp"

namespace lif::cli {

struct PreprocessConfig {
  bool enabled = true;
  double ground_height = 0.3;  // m
  double max_range = 35.0;     // m
};

struct OutputConfig {
  std::string dir = ".";
  bool trace = true;  // write a loss-trace CSV per pair
  std::string csv;    // eval: optional CSV report path
};

/// Everything a subcommand can be configured with. Every field has a flat
/// dotted key (see fields()) usable both in a JSON config file and as a
/// --key flag.
struct CliConfig {
  RunConfig run;
  MetricOptions metrics;
  PreprocessConfig preprocess;
  OutputConfig output;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool verbose = false;

  /// RunConfig with the loss sampling seed derived from `seed`.
  RunConfig effective_run() const;
};

/// Seed for a named subsystem, derived from the top-level seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view subsystem);

struct Field {
  std::string key;
  std::string help;
  std::function<void(const nlohmann::json&)> from_json;
  std::function<void(const std::string&)> from_text;
  std::function<nlohmann::json()> to_json;
};

/// The key registry bound to `config`. The functions capture the reference.
std::vector<Field> fields(CliConfig& config);

/// Applies a JSON object of flat dotted keys. Unknown keys, nested objects
/// and ill-typed values throw Error(kParse).
void apply_json(CliConfig& config, const nlohmann::json& doc);
void load_config_file(CliConfig& config, const std::filesystem::path& path);

nlohmann::json to_json(CliConfig& config);

}  // namespace lif::cli
