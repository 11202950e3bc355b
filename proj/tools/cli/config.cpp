#include "cli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <type_traits>
#include <utility>

namespace lif::cli {
namespace {

[[noreturn]] void parse_error(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::kParse, "config key '" + key + "': " + why);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) parse_error(key, "cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  parse_error(key, "expected a boolean, got '" + text + "'");
}

template <typename T>
Field scalar(std::string key, T& ref, std::string help) {
  Field f;
  f.key = key;
  f.help = std::move(help);
  f.to_json = [&ref] { return nlohmann::json(ref); };
  if constexpr (std::is_same_v<T, bool>) {
    f.from_text = [&ref, key](const std::string& s) { ref = parse_bool(key, s); };
    f.from_json = [&ref, key](const nlohmann::json& j) {
      if (!j.is_boolean()) parse_error(key, "expected a boolean");
      ref = j.get<bool>();
    };
  } else if constexpr (std::is_floating_point_v<T>) {
    f.from_text = [&ref, key](const std::string& s) { ref = parse_number<T>(key, s); };
    f.from_json = [&ref, key](const nlohmann::json& j) {
      if (!j.is_number()) parse_error(key, "expected a number");
      ref = j.get<T>();
    };
  } else if constexpr (std::is_integral_v<T>) {
    f.from_text = [&ref, key](const std::string& s) { ref = parse_number<T>(key, s); };
    f.from_json = [&ref, key](const nlohmann::json& j) {
      if (!j.is_number_integer()) parse_error(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0) {
          parse_error(key, "expected a non-negative integer");
        }
        const auto v = j.get<std::uint64_t>();
        if (v > std::numeric_limits<T>::max()) parse_error(key, "integer out of range");
        ref = static_cast<T>(v);
      } else {
        const auto v = j.get<std::int64_t>();
        if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max()) {
          parse_error(key, "integer out of range");
        }
        ref = static_cast<T>(v);
      }
    };
  } else {
    static_assert(std::is_same_v<T, std::string>);
    f.from_text = [&ref](const std::string& s) { ref = s; };
    f.from_json = [&ref, key](const nlohmann::json& j) {
      if (!j.is_string()) parse_error(key, "expected a string");
      ref = j.get<std::string>();
    };
  }
  return f;
}

template <typename E, std::size_t N>
Field choice(std::string key, E& ref, std::array<std::pair<const char*, E>, N> names,
             std::string help) {
  Field f;
  f.key = key;
  f.help = std::move(help);
  auto set = [&ref, key, names](const std::string& s) {
    for (const auto& [name, value] : names) {
      if (s == name) {
        ref = value;
        return;
      }
    }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += std::string(allowed.empty() ? "" : ", ") + name;
    parse_error(key, "expected one of " + allowed + ", got '" + s + "'");
  };
  f.from_text = set;
  f.from_json = [set, key](const nlohmann::json& j) {
    if (!j.is_string()) parse_error(key, "expected a string");
    set(j.get<std::string>());
  };
  f.to_json = [&ref, names] {
    for (const auto& [name, value] : names) {
      if (value == ref) return nlohmann::json(name);
    }
    return nlohmann::json();
  };
  return f;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view subsystem) {
  // FNV-1a over the name, then one splitmix64 round mixed with the seed.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : subsystem) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  std::uint64_t x = seed ^ h;
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RunConfig CliConfig::effective_run() const {
  RunConfig r = run;
  r.loss.rng_seed = derive_seed(seed, "loss");
  return r;
}

std::vector<Field> fields(CliConfig& c) {
  RunConfig& r = c.run;
  return {
      scalar("seed", c.seed, "top-level random seed"),
      scalar("jobs", c.jobs, "pairs processed concurrently"),
      scalar("verbose", c.verbose, "progress messages on stderr"),

      scalar("run.max_iterations", r.max_iterations, "optimizer iteration cap"),
      scalar("run.convergence_tol", r.convergence_tol,
             "relative change of the windowed mean loss that stops the run (0 disables)"),
      scalar("run.convergence_window", r.convergence_window, "moving-average window"),
      scalar("run.lr", r.lr, "Adam learning rate"),
      scalar("run.enable_hard", r.enable_hard, "hard-cluster rigidity term"),
      scalar("run.enable_soft", r.enable_soft, "soft-cluster rigidity term"),
      scalar("run.enable_merge", r.enable_merge, "flow-guided cluster merging"),
      scalar("run.reinit_after_merge", r.reinit_after_merge,
             "restart from zero flow after a merge"),
      scalar("run.index_rebuild_period", r.index_rebuild_period,
             "iterations between rebuilds of the warped-source index"),
      scalar("run.ego_compensate", r.ego_compensate, "estimate ego-motion with ICP"),

      scalar("loss.alpha", r.loss.alpha, "distance term weight"),
      scalar("loss.beta", r.loss.beta, "hard rigidity weight"),
      scalar("loss.gamma", r.loss.gamma, "soft rigidity weight"),
      scalar("loss.theta", r.loss.theta, "reward scale (m^2)"),
      scalar("loss.reward_floor", r.loss.reward_floor, "lower bound inside -log"),
      scalar("loss.edge_budget", r.loss.edge_budget, "sampled edges per large hard cluster"),
      choice("loss.distance_norm", r.loss.distance_norm,
             std::array{std::pair{"squared", DistanceNorm::kSquared},
                        std::pair{"plain", DistanceNorm::kPlain}},
             "nearest-neighbour distance: squared or plain"),
      choice("loss.reward_form", r.loss.reward_form,
             std::array{std::pair{"euclidean", RewardForm::kEuclidean},
                        std::pair{"per_axis", RewardForm::kPerAxis}},
             "edge length comparison: euclidean or per_axis"),

      scalar("cluster.radius", r.cluster.radius, "Euclidean clustering radius (m)"),
      scalar("cluster.horizon", r.cluster.horizon, "frames accumulated for clustering"),
      scalar("cluster.k", r.cluster.k, "soft-cluster neighbours"),
      scalar("cluster.merge_vote_fraction", r.cluster.merge_vote_fraction,
             "vote share needed to merge"),
      scalar("cluster.merge_dist_cap", r.cluster.merge_dist_cap,
             "max warp-to-target distance for a vote (m)"),
      scalar("cluster.merge_period", r.cluster.merge_period, "iterations between merges"),

      scalar("icp.max_iterations", r.icp.max_iterations, "ICP iteration cap"),
      scalar("icp.convergence_tol", r.icp.convergence_tol, "ICP stop threshold (m)"),
      scalar("icp.max_correspondence_dist", r.icp.max_correspondence_dist,
             "ICP inlier distance (m)"),

      scalar("preprocess.enabled", c.preprocess.enabled, "ground removal and range crop"),
      scalar("preprocess.ground_height", c.preprocess.ground_height,
             "points at or below this z are dropped (m)"),
      scalar("preprocess.max_range", c.preprocess.max_range,
             "points beyond this planar range are dropped (m)"),

      scalar("metrics.dynamic_threshold", c.metrics.dynamic_threshold,
             "gt flow norm above which a point is dynamic (m)"),
      choice("metrics.angle_mode", c.metrics.angle_mode,
             std::array{std::pair{"homogeneous", AngleMode::kHomogeneous},
                        std::pair{"raw", AngleMode::kRaw}},
             "angle error convention: homogeneous or raw"),
      scalar("metrics.weighted_average", c.metrics.weighted_average,
             "weight the threeway average by bucket size"),
      scalar("metrics.strict_abs", c.metrics.thresholds.strict_abs, "AS absolute threshold (m)"),
      scalar("metrics.strict_rel", c.metrics.thresholds.strict_rel, "AS relative threshold"),
      scalar("metrics.relaxed_abs", c.metrics.thresholds.relaxed_abs, "AR absolute threshold (m)"),
      scalar("metrics.relaxed_rel", c.metrics.thresholds.relaxed_rel, "AR relative threshold"),
      scalar("metrics.outlier_abs", c.metrics.thresholds.outlier_abs,
             "outlier absolute threshold (m)"),
      scalar("metrics.outlier_rel", c.metrics.thresholds.outlier_rel, "outlier relative threshold"),

      scalar("output.dir", c.output.dir, "output directory"),
      scalar("output.trace", c.output.trace, "write per-pair loss traces"),
      scalar("output.csv", c.output.csv, "eval: CSV report path"),
  };
}

void apply_json(CliConfig& config, const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "config must be a JSON object");
  auto registry = fields(config);
  for (const auto& [key, value] : doc.items()) {
    auto it = std::find_if(registry.begin(), registry.end(),
                           [&](const Field& f) { return f.key == key; });
    if (it == registry.end()) parse_error(key, "unknown key");
    if (value.is_object() || value.is_array()) parse_error(key, "expected a scalar value");
    it->from_json(value);
  }
}

void load_config_file(CliConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, "config " + path.string() + ": " + e.what());
  }
  apply_json(config, doc);
}

nlohmann::json to_json(CliConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const Field& f : fields(config)) out[f.key] = f.to_json();
  return out;
}

}  // namespace lif::cli
