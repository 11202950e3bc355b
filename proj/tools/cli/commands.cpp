#include "cli/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "lif/clustering.hpp"
#include "lif/egomotion.hpp"
#include "lif/io.hpp"
#include "lif/metrics.hpp"
#include "lif/optimize.hpp"
#include "lif/preprocess.hpp"
#include "lif/synth.hpp"

namespace lif::cli {
namespace fs = std::filesystem;
namespace {

template <typename... Args>
std::string fmt(const char* pattern, Args... args) {
  const int n = std::snprintf(nullptr, 0, pattern, args...);
  std::string s(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(s.data(), s.size(), pattern, args...);
  s.resize(static_cast<std::size_t>(n));
  return s;
}

bool same_f32(const Vec3& a, const Vec3& b) {
  for (int u = 0; u < 3; ++u) {
    if (static_cast<float>(a[u]) != static_cast<float>(b[u])) return false;
  }
  return true;
}

bool flow_file_matches(const fs::path& path, const FlowField& flow,
                       const std::vector<std::uint32_t>* labels) {
  const io::FlowFile back = io::load_flow(path);
  if (back.flow.size() != flow.size()) return false;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (!same_f32(back.flow.vectors[i], flow.vectors[i])) return false;
  }
  if (labels == nullptr) return !back.labels;
  return back.labels && *back.labels == *labels;
}

bool cloud_file_matches(const fs::path& path, const TimedPointCloud& cloud) {
  const TimedPointCloud back = io::load_cloud(path, io::CloudFormat::kBinary);
  if (back.size() != cloud.size() || back.frame_index != cloud.frame_index) return false;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!same_f32(back.points[i], cloud.points[i])) return false;
  }
  return back.gt_flow.has_value() == cloud.gt_flow.has_value() &&
         back.class_id == cloud.class_id && back.is_foreground == cloud.is_foreground;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string trace_csv(const RunResult& run) {
  std::string s = "iteration,total,dist,hard,soft,num_clusters\n";
  for (std::size_t i = 0; i < run.loss_trace.size(); ++i) {
    const LossSummary& l = run.loss_trace[i];
    s += fmt("%zu,%.17g,%.17g,%.17g,%.17g,%zu\n", i, l.total, l.dist, l.hard, l.soft,
             l.num_clusters);
  }
  return s;
}

std::string metrics_row(const std::string& name, const FlowMetrics& m) {
  if (!m.defined()) return fmt("%-20s %8s %8s %8s %8s %8s %8zu\n", name.c_str(), "-", "-", "-", "-", "-", m.count);
  return fmt("%-20s %8.4f %8.4f %8.4f %8.4f %8.4f %8zu\n", name.c_str(), m.epe, m.acc_strict,
             m.acc_relaxed, m.outliers, m.angle_error, m.count);
}

std::string csv_row(const std::string& name, const FlowMetrics& m) {
  return fmt("%s,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n", name.c_str(), m.epe, m.acc_strict,
             m.acc_relaxed, m.outliers, m.angle_error, m.count);
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? fmt("%8.4f", *v) : fmt("%8s", "-");
}

}  // namespace

int cmd_flow(const std::vector<std::string>& frames, const CliConfig& config, std::ostream& out,
             std::ostream& err) {
  const RunConfig run_config = config.effective_run();
  run_config.validate();
  if (frames.size() < 2) {
    err << "lif flow: need at least two frames\n";
    return kExitFailure;
  }
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);

  std::vector<TimedPointCloud> clouds;
  std::string load_failure;
  for (const std::string& path : frames) {
    try {
      TimedPointCloud c = io::load_cloud(path);
      c.validate();
      if (config.preprocess.enabled) {
        c = preprocess(c, config.preprocess.ground_height, config.preprocess.max_range).cloud;
      }
      if (c.empty()) throw Error(ErrorKind::kPrecondition, "no points left after preprocessing");
      clouds.push_back(std::move(c));
    } catch (const Error& e) {
      load_failure = path + ": " + e.what();
      err << "lif flow: " << load_failure << "\n";
      break;
    }
    if (config.verbose) err << "loaded " << path << " (" << clouds.back().size() << " points)\n";
  }

  SequenceOutcome outcome;
  if (clouds.size() >= 2) outcome = run_sequence_checked(clouds, run_config, config.jobs);

  bool all_ok = load_failure.empty();
  std::string manifest = fmt("frames %zu\npairs %zu\n", frames.size(), frames.size() - 1);
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    const std::string stem = fmt("pair_%04zu", t);
    const bool have = t < outcome.results.size() && outcome.results[t].has_value();
    if (!have) {
      std::string why = "frame not loaded";
      if (t < outcome.errors.size() && outcome.errors[t]) why = outcome.errors[t]->what();
      manifest += fmt("%s failed %s\n", stem.c_str(), why.c_str());
      err << "lif flow: " << stem << ": " << why << "\n";
      all_ok = false;
      continue;
    }
    const PairResult& pr = *outcome.results[t];
    const RunResult& run = pr.run;
    const fs::path flow_path = dir / (stem + ".liff");
    const fs::path source_path = dir / (stem + "_source.lifc");
    const fs::path trace_path = dir / (stem + "_trace.csv");
    bool valid = true;
    try {
      io::save_flow(flow_path, run.flow, std::span<const std::uint32_t>(run.clusters.labels));
      io::save_cloud(source_path, pr.source);
      valid = flow_file_matches(flow_path, run.flow, &run.clusters.labels) &&
              cloud_file_matches(source_path, pr.source);
      if (config.output.trace) {
        const std::string csv = trace_csv(run);
        write_text(trace_path, csv);
        valid = valid && read_text(trace_path) == csv;
      }
    } catch (const Error& e) {
      err << "lif flow: " << stem << ": " << e.what() << "\n";
      valid = false;
    }
    if (!valid) {
      manifest += fmt("%s failed output validation\n", stem.c_str());
      all_ok = false;
      continue;
    }
    const double final_loss = run.loss_trace.empty() ? 0.0 : run.loss_trace.back().total;
    out << fmt("%s: iterations %zu, final loss %.6f, clusters %zu, merges %zu, icp residual %.4f\n",
               stem.c_str(), run.iterations_run, final_loss, run.clusters.num_clusters,
               run.merge_events.size(), pr.icp_residual);
    manifest += fmt("%s ok %s\n", stem.c_str(), flow_path.filename().string().c_str());
  }
  manifest += all_ok ? "status complete\n" : "status incomplete\n";
  write_text(dir / "MANIFEST", manifest);
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_eval(const std::string& prediction, const std::string& cloud_path,
             const CliConfig& config, std::ostream& out, std::ostream& err) {
  const io::FlowFile pred = io::load_flow(prediction);
  const TimedPointCloud cloud = io::load_cloud(cloud_path);
  cloud.validate();
  if (!cloud.gt_flow) {
    err << "lif eval: " << cloud_path << " has no ground-truth flow\n";
    return kExitFailure;
  }
  if (pred.flow.size() != cloud.size()) {
    err << "lif eval: prediction has " << pred.flow.size() << " vectors but the cloud has "
        << cloud.size() << " points\n";
    return kExitFailure;
  }
  const auto& gt = *cloud.gt_flow;
  const MetricOptions& opts = config.metrics;

  std::string table = fmt("%-20s %8s %8s %8s %8s %8s %8s\n", "bucket", "EPE", "AS", "AR", "Out",
                          "Angle", "Count");
  std::string csv = "bucket,epe,as,ar,out,angle,count\n";
  const FlowMetrics all = flow_metrics(pred.flow.vectors, gt, {}, opts);
  table += metrics_row("all", all);
  csv += csv_row("all", all);

  if (cloud.is_foreground) {
    const ThreewayReport tw = threeway(pred.flow.vectors, gt, *cloud.is_foreground, opts);
    const std::pair<const char*, const FlowMetrics*> buckets[] = {
        {"dynamic_foreground", &tw.dynamic_foreground},
        {"static_foreground", &tw.static_foreground},
        {"static_background", &tw.static_background}};
    for (const auto& [name, m] : buckets) {
      table += metrics_row(name, *m);
      csv += csv_row(name, *m);
    }
    table += fmt("threeway average EPE %.4f (dynamic background excluded: %zu)\n",
                 tw.average_epe, tw.excluded);
  } else {
    table += "no foreground flags: threeway split skipped\n";
  }

  if (cloud.class_id) {
    table += fmt("%-8s %8s %8s %8s\n", "class", "Avg.", "Dyn.", "Stat.");
    for (const auto& [cls, e] : per_class(pred.flow.vectors, gt, *cloud.class_id, opts)) {
      table += fmt("%-8u %s %s %s\n", static_cast<unsigned>(cls), opt_cell(e.avg).c_str(),
                   opt_cell(e.dyn).c_str(), opt_cell(e.stat).c_str());
    }
  }
  out << table;

  if (!config.output.csv.empty()) {
    write_text(config.output.csv, csv);
    if (read_text(config.output.csv) != csv) {
      err << "lif eval: CSV validation failed\n";
      return kExitFailure;
    }
  }
  return kExitOk;
}

int cmd_synth(const std::string& scene, const CliConfig& config, std::ostream& out,
              std::ostream& err) {
  const std::uint64_t seed = derive_seed(config.seed, "synth");
  const auto spec = synth::scene_by_name(scene, seed);
  if (!spec) {
    err << "lif synth: unknown scene '" << scene << "'; known: fig2";
    for (const auto& s : synth::benchmark_suite(0)) err << ", " << s.name;
    err << "\n";
    return kExitFailure;
  }
  const std::vector<TimedPointCloud> frames = synth::generate(*spec);
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  std::string manifest = fmt("scene %s\nseed %llu\nframes %zu\n", scene.c_str(),
                             static_cast<unsigned long long>(config.seed), frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::string name = fmt("frame_%04zu.lifc", t);
    io::save_cloud(dir / name, frames[t]);
    if (!cloud_file_matches(dir / name, frames[t])) {
      err << "lif synth: validation failed for " << name << "\n";
      return kExitFailure;
    }
    manifest += name + "\n";
  }
  write_text(dir / "manifest.txt", manifest);
  out << fmt("wrote %zu frames of '%s' to %s\n", frames.size(), scene.c_str(),
             dir.string().c_str());
  return kExitOk;
}

int cmd_icp(const std::string& source, const std::string& target, const CliConfig& config,
            std::ostream& out, std::ostream&) {
  config.run.icp.validate();
  const TimedPointCloud src = io::load_cloud(source);
  const TimedPointCloud dst = io::load_cloud(target);
  src.validate();
  dst.validate();
  const IcpResult r = icp(src, dst, config.run.icp);
  const Mat3& rot = r.transform.rotation();
  const Vec3& tr = r.transform.translation();
  out << "rotation\n";
  for (int i = 0; i < 3; ++i) {
    out << fmt("  %.12f %.12f %.12f\n", rot(i, 0), rot(i, 1), rot(i, 2));
  }
  out << fmt("translation %.12f %.12f %.12f\n", tr.x(), tr.y(), tr.z());
  out << fmt("angle_deg %.9f\n", r.transform.rotation_angle() * 180.0 / 3.14159265358979323846);
  out << fmt("residual %.9f\niterations %zu\n", r.residual, r.iterations);
  return kExitOk;
}

int cmd_cluster(const std::vector<std::string>& frames, const CliConfig& config,
                std::ostream& out, std::ostream&) {
  config.run.cluster.validate();
  std::vector<TimedPointCloud> window;
  for (const std::string& path : frames) {
    window.push_back(io::load_cloud(path));
    window.back().validate();
  }
  if (window.empty()) throw Error(ErrorKind::kPrecondition, "lif cluster: no frames");
  const HardClustering h = spatiotemporal_hard_clusters(window, config.run.cluster);
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  const fs::path path = dir / "clusters.liff";
  const FlowField zero = FlowField::zeros(h.size());
  io::save_flow(path, zero, std::span<const std::uint32_t>(h.labels));
  if (!flow_file_matches(path, zero, &h.labels)) {
    throw Error(ErrorKind::kIo, "validation failed for " + path.string());
  }
  out << fmt("points %zu clusters %zu -> %s\n", h.size(), h.num_clusters, path.string().c_str());
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig config;
  std::vector<Field> registry = fields(config);

  CLI::App app{"Joint scene flow and rigid segmentation for point-cloud sequences", "lif"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file of flat dotted keys (fallback: $LIF_CONFIG)");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "progress messages on stderr");
  std::vector<std::string> raw(registry.size());
  std::vector<CLI::Option*> options(registry.size(), nullptr);
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const Field& f = registry[i];
    if (f.key == "verbose") continue;
    std::string name = "--" + f.key;
    if (f.key == "output.dir") name = "-o," + name;
    options[i] = app.add_option(name, raw[i], f.help);
  }

  std::vector<std::string> frames;
  std::string first, second;
  auto* flow = app.add_subcommand("flow", "estimate flow for every consecutive frame pair");
  flow->add_option("frames", frames, "input clouds in temporal order")->required();
  auto* eval = app.add_subcommand("eval", "score a predicted flow against a cloud's ground truth");
  eval->add_option("prediction", first, ".liff prediction")->required();
  eval->add_option("cloud", second, "cloud with ground-truth flow")->required();
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic scene");
  synth_cmd->add_option("scene", first, "scene name")->required();
  auto* icp_cmd = app.add_subcommand("icp", "register source onto target");
  icp_cmd->add_option("source", first, "source cloud")->required();
  icp_cmd->add_option("target", second, "target cloud")->required();
  auto* cluster = app.add_subcommand("cluster", "spatio-temporal hard clusters of the last frame");
  cluster->add_option("frames", frames, "window of clouds, last one labelled")->required();
  for (auto* sub : {flow, eval, synth_cmd, icp_cmd, cluster}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("LIF_CONFIG"); env != nullptr) config_path = env;
    }
    if (!config_path.empty()) load_config_file(config, config_path);
    for (std::size_t i = 0; i < registry.size(); ++i) {
      if (options[i] != nullptr && options[i]->count() > 0) registry[i].from_text(raw[i]);
    }
    if (verbose) config.verbose = true;
    if (config.jobs < 1) throw Error(ErrorKind::kPrecondition, "jobs must be >= 1");

    if (flow->parsed()) return cmd_flow(frames, config, out, err);
    if (eval->parsed()) return cmd_eval(first, second, config, out, err);
    if (synth_cmd->parsed()) return cmd_synth(first, config, out, err);
    if (icp_cmd->parsed()) return cmd_icp(first, second, config, out, err);
    if (cluster->parsed()) return cmd_cluster(frames, config, out, err);
  } catch (const Error& e) {
    err << "lif: error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "lif: error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lif::cli
