#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace lif::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Full command line entry point: parses flags, layers defaults, the config
/// file (--config, else $LIF_CONFIG) and flags, then dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes pair_NNNN.liff (flow + final labels), pair_NNNN_source.lifc (the
/// preprocessed, ego-compensated source the flow is aligned with),
/// pair_NNNN_trace.csv and a MANIFEST into config.output.dir.
int cmd_flow(const std::vector<std::string>& frames, const CliConfig& config, std::ostream& out,
             std::ostream& err);

int cmd_eval(const std::string& prediction, const std::string& cloud, const CliConfig& config,
             std::ostream& out, std::ostream& err);

/// Writes frame_NNNN.lifc files and manifest.txt into config.output.dir.
int cmd_synth(const std::string& scene, const CliConfig& config, std::ostream& out,
              std::ostream& err);

int cmd_icp(const std::string& source, const std::string& target, const CliConfig& config,
            std::ostream& out, std::ostream& err);

/// Clusters the frames as one spatio-temporal window (last frame = the cloud
/// that is labelled) and writes clusters.liff (zero flow + labels).
int cmd_cluster(const std::vector<std::string>& frames, const CliConfig& config,
                std::ostream& out, std::ostream& err);

}  // namespace lif::cli
