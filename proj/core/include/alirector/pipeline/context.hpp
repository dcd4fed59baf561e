#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alirector/common/kv.hpp"

namespace alirector::pipeline {

namespace fs = std::filesystem;

// Command-line view of one invocation.
struct RunOptions {
  fs::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> run_dir;
  bool force = false;
  std::optional<fs::path> init_from;
  std::vector<std::string> overrides;  // "key=value"
  // Stage-specific selector (ablation modes, prediction model).
  std::vector<std::string> modes;
};

// Environment variable naming the directory under which run directories
// are created when --run-dir is absent.
inline constexpr const char* kRunRootVariable = "ALIRECTOR_RUN_ROOT";

// Resolved configuration and location of a run.
class RunContext {
 public:
  // Loads the config file (if any), applies --set overrides and --seed, and
  // picks the run directory: --run-dir, else $ALIRECTOR_RUN_ROOT/<name>-s<seed>,
  // else runs/<name>-s<seed>.
  static RunContext resolve(const RunOptions& options);

  // For tests and in-process callers.
  RunContext(KeyValues config, fs::path dir, bool force = false,
             std::optional<fs::path> init_from = std::nullopt);

  const KeyValues& config() const { return config_; }
  KeyValues& config() { return config_; }
  const fs::path& dir() const { return dir_; }
  std::uint64_t seed() const;
  bool force() const { return force_; }
  const std::optional<fs::path>& init_from() const { return init_from_; }
  const std::vector<std::string>& modes() const { return modes_; }
  void set_modes(std::vector<std::string> modes) { modes_ = std::move(modes); }

  fs::path path(const std::string& relative) const { return dir_ / relative; }

 private:
  KeyValues config_;
  fs::path dir_;
  bool force_ = false;
  std::optional<fs::path> init_from_;
  std::vector<std::string> modes_;
};

}  // namespace alirector::pipeline
