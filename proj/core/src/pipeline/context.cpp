#include "alirector/pipeline/context.hpp"

#include <cstdlib>

#include "alirector/common/error.hpp"

namespace alirector::pipeline {

RunContext::RunContext(KeyValues config, fs::path dir, bool force,
                       std::optional<fs::path> init_from)
    : config_(std::move(config)),
      dir_(std::move(dir)),
      force_(force),
      init_from_(std::move(init_from)) {}

std::uint64_t RunContext::seed() const {
  const long s = config_.get_long("seed", 1);
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

RunContext RunContext::resolve(const RunOptions& options) {
  KeyValues config;
  if (!options.config_path.empty()) config = KeyValues::load(options.config_path);
  for (const std::string& assignment : options.overrides) config.apply_override(assignment);
  if (options.seed) config.set("seed", std::to_string(*options.seed));

  fs::path dir;
  if (options.run_dir) {
    dir = *options.run_dir;
  } else {
    const std::string name =
        options.config_path.empty() ? "run" : options.config_path.stem().string();
    const std::string leaf = name + "-s" + config.get_string("seed", "1");
    const char* root = std::getenv(kRunRootVariable);
    dir = (root && *root ? fs::path(root) : fs::path("runs")) / leaf;
  }
  RunContext ctx(std::move(config), std::move(dir), options.force, options.init_from);
  ctx.set_modes(options.modes);
  return ctx;
}

}  // namespace alirector::pipeline
