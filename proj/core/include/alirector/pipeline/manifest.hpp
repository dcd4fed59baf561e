#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alirector::pipeline {

namespace fs = std::filesystem;

// Provenance record written next to every stage output. Input and output
// paths are relative to the run directory.
struct Manifest {
  std::string stage;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::string extra = "{}";                    // stage-specific JSON object
  double wall_seconds = 0.0;

  std::string to_json() const;
  static Manifest from_json(const std::string& text);
};

std::optional<Manifest> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const Manifest& manifest);

// Writes `text` to `path` (creating parent directories) through a temporary
// file and rename.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace alirector::pipeline
