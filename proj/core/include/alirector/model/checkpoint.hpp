#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "alirector/common/rng.hpp"
#include "alirector/model/params.hpp"

namespace alirector::model {

// On-disk layout: the 8-byte magic "ALRCKPT1", a little-endian u32 format
// version, a u64 header length, a JSON header (config, role, array table,
// rng state, free-form metadata) and finally the raw little-endian doubles
// in layout order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::optional<std::string> rng_state;
  // JSON object text supplied by the writer ("{}" when absent).
  std::string metadata = "{}";
};

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

// Writes atomically via a temporary file. `metadata` must be a JSON object.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Rng* rng = nullptr, const std::string& metadata = "{}");

// Throws ParseError for a malformed or truncated file, IntegrityError for a
// version or layout mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& state);

}  // namespace alirector::model
