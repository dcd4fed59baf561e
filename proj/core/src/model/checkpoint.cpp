#include "alirector/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"

namespace alirector::model {
namespace {

constexpr char kMagic[8] = {'A', 'L', 'R', 'C', 'K', 'P', 'T', '1'};

using json = nlohmann::ordered_json;

json config_json(const ModelConfig& c) {
  return json{{"arch", std::string(to_string(c.arch))},
              {"layers", c.layers},
              {"heads", c.heads},
              {"hidden_dim", c.hidden_dim},
              {"ffn_dim", c.ffn_dim},
              {"vocab_size", c.vocab_size},
              {"max_positions", c.max_positions},
              {"dropout", c.dropout},
              {"dropout_src", c.dropout_src},
              {"init_std", c.init_std},
              {"positions", std::string(to_string(c.positions))},
              {"slot_positions", c.slot_positions},
              {"prompt_template", c.prompt_template}};
}

ModelConfig config_of(const json& j) {
  ModelConfig c;
  const auto arch = parse_architecture(j.at("arch").get<std::string>());
  if (!arch) throw ParseError("checkpoint names an unknown architecture");
  c.arch = *arch;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_positions = j.at("max_positions").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.dropout_src = j.at("dropout_src").get<double>();
  c.init_std = j.at("init_std").get<double>();
  const auto positions = parse_position_encoding(j.value("positions", std::string("learned")));
  if (!positions) throw ParseError("checkpoint names an unknown position encoding");
  c.positions = *positions;
  c.slot_positions = j.value("slot_positions", false);
  c.prompt_template = j.value("prompt_template", std::string("plain"));
  c.validate();
  return c;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& origin) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(origin + ": truncated checkpoint header");
  }
  return value;
}

}  // namespace

std::string config_to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig config_from_json(const std::string& text) {
  try {
    return config_of(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng rng_from_string(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  if (in.fail()) throw ParseError("malformed rng state");
  return rng;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const Rng* rng,
                     const std::string& metadata) {
  json header;
  header["config"] = config_json(params.config());
  header["role"] = std::string(to_string(params.role()));
  json arrays = json::array();
  for (const ArrayInfo& info : params.layout().arrays()) {
    arrays.push_back({info.name, info.rows, info.cols});
  }
  header["arrays"] = std::move(arrays);
  header["rng"] = rng ? json(rng_to_string(*rng)) : json(nullptr);
  json meta = json::parse(metadata.empty() ? "{}" : metadata);
  if (!meta.is_object()) throw ContractError("checkpoint metadata must be a JSON object");
  header["metadata"] = std::move(meta);
  header["param_hash"] = params.hash();
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(params.values().data()),
              static_cast<std::streamsize>(params.values().size() * sizeof(double)));
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string origin = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing checkpoint " + origin);
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(origin + ": not a checkpoint file");
  }
  const auto version = read_pod<std::uint32_t>(in, origin);
  if (version != kCheckpointVersion) {
    throw IntegrityError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = read_pod<std::uint64_t>(in, origin);
  if (length > (1ULL << 30)) throw ParseError(origin + ": implausible header length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw ParseError(origin + ": truncated checkpoint header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
  try {
    const ModelConfig config = config_of(header.at("config"));
    const auto role = parse_role(header.at("role").get<std::string>());
    if (!role) throw ParseError(origin + ": unknown role");
    Checkpoint ck{ModelParams(config, *role), std::nullopt, header.at("metadata").dump()};
    const auto& arrays = ck.params.layout().arrays();
    const json& stored = header.at("arrays");
    if (stored.size() != arrays.size()) {
      throw IntegrityError(origin + ": array table does not match the configuration");
    }
    for (std::size_t i = 0; i < arrays.size(); ++i) {
      if (stored[i].at(0).get<std::string>() != arrays[i].name ||
          stored[i].at(1).get<std::size_t>() != arrays[i].rows ||
          stored[i].at(2).get<std::size_t>() != arrays[i].cols) {
        throw IntegrityError(origin + ": array " + arrays[i].name + " does not match");
      }
    }
    auto& values = ck.params.values();
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw ParseError(origin + ": truncated weight payload");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw ParseError(origin + ": trailing bytes after weights");
    }
    if (header.contains("param_hash") &&
        header["param_hash"].get<std::string>() != ck.params.hash()) {
      throw IntegrityError(origin + ": weight hash mismatch");
    }
    if (header.at("rng").is_string()) ck.rng_state = header["rng"].get<std::string>();
    return ck;
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

}  // namespace alirector::model
