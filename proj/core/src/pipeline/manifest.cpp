#include "alirector/pipeline/manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"

namespace alirector::pipeline {

using json = nlohmann::ordered_json;

std::string Manifest::to_json() const {
  json j;
  j["stage"] = stage;
  j["config_hash"] = config_hash;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["extra"] = json::parse(extra);
  j["wall_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.extra = j.value("extra", json::object()).dump();
    m.wall_seconds = j.value("wall_seconds", 0.0);
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

std::optional<Manifest> read_manifest(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return Manifest::from_json(read_text(path));
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  write_text(path, manifest.to_json());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace alirector::pipeline
