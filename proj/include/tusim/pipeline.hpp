#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tusim/compose.hpp"

namespace tusim {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Preset { Brain, Liver, Custom };

Preset preset_from_string(const std::string& s);
std::string preset_to_string(Preset p);

struct GenerateConfig {
  Preset preset = Preset::Brain;
  std::string pool_dir;
  std::string roi_dir;  // optional; masks paired with pool files by name
  std::string out_dir;
  int count = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  ComposeConfig compose;

  // Fills the preset defaults: brain K=1 with r in (1,3), liver
  // K in {1..15} with r in (1/8, 1/2).
  void apply_preset();
  void validate() const;
};

struct ManifestEntry {
  int index = -1;
  std::string x_path, x_n_path, s_path, m_path;
  std::uint64_t x_digest = 0, x_n_digest = 0, s_digest = 0, m_digest = 0;
  SampleRecord record;
};

struct Manifest {
  std::string tool_version = kToolVersion;
  nlohmann::json config_snapshot;
  std::vector<ManifestEntry> entries;
};

// FNV-1a 64 over the file bytes; corruption detection, not crypto.
std::uint64_t file_digest(const std::string& path);

// JSON (de)serialization for configs and manifests.
nlohmann::json to_json(const GenerateConfig& cfg);
GenerateConfig generate_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

// Reads every .nii/.nii.gz volume under dir, sorted by filename.
std::vector<std::string> list_volume_files(const std::string& dir);
std::vector<Volume> load_pool(const std::string& dir);

// Writes `count` samples plus manifest.json into out_dir. Byte-identical
// results for a given (config, seed) regardless of worker count.
Manifest generate_batch(const GenerateConfig& cfg);

// Recomputes digests for every referenced file; throws on any mismatch.
void verify_manifest(const Manifest& m, const std::string& base_dir);

}  // namespace tusim
