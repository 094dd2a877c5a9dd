#include "tusim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "tusim/errors.hpp"
#include "tusim/io.hpp"

namespace fs = std::filesystem;

namespace tusim {

Preset preset_from_string(const std::string& s) {
  if (s == "brain") return Preset::Brain;
  if (s == "liver") return Preset::Liver;
  if (s == "custom") return Preset::Custom;
  throw config_error("unknown preset '" + s + "' (brain|liver|custom)");
}

std::string preset_to_string(Preset p) {
  switch (p) {
    case Preset::Brain: return "brain";
    case Preset::Liver: return "liver";
    default: return "custom";
  }
}

void GenerateConfig::apply_preset() {
  switch (preset) {
    case Preset::Brain:
      compose.k_min = 1;
      compose.k_max = 1;
      compose.texture.ratio_lo = 1.0;
      compose.texture.ratio_hi = 3.0;
      break;
    case Preset::Liver:
      compose.k_min = 1;
      compose.k_max = 15;
      compose.texture.ratio_lo = 1.0 / 8.0;
      compose.texture.ratio_hi = 1.0 / 2.0;
      break;
    case Preset::Custom:
      break;
  }
}

void GenerateConfig::validate() const {
  if (count < 1) throw config_error("sample count must be >= 1");
  if (workers < 1) throw config_error("worker count must be >= 1");
  if (pool_dir.empty()) throw config_error("pool directory is required");
  if (out_dir.empty()) throw config_error("output directory is required");
  compose.validate();
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

namespace {

using nlohmann::json;

json quat_to_json(const Quat& q) { return json{q.w, q.x, q.y, q.z}; }
Quat quat_from_json(const json& j) {
  return Quat{j.at(0), j.at(1), j.at(2), j.at(3)};
}

json noise_to_json(const NoiseParams& n) {
  return json{{"seed", n.seed},
              {"frequency", n.frequency},
              {"amplitude", n.amplitude},
              {"octaves", n.octaves},
              {"persistence", n.persistence}};
}
NoiseParams noise_from_json(const json& j) {
  NoiseParams n;
  n.seed = j.value("seed", n.seed);
  n.frequency = j.value("frequency", n.frequency);
  n.amplitude = j.value("amplitude", n.amplitude);
  n.octaves = j.value("octaves", n.octaves);
  n.persistence = j.value("persistence", n.persistence);
  return n;
}

json shape_params_to_json(const ShapeParams& p) {
  json j{{"subdivision_level", p.subdivision_level},
         {"radius_min_mm", p.radius_min_mm},
         {"radius_max_mm", p.radius_max_mm},
         {"scale_min", p.scale_min},
         {"scale_max", p.scale_max},
         {"noise", noise_to_json(p.noise)},
         {"clip_to_roi", p.clip_to_roi}};
  if (p.rotation) j["rotation"] = quat_to_json(*p.rotation);
  return j;
}
ShapeParams shape_params_from_json(const json& j) {
  ShapeParams p;
  p.subdivision_level = j.value("subdivision_level", p.subdivision_level);
  p.radius_min_mm = j.value("radius_min_mm", p.radius_min_mm);
  p.radius_max_mm = j.value("radius_max_mm", p.radius_max_mm);
  p.scale_min = j.value("scale_min", p.scale_min);
  p.scale_max = j.value("scale_max", p.scale_max);
  if (j.contains("noise")) p.noise = noise_from_json(j["noise"]);
  p.clip_to_roi = j.value("clip_to_roi", p.clip_to_roi);
  if (j.contains("rotation")) p.rotation = quat_from_json(j["rotation"]);
  return p;
}

json texture_params_to_json(const TextureParams& p) {
  return json{{"linear_enabled", p.linear_enabled},
              {"ratio_lo", p.ratio_lo},
              {"ratio_hi", p.ratio_hi},
              {"blur_enabled", p.blur_enabled},
              {"blur_sigma_lo_mm", p.blur_sigma_lo_mm},
              {"blur_sigma_hi_mm", p.blur_sigma_hi_mm},
              {"elastic_enabled", p.elastic_enabled},
              {"elastic_grid_spacing", p.elastic_grid_spacing},
              {"elastic_max_disp", p.elastic_max_disp},
              {"elastic_smooth_sigma", p.elastic_smooth_sigma}};
}
TextureParams texture_params_from_json(const json& j) {
  TextureParams p;
  p.linear_enabled = j.value("linear_enabled", p.linear_enabled);
  p.ratio_lo = j.value("ratio_lo", p.ratio_lo);
  p.ratio_hi = j.value("ratio_hi", p.ratio_hi);
  p.blur_enabled = j.value("blur_enabled", p.blur_enabled);
  p.blur_sigma_lo_mm = j.value("blur_sigma_lo_mm", p.blur_sigma_lo_mm);
  p.blur_sigma_hi_mm = j.value("blur_sigma_hi_mm", p.blur_sigma_hi_mm);
  p.elastic_enabled = j.value("elastic_enabled", p.elastic_enabled);
  p.elastic_grid_spacing = j.value("elastic_grid_spacing", p.elastic_grid_spacing);
  p.elastic_max_disp = j.value("elastic_max_disp", p.elastic_max_disp);
  p.elastic_smooth_sigma = j.value("elastic_smooth_sigma", p.elastic_smooth_sigma);
  return p;
}

json shape_record_to_json(const ShapeRecord& r) {
  return json{{"noise_seed", r.noise_seed},
              {"center", {r.center.x, r.center.y, r.center.z}},
              {"radius_mm", r.radius_mm},
              {"scale", {r.scale[0], r.scale[1], r.scale[2]}},
              {"rotation", quat_to_json(r.rotation)},
              {"noise", noise_to_json(r.noise)},
              {"subdivision_level", r.subdivision_level},
              {"radii_digest", r.radii_digest},
              {"voxel_count", r.voxel_count}};
}
ShapeRecord shape_record_from_json(const json& j) {
  ShapeRecord r;
  r.noise_seed = j.at("noise_seed");
  r.center = {j.at("center").at(0), j.at("center").at(1), j.at("center").at(2)};
  r.radius_mm = j.at("radius_mm");
  r.scale = {j.at("scale").at(0), j.at("scale").at(1), j.at("scale").at(2)};
  r.rotation = quat_from_json(j.at("rotation"));
  r.noise = noise_from_json(j.at("noise"));
  r.subdivision_level = j.at("subdivision_level");
  r.radii_digest = j.at("radii_digest");
  r.voxel_count = j.at("voxel_count");
  return r;
}

json texture_draw_to_json(const TextureDraw& t) {
  return json{{"linear_applied", t.linear_applied},
              {"r", t.r},
              {"blur_applied", t.blur_applied},
              {"sigma_mm", t.sigma_mm},
              {"elastic_applied", t.elastic_applied},
              {"elastic_seed", t.elastic_seed}};
}
TextureDraw texture_draw_from_json(const json& j) {
  TextureDraw t;
  t.linear_applied = j.at("linear_applied");
  t.r = j.at("r");
  t.blur_applied = j.at("blur_applied");
  t.sigma_mm = j.at("sigma_mm");
  t.elastic_applied = j.at("elastic_applied");
  t.elastic_seed = j.at("elastic_seed");
  return t;
}

json sample_record_to_json(const SampleRecord& r) {
  json shapes = json::array(), textures = json::array();
  for (const auto& s : r.shapes) shapes.push_back(shape_record_to_json(s));
  for (const auto& t : r.textures) textures.push_back(texture_draw_to_json(t));
  return json{{"stream_seed", r.stream_seed},
              {"target_index", r.target_index},
              {"donor_index", r.donor_index},
              {"alpha", r.alpha},
              {"shapes", shapes},
              {"textures", textures}};
}
SampleRecord sample_record_from_json(const json& j) {
  SampleRecord r;
  r.stream_seed = j.at("stream_seed");
  r.target_index = j.at("target_index");
  r.donor_index = j.at("donor_index");
  r.alpha = j.at("alpha");
  for (const auto& s : j.at("shapes")) r.shapes.push_back(shape_record_from_json(s));
  for (const auto& t : j.at("textures")) r.textures.push_back(texture_draw_from_json(t));
  return r;
}

}  // namespace

nlohmann::json to_json(const GenerateConfig& cfg) {
  return json{{"preset", preset_to_string(cfg.preset)},
              {"pool_dir", cfg.pool_dir},
              {"roi_dir", cfg.roi_dir},
              {"out_dir", cfg.out_dir},
              {"count", cfg.count},
              {"seed", cfg.seed},
              {"workers", cfg.workers},
              {"shape", shape_params_to_json(cfg.compose.shape)},
              {"texture", texture_params_to_json(cfg.compose.texture)},
              {"alpha_lo", cfg.compose.alpha_lo},
              {"alpha_hi", cfg.compose.alpha_hi},
              {"k_min", cfg.compose.k_min},
              {"k_max", cfg.compose.k_max},
              {"allow_self_donation", cfg.compose.allow_self_donation},
              {"roi_restricted_mean", cfg.compose.roi_restricted_mean}};
}

GenerateConfig generate_config_from_json(const nlohmann::json& j) {
  GenerateConfig cfg;
  try {
    if (j.contains("preset"))
      cfg.preset = preset_from_string(j["preset"].get<std::string>());
    cfg.apply_preset();
    cfg.pool_dir = j.value("pool_dir", cfg.pool_dir);
    cfg.roi_dir = j.value("roi_dir", cfg.roi_dir);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.count = j.value("count", cfg.count);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
    if (j.contains("shape"))
      cfg.compose.shape = shape_params_from_json(j["shape"]);
    if (j.contains("texture")) {
      TextureParams base = cfg.compose.texture;  // preset ratio defaults
      TextureParams t = texture_params_from_json(j["texture"]);
      if (!j["texture"].contains("ratio_lo")) t.ratio_lo = base.ratio_lo;
      if (!j["texture"].contains("ratio_hi")) t.ratio_hi = base.ratio_hi;
      cfg.compose.texture = t;
    }
    cfg.compose.alpha_lo = j.value("alpha_lo", cfg.compose.alpha_lo);
    cfg.compose.alpha_hi = j.value("alpha_hi", cfg.compose.alpha_hi);
    if (cfg.preset == Preset::Custom) {
      cfg.compose.k_min = j.value("k_min", cfg.compose.k_min);
      cfg.compose.k_max = j.value("k_max", cfg.compose.k_max);
    }
    cfg.compose.allow_self_donation =
        j.value("allow_self_donation", cfg.compose.allow_self_donation);
    cfg.compose.roi_restricted_mean =
        j.value("roi_restricted_mean", cfg.compose.roi_restricted_mean);
  } catch (const json::exception& e) {
    throw config_error(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

nlohmann::json to_json(const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back(json{{"index", e.index},
                           {"x", e.x_path},
                           {"x_n", e.x_n_path},
                           {"s", e.s_path},
                           {"m", e.m_path},
                           {"x_digest", e.x_digest},
                           {"x_n_digest", e.x_n_digest},
                           {"s_digest", e.s_digest},
                           {"m_digest", e.m_digest},
                           {"record", sample_record_to_json(e.record)}});
  }
  return json{{"tool_version", m.tool_version},
              {"config", m.config_snapshot},
              {"samples", entries}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.tool_version = j.at("tool_version");
    m.config_snapshot = j.value("config", json::object());
    for (const auto& e : j.at("samples")) {
      ManifestEntry entry;
      entry.index = e.at("index");
      entry.x_path = e.at("x");
      entry.x_n_path = e.at("x_n");
      entry.s_path = e.at("s");
      entry.m_path = e.at("m");
      entry.x_digest = e.at("x_digest");
      entry.x_n_digest = e.at("x_n_digest");
      entry.s_digest = e.at("s_digest");
      entry.m_digest = e.at("m_digest");
      entry.record = sample_record_from_json(e.at("record"));
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw io_error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> list_volume_files(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw io_error("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string name = e.path().filename().string();
    if (name.ends_with(".nii") || name.ends_with(".nii.gz"))
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Volume> load_pool(const std::string& dir) {
  std::vector<Volume> pool;
  for (const auto& f : list_volume_files(dir)) pool.push_back(read_nifti(f));
  return pool;
}

Manifest generate_batch(const GenerateConfig& cfg) {
  cfg.validate();
  auto pool = load_pool(cfg.pool_dir);
  std::size_t min_pool = cfg.compose.allow_self_donation ? 1 : 2;
  if (pool.size() < min_pool)
    throw config_error("pool at " + cfg.pool_dir + " has " +
                       std::to_string(pool.size()) + " volumes, need >= " +
                       std::to_string(min_pool));

  std::vector<BinaryMask> rois;
  if (cfg.roi_dir.empty()) {
    rois.emplace_back(pool[0].dims(), std::uint8_t{1});
  } else {
    for (const auto& f : list_volume_files(cfg.roi_dir))
      rois.push_back(volume_to_mask(read_nifti(f)));
    if (rois.size() != pool.size())
      throw config_error("ROI directory must hold one mask per pool volume");
  }

  fs::create_directories(cfg.out_dir);

  Manifest manifest;
  manifest.config_snapshot = to_json(cfg);
  manifest.entries.resize(static_cast<std::size_t>(cfg.count));

  std::atomic<int> next_index{0};
  std::atomic<bool> failed{false};
  std::string failure_message;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (!failed.load()) {
      int i = next_index.fetch_add(1);
      if (i >= cfg.count) break;
      try {
        Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(i));
        SyntheticSample sample = generate_sample(pool, rois, cfg.compose, rng);
        sample.record.stream_seed = cfg.seed;

        char stem[32];
        std::snprintf(stem, sizeof(stem), "sample_%04d", i);
        ManifestEntry& e = manifest.entries[static_cast<std::size_t>(i)];
        e.index = i;
        e.x_path = std::string(stem) + "_x.nii";
        e.x_n_path = std::string(stem) + "_xn.nii";
        e.s_path = std::string(stem) + "_s.nii";
        e.m_path = std::string(stem) + "_m.nii";
        auto out = [&](const std::string& rel) {
          return (fs::path(cfg.out_dir) / rel).string();
        };
        write_nifti(sample.x, out(e.x_path));
        write_nifti(sample.x_n, out(e.x_n_path));
        write_nifti(sample.s, out(e.s_path));
        write_nifti(mask_to_volume(sample.m, sample.x.spacing()), out(e.m_path));
        e.x_digest = file_digest(out(e.x_path));
        e.x_n_digest = file_digest(out(e.x_n_path));
        e.s_digest = file_digest(out(e.s_path));
        e.m_digest = file_digest(out(e.m_path));
        e.record = sample.record;
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure_message = "sample " + std::to_string(i) + " failed: " + ex.what();
      }
    }
  };

  if (cfg.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < cfg.workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failed.load()) throw invariant_error(failure_message);

  std::ofstream out(fs::path(cfg.out_dir) / "manifest.json", std::ios::trunc);
  if (!out) throw io_error("cannot write manifest in " + cfg.out_dir);
  out << to_json(manifest).dump(2) << "\n";
  return manifest;
}

void verify_manifest(const Manifest& m, const std::string& base_dir) {
  for (const auto& e : m.entries) {
    auto check = [&](const std::string& rel, std::uint64_t expect) {
      std::string path = (fs::path(base_dir) / rel).string();
      if (!fs::exists(path))
        throw invariant_error("manifest references missing file " + rel);
      std::uint64_t got = file_digest(path);
      if (got != expect)
        throw invariant_error("digest mismatch for " + rel);
    };
    check(e.x_path, e.x_digest);
    check(e.x_n_path, e.x_n_digest);
    check(e.s_path, e.s_digest);
    check(e.m_path, e.m_digest);
  }
}

}  // namespace tusim
