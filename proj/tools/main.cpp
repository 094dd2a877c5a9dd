#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "tusim/errors.hpp"
#include "tusim/io.hpp"
#include "tusim/loss.hpp"
#include "tusim/metrics.hpp"
#include "tusim/pipeline.hpp"
#include "tusim/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tusim;

namespace {

struct WeightsOpt {
  double l0 = 1.0, l1 = 1.0, l2 = 1.0, l3 = 1.0;
};

WeightsOpt parse_weights(const std::string& s) {
  WeightsOpt w;
  double vals[4];
  std::stringstream ss(s);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',') && i < 4) vals[i++] = std::stod(tok);
  if (i != 4)
    throw config_error("--weights expects four comma-separated values");
  w.l0 = vals[0]; w.l1 = vals[1]; w.l2 = vals[2]; w.l3 = vals[3];
  return w;
}

Spacing parse_spacing(const std::string& s) {
  double vals[3];
  std::stringstream ss(s);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',') && i < 3) vals[i++] = std::stod(tok);
  if (i != 3)
    throw config_error("--spacing expects three comma-separated values");
  return {vals[0], vals[1], vals[2]};
}

Axis parse_axis(const std::string& s) {
  if (s == "axial") return Axis::Axial;
  if (s == "coronal") return Axis::Coronal;
  if (s == "sagittal") return Axis::Sagittal;
  throw config_error("axis must be axial|coronal|sagittal");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

Manifest load_manifest(const std::string& dir) {
  return manifest_from_json(load_json_file((fs::path(dir) / "manifest.json").string()));
}

struct Summary {
  double mean = 0.0, stddev = 0.0;
  std::size_t n = 0;
};

// mean +- sample standard deviation (n-1)
Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

int run_generate(const std::string& config_path, std::optional<std::string> preset,
                 std::optional<std::string> pool, std::optional<std::string> out,
                 std::optional<int> count, std::optional<std::uint64_t> seed,
                 std::optional<int> workers) {
  GenerateConfig cfg;
  if (!config_path.empty()) {
    cfg = generate_config_from_json(load_json_file(config_path));
  } else {
    cfg.apply_preset();
  }
  // flags win over config keys
  if (preset) {
    cfg.preset = preset_from_string(*preset);
    cfg.apply_preset();
  }
  if (pool) cfg.pool_dir = *pool;
  if (out) cfg.out_dir = *out;
  if (count) cfg.count = *count;
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;

  Manifest m = generate_batch(cfg);
  std::cout << "generated " << m.entries.size() << " samples in " << cfg.out_dir
            << "\n";
  return 0;
}

int run_metrics(const std::string& pred_dir, const std::string& gt_dir,
                const std::string& out_path, std::optional<Spacing> spacing) {
  auto pred_files = list_volume_files(pred_dir);
  auto gt_files = list_volume_files(gt_dir);
  std::map<std::string, std::string> gt_by_name;
  for (const auto& f : gt_files)
    gt_by_name[fs::path(f).filename().string()] = f;

  std::ofstream jsonl(out_path + ".jsonl", std::ios::trunc);
  std::ofstream csv(out_path + ".csv", std::ios::trunc);
  if (!jsonl || !csv) throw io_error("cannot write report files at " + out_path);
  csv << "case,dice,sensitivity,specificity,hd95_mm\n";

  std::vector<double> dices, sens, specs, hds;
  for (const auto& pf : pred_files) {
    std::string name = fs::path(pf).filename().string();
    auto it = gt_by_name.find(name);
    if (it == gt_by_name.end())
      throw invariant_error("no ground-truth pair for " + name);
    gt_by_name.erase(it->first);
    Volume pv = read_nifti(pf);
    Volume gv = read_nifti((fs::path(gt_dir) / name).string());
    BinaryMask pred = volume_to_mask(pv);
    BinaryMask gt = volume_to_mask(gv);
    Spacing sp = spacing ? *spacing : pv.spacing();
    MetricReport rep = evaluate_masks(pred, gt, sp);

    json row{{"case", name}, {"dice", rep.dice}};
    csv << name << "," << rep.dice << ",";
    dices.push_back(rep.dice);
    if (rep.sensitivity) {
      row["sensitivity"] = *rep.sensitivity;
      csv << *rep.sensitivity;
      sens.push_back(*rep.sensitivity);
    } else row["sensitivity"] = nullptr;
    csv << ",";
    if (rep.specificity) {
      row["specificity"] = *rep.specificity;
      csv << *rep.specificity;
      specs.push_back(*rep.specificity);
    } else row["specificity"] = nullptr;
    csv << ",";
    if (rep.hd95_mm) {
      row["hd95_mm"] = *rep.hd95_mm;
      csv << *rep.hd95_mm;
      hds.push_back(*rep.hd95_mm);
    } else row["hd95_mm"] = nullptr;
    csv << "\n";
    jsonl << row.dump() << "\n";
  }
  if (!gt_by_name.empty())
    throw invariant_error("unpaired ground-truth file " +
                          gt_by_name.begin()->first);

  auto emit = [&](const char* name, const std::vector<double>& xs) {
    Summary s = summarize(xs);
    json row{{"summary", name}, {"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
    jsonl << row.dump() << "\n";
    std::cout << name << ": " << s.mean << " +- " << s.stddev << " (n=" << s.n
              << ")\n";
  };
  emit("dice", dices);
  emit("sensitivity", sens);
  emit("specificity", specs);
  emit("hd95_mm", hds);
  return 0;
}

int run_losses(const std::string& sample_dir, const std::string& decomp_dir,
               const WeightsOpt& w, const std::string& alpha_mode,
               const std::string& out_path) {
  if (alpha_mode != "stored" && alpha_mode != "unit")
    throw config_error("--alpha-mode must be stored|unit");
  Manifest manifest = load_manifest(sample_dir);
  std::ofstream jsonl(out_path, std::ios::trunc);
  if (!jsonl) throw io_error("cannot write " + out_path);

  for (const auto& e : manifest.entries) {
    auto in_sample = [&](const std::string& rel) {
      return (fs::path(sample_dir) / rel).string();
    };
    Volume x = read_nifti(in_sample(e.x_path));
    Volume x_n = read_nifti(in_sample(e.x_n_path));
    Volume s = read_nifti(in_sample(e.s_path));
    BinaryMask m = volume_to_mask(read_nifti(in_sample(e.m_path)));

    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%04d", e.index);
    auto in_decomp = [&](const char* suffix) {
      std::string p = (fs::path(decomp_dir) / (std::string(stem) + suffix)).string();
      if (!fs::exists(p)) throw io_error("missing decomposition field " + p);
      return read_nifti(p);
    };
    Volume xh = in_decomp("_xhat.nii");
    Volume sh = in_decomp("_shat.nii");
    Volume mh = in_decomp("_mhat.nii");

    Decomposition d;
    d.dims = x.dims();
    d.x_hat.assign(xh.data().begin(), xh.data().end());
    d.s_hat.assign(sh.data().begin(), sh.data().end());
    d.m_hat.assign(mh.data().begin(), mh.data().end());
    d.validate();

    LossWeights weights{w.l0, w.l1, w.l2, w.l3,
                        alpha_mode == "stored" ? e.record.alpha : 1.0};
    LossTarget target{&x, &x_n, &s, &m};
    LossReport rep = total_loss(d, target, weights);
    json row{{"case", e.index}, {"l0", rep.l0},    {"l1", rep.l1},
             {"l2", rep.l2},    {"l3", rep.l3},    {"total", rep.total},
             {"alpha", weights.alpha},
             {"weights", {weights.l0, weights.l1, weights.l2, weights.l3}}};
    jsonl << row.dump() << "\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_decompose(const std::string& mode, const std::string& sample_dir,
                  int index, const std::string& input,
                  const std::string& out_dir, const WeightsOpt& w,
                  int max_iterations, double tolerance, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.max_iterations = max_iterations;
  cfg.tolerance = tolerance;
  cfg.weights = LossWeights{w.l0, w.l1, w.l2, w.l3, 1.0};

  fs::create_directories(out_dir);
  Rng rng(seed);

  SolveResult result;
  Spacing spacing{1.0, 1.0, 1.0};
  if (mode == "supervised") {
    Manifest manifest = load_manifest(sample_dir);
    if (index < 0 || index >= static_cast<int>(manifest.entries.size()))
      throw config_error("sample index out of range");
    const auto& e = manifest.entries[static_cast<std::size_t>(index)];
    auto in = [&](const std::string& rel) {
      return (fs::path(sample_dir) / rel).string();
    };
    Volume x = read_nifti(in(e.x_path));
    Volume x_n = read_nifti(in(e.x_n_path));
    Volume s = read_nifti(in(e.s_path));
    BinaryMask m = volume_to_mask(read_nifti(in(e.m_path)));
    cfg.weights.alpha = e.record.alpha;
    spacing = x.spacing();
    LossTarget target{&x, &x_n, &s, &m};
    result = solve(target, cfg, rng);
  } else if (mode == "real") {
    Volume x = read_nifti(input);
    spacing = x.spacing();
    cfg.weights = LossWeights::real_data(w.l3);
    LossTarget target = LossTarget::real(x);
    result = solve(target, cfg, rng);
  } else {
    throw config_error("--mode must be supervised|real");
  }

  const Decomposition& d = result.decomp;
  auto to_volume = [&](const std::vector<double>& field) {
    std::vector<float> data(field.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] = static_cast<float>(field[i]);
    return Volume(d.dims, spacing, std::move(data));
  };
  auto out = [&](const char* name) {
    return (fs::path(out_dir) / name).string();
  };
  write_nifti(to_volume(d.x_hat), out("xhat.nii"));
  write_nifti(to_volume(d.s_hat), out("shat.nii"));
  write_nifti(to_volume(d.m_hat), out("mhat.nii"));
  write_nifti(mask_to_volume(threshold_mask(d), spacing), out("mask_pred.nii"));

  std::ofstream trace(out("trace.jsonl"), std::ios::trunc);
  for (const auto& st : result.history) {
    json row{{"iteration", st.iteration}, {"l0", st.l0},       {"l1", st.l1},
             {"l2", st.l2},               {"l3", st.l3},       {"total", st.total},
             {"step_skipped", st.step_skipped}};
    trace << row.dump() << "\n";
  }
  std::cout << (result.converged ? "converged" : "iteration limit reached")
            << ", final total "
            << (result.history.empty() ? 0.0 : result.history.back().total)
            << "\n";
  return 0;
}

int run_render(const std::string& volume_path, const std::string& overlay_path,
               const std::string& axis_str, int index, double lo, double hi,
               const std::string& out_path) {
  Volume v = read_nifti(volume_path);
  Axis axis = parse_axis(axis_str);
  SliceImage img = render_slice(v, axis, index, lo, hi);

  if (!overlay_path.empty()) {
    BinaryMask m = volume_to_mask(read_nifti(overlay_path));
    require_same_dims(v.dims(), m.dims(), "render overlay");
    // in-slice 2D boundary of the mask: set pixels with a 4-neighbor off
    // the mask (or at the slice edge) forced to 255
    auto mask_at = [&](int col, int row) -> bool {
      switch (axis) {
        case Axis::Axial: return m.at(col, row, index) != 0;
        case Axis::Coronal: return m.at(col, index, row) != 0;
        default: return m.at(index, col, row) != 0;
      }
    };
    for (int row = 0; row < img.height; ++row) {
      for (int col = 0; col < img.width; ++col) {
        if (!mask_at(col, row)) continue;
        bool boundary = col == 0 || col == img.width - 1 || row == 0 ||
                        row == img.height - 1 || !mask_at(col - 1, row) ||
                        !mask_at(col + 1, row) || !mask_at(col, row - 1) ||
                        !mask_at(col, row + 1);
        if (boundary)
          img.pixels[static_cast<std::size_t>(row) * img.width + col] = 255;
      }
    }
  }
  write_pgm(img, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_verify(const std::string& dir) {
  Manifest m = load_manifest(dir);
  verify_manifest(m, dir);
  std::cout << "manifest OK: " << m.entries.size() << " samples verified\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic tumor volume generation and layer-decomposition toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a seeded sample set");
  std::string g_config, g_preset, g_pool, g_out;
  int g_count = -1, g_workers = -1;
  std::uint64_t g_seed = 0;
  bool g_seed_set = false;
  gen->add_option("--config", g_config, "JSON config file");
  gen->add_option("--preset", g_preset, "brain|liver|custom");
  gen->add_option("--pool", g_pool, "directory of normal volumes (.nii/.nii.gz)");
  gen->add_option("--out", g_out, "output directory");
  gen->add_option("--count", g_count, "number of samples");
  gen->add_option("--seed", g_seed, "master seed")->each([&](const std::string&) {
    g_seed_set = true;
  });
  gen->add_option("--workers", g_workers, "worker thread count");

  // metrics
  auto* met = app.add_subcommand("metrics", "score predicted masks against ground truth");
  std::string m_pred, m_gt, m_out = "metrics", m_spacing;
  met->add_option("--pred", m_pred, "directory of predicted masks")->required();
  met->add_option("--gt", m_gt, "directory of ground-truth masks")->required();
  met->add_option("--out", m_out, "report path stem (writes .jsonl and .csv)");
  met->add_option("--spacing", m_spacing, "override spacing sx,sy,sz (mm)");

  // losses
  auto* los = app.add_subcommand("losses", "evaluate decomposition losses per sample");
  std::string l_samples, l_decomp, l_weights = "1,1,1,1",
              l_alpha_mode = "stored", l_out = "losses.jsonl";
  los->add_option("--samples", l_samples, "sample directory (with manifest.json)")->required();
  los->add_option("--decomp", l_decomp, "decomposition directory")->required();
  los->add_option("--weights", l_weights, "lambda0,lambda1,lambda2,lambda3");
  los->add_option("--alpha-mode", l_alpha_mode, "stored|unit");
  los->add_option("--out", l_out, "output JSON-lines path");

  // decompose
  auto* dec = app.add_subcommand("decompose", "recover (x_hat, s_hat, m_hat) for one volume");
  std::string d_mode = "supervised", d_samples, d_input, d_out = "decomp",
              d_weights = "1,1,1,1";
  int d_index = 0, d_max_iter = 5000;
  double d_tol = 1e-3;
  std::uint64_t d_seed = 0;
  dec->add_option("--mode", d_mode, "supervised|real");
  dec->add_option("--samples", d_samples, "sample directory (supervised mode)");
  dec->add_option("--index", d_index, "sample index (supervised mode)");
  dec->add_option("--input", d_input, "input volume (real mode)");
  dec->add_option("--out", d_out, "output directory");
  dec->add_option("--weights", d_weights, "lambda0,lambda1,lambda2,lambda3");
  dec->add_option("--max-iterations", d_max_iter, "iteration cap");
  dec->add_option("--tolerance", d_tol, "total-loss stop threshold");
  dec->add_option("--seed", d_seed, "rng seed for solver init");

  // render
  auto* ren = app.add_subcommand("render", "write a windowed grayscale slice as PGM");
  std::string r_volume, r_overlay, r_axis = "axial", r_out = "slice.pgm";
  int r_index = 0;
  double r_lo = 0.0, r_hi = 1.0;
  ren->add_option("--volume", r_volume, "input volume")->required();
  ren->add_option("--overlay", r_overlay, "mask whose boundary is drawn at 255");
  ren->add_option("--axis", r_axis, "axial|coronal|sagittal");
  ren->add_option("--index", r_index, "slice index");
  ren->add_option("--window-lo", r_lo, "window low");
  ren->add_option("--window-hi", r_hi, "window high");
  ren->add_option("--out", r_out, "output PGM path");

  // verify
  auto* ver = app.add_subcommand("verify", "check manifest digests");
  std::string v_dir;
  ver->add_option("--dir", v_dir, "sample directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return run_generate(g_config,
                          g_preset.empty() ? std::nullopt : std::optional(g_preset),
                          g_pool.empty() ? std::nullopt : std::optional(g_pool),
                          g_out.empty() ? std::nullopt : std::optional(g_out),
                          g_count < 0 ? std::nullopt : std::optional(g_count),
                          g_seed_set ? std::optional(g_seed) : std::nullopt,
                          g_workers < 0 ? std::nullopt : std::optional(g_workers));
    if (met->parsed())
      return run_metrics(m_pred, m_gt, m_out,
                         m_spacing.empty() ? std::nullopt
                                           : std::optional(parse_spacing(m_spacing)));
    if (los->parsed())
      return run_losses(l_samples, l_decomp, parse_weights(l_weights),
                        l_alpha_mode, l_out);
    if (dec->parsed())
      return run_decompose(d_mode, d_samples, d_index, d_input, d_out,
                           parse_weights(d_weights), d_max_iter, d_tol, d_seed);
    if (ren->parsed())
      return run_render(r_volume, r_overlay, r_axis, r_index, r_lo, r_hi, r_out);
    if (ver->parsed()) return run_verify(v_dir);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const invariant_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
