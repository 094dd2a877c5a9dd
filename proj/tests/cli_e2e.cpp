// End-to-end smoke test of the tusim CLI: drives the installed binary through
// a generate -> verify -> decompose -> losses -> metrics -> render workflow
// in a temp directory and checks the documented exit codes (0 ok, 1 config,
// 2 io, 3 invariant).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tusim/io.hpp"
#include "tusim/rng.hpp"
#include "tusim/volume.hpp"

namespace fs = std::filesystem;
using namespace tusim;

namespace {

int g_failures = 0;

#define EXPECT(cond, what)                                          \
  do {                                                              \
    if (!(cond)) {                                                  \
      std::printf("FAIL %s:%d  %s\n", __FILE__, __LINE__, (what)); \
      ++g_failures;                                                 \
    }                                                               \
  } while (0)

int run(const std::string& args) {
  std::string cmd = std::string(TUSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return (rc >> 8) & 0xff;
}

Volume smooth_volume(Dims dims, std::uint64_t seed) {
  Rng rng(seed);
  double a = rng.uniform(0.1, 0.4), b = rng.uniform(0.1, 0.4),
         c = rng.uniform(0.1, 0.4), base = rng.uniform(0.8, 1.6);
  std::vector<float> data;
  data.reserve(dims.count());
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x)
        data.push_back(static_cast<float>(
            base + 0.3 * std::sin(a * x) * std::cos(b * y) * std::sin(c * z)));
  return Volume(dims, {1.0, 1.0, 1.0}, std::move(data));
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

int main() {
  fs::path base = fs::temp_directory_path() / "tusim_cli_e2e";
  fs::remove_all(base);
  fs::path pool = base / "pool";
  fs::create_directories(pool);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "normal_%02d.nii", i);
    write_nifti(smooth_volume({12, 12, 12}, 40 + i), (pool / name).string());
  }

  // generate + verify round trip
  fs::path out = base / "samples";
  EXPECT(run("generate --preset brain --pool " + q(pool) + " --out " + q(out) +
             " --count 2 --seed 5 --workers 2") == 0,
         "generate exits 0");
  EXPECT(fs::exists(out / "manifest.json"), "manifest written");
  EXPECT(fs::exists(out / "sample_0000_x.nii"), "sample volume written");
  EXPECT(run("verify --dir " + q(out)) == 0, "verify exits 0");

  // decompose one sample, then rebuild the losses layout from its output
  fs::path dec = base / "decomp";
  EXPECT(run("decompose --mode supervised --samples " + q(out) +
             " --index 0 --out " + q(dec) +
             " --max-iterations 300 --tolerance 1e-3 --seed 1") == 0,
         "decompose exits 0");
  for (const char* f : {"xhat.nii", "shat.nii", "mhat.nii", "mask_pred.nii",
                        "trace.jsonl"})
    EXPECT(fs::exists(dec / f), "decompose output exists");

  // losses over the ground-truth decomposition must report ~0 totals
  fs::path ld = base / "loss_decomp";
  fs::create_directories(ld);
  for (int i = 0; i < 2; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%04d", i);
    fs::copy_file(out / (std::string(stem) + "_xn.nii"),
                  ld / (std::string(stem) + "_xhat.nii"));
    fs::copy_file(out / (std::string(stem) + "_s.nii"),
                  ld / (std::string(stem) + "_shat.nii"));
    fs::copy_file(out / (std::string(stem) + "_m.nii"),
                  ld / (std::string(stem) + "_mhat.nii"));
  }
  fs::path loss_report = base / "losses.jsonl";
  EXPECT(run("losses --samples " + q(out) + " --decomp " + q(ld) +
             " --alpha-mode stored --out " + q(loss_report)) == 0,
         "losses exits 0");
  {
    std::ifstream in(loss_report);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      auto pos = line.find("\"total\":");
      EXPECT(pos != std::string::npos, "losses row has a total");
      double total = std::stod(line.substr(pos + 8));
      EXPECT(total <= 1e-6, "ground-truth decomposition total ~ 0");
    }
    EXPECT(rows == 2, "one losses row per sample");
  }

  // metrics on identical pred/gt masks: dice 1, hd95 0
  fs::path pred = base / "pred", gt = base / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  fs::copy_file(out / "sample_0000_m.nii", pred / "case0.nii");
  fs::copy_file(out / "sample_0000_m.nii", gt / "case0.nii");
  fs::path mstem = base / "metrics";
  EXPECT(run("metrics --pred " + q(pred) + " --gt " + q(gt) + " --out " +
             q(mstem)) == 0,
         "metrics exits 0");
  {
    std::ifstream csv(mstem.string() + ".csv");
    std::string header, row;
    std::getline(csv, header);
    EXPECT(header == "case,dice,sensitivity,specificity,hd95_mm",
           "metrics csv header");
    EXPECT(static_cast<bool>(std::getline(csv, row)), "metrics csv row");
    EXPECT(row.rfind("case0.nii,1,", 0) == 0, "identical masks give dice 1");
    EXPECT(fs::exists(mstem.string() + ".jsonl"), "metrics jsonl written");
  }

  // render with and without an overlay
  fs::path slice = base / "slice.pgm";
  EXPECT(run("render --volume " + q(out / "sample_0000_x.nii") +
             " --axis axial --index 6 --window-lo 0 --window-hi 2 --out " +
             q(slice)) == 0,
         "render exits 0");
  {
    std::ifstream pgm(slice, std::ios::binary);
    std::string magic;
    pgm >> magic;
    EXPECT(magic == "P5", "render writes binary PGM");
  }
  EXPECT(run("render --volume " + q(out / "sample_0000_x.nii") + " --overlay " +
             q(out / "sample_0000_m.nii") +
             " --axis coronal --index 6 --window-lo 0 --window-hi 2 --out " +
             q(base / "overlay.pgm")) == 0,
         "render with overlay exits 0");

  // exit-code contract
  EXPECT(run("generate --preset kidney --pool " + q(pool) + " --out " +
             q(base / "bad")) == 1,
         "unknown preset exits 1 (config error)");
  EXPECT(run("decompose --mode bogus") == 1, "bad mode exits 1");
  EXPECT(run("verify --dir " + q(base / "missing")) == 2,
         "missing directory exits 2 (io error)");
  EXPECT(run("--definitely-not-a-flag") == 1, "CLI parse error exits 1");
  {
    // single-byte corruption must fail verification with exit 3
    fs::path corrupt = base / "corrupt";
    fs::copy(out, corrupt, fs::copy_options::recursive);
    std::fstream f(corrupt / "sample_0000_x.nii",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekg(400);
    char c = 0;
    f.get(c);
    f.seekp(400);
    f.put(static_cast<char>(c ^ 0x01));
    f.close();
    EXPECT(run("verify --dir " + q(corrupt)) == 3,
           "digest mismatch exits 3 (invariant error)");
  }

  // real-data mode decompose on a plain volume
  fs::path real_in = base / "real.nii";
  write_nifti(smooth_volume({10, 10, 10}, 99), real_in.string());
  EXPECT(run("decompose --mode real --input " + q(real_in) + " --out " +
             q(base / "real_decomp") + " --max-iterations 50 --seed 2") == 0,
         "real-mode decompose exits 0");

  if (g_failures == 0) {
    std::printf("cli_e2e: all checks passed\n");
    fs::remove_all(base);
    return 0;
  }
  std::printf("cli_e2e: %d checks failed (artifacts kept in %s)\n", g_failures,
              base.string().c_str());
  return 1;
}
