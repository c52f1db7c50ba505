// End-to-end smoke tests for the pipescan binary. The binary path arrives as
// the test's command-line argument.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "pipescan/io.h"
#include "pipescan/scene.h"

using namespace pipescan;
namespace fs = std::filesystem;

namespace {

std::string g_binary;

int run_cli(const std::string& args) {
  const std::string cmd = g_binary + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "pipescan_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_binary = argv[argc - 1];
  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv);
  return ctx.run();
}

TEST_CASE("simulate/reduce/image pipeline produces the right magics") {
  REQUIRE(!g_binary.empty());
  const fs::path dir = work_dir();

  Scene scene;
  scene.moist_region.radius_m = 0.08;
  scene.moist_region.sm_fraction = 0.5;
  io::write_text_file(dir / "scene.json", to_json(scene));

  AcquisitionConfig config;
  config.f_min_hz = 1.2e9;
  config.f_max_hz = 2.4e9;
  config.f_step_hz = 100e6;
  config.n_positions = 9;
  io::write_text_file(dir / "acq.json", to_json(config));

  const std::string base = " --scene " + (dir / "scene.json").string() + " --config " +
                           (dir / "acq.json").string();
  CHECK(run_cli("simulate" + base + " --out " + (dir / "b.mwbs").string() +
                " --pixels 24 --clutter-gain 1e-9 --seed 3") == 0);

  std::ifstream f(dir / "b.mwbs", std::ios::binary);
  char magic[4];
  f.read(magic, 4);
  CHECK(std::string(magic, 4) == "MWBS");
  CHECK(fs::exists(dir / "run.json"));

  CHECK(run_cli("reduce --in " + (dir / "b.mwbs").string() + " --out " +
                (dir / "r.mwbs").string() + " --n-remove 1") == 0);
  CHECK(fs::exists(dir / "r.mwbs"));

  CHECK(run_cli("image --in " + (dir / "r.mwbs").string() + " --out " +
                (dir / "i.mwim").string() + " --method bpa --pixels 24 --pgm " +
                (dir / "i.pgm").string()) == 0);
  std::ifstream fi(dir / "i.mwim", std::ios::binary);
  fi.read(magic, 4);
  CHECK(std::string(magic, 4) == "MWIM");
  CHECK(fs::exists(dir / "i.pgm"));

  CHECK(run_cli("image --in " + (dir / "r.mwbs").string() + " --out " +
                (dir / "ibaa.mwim").string() + " --method baa --pixels 8") == 0);
  CHECK(fs::exists(dir / "ibaa.mwim"));
}

TEST_CASE("dataset + train + track round trip") {
  REQUIRE(!g_binary.empty());
  const fs::path dir = work_dir();
  const fs::path dsdir = dir / "ds";
  fs::remove_all(dsdir);

  const std::string fast =
      " --stage clutter_reduced --n-bands 3 --band-spacing-hz 50000000 --snr-db 25";
  CHECK(run_cli("dataset --out-dir " + dsdir.string() + fast + " --seed 5") == 0);
  CHECK(fs::exists(dsdir / "manifest.json"));

  CHECK(run_cli("train --dataset " + dsdir.string() + " --learner knn --out " +
                (dir / "m.mwkn").string() + " --seed 5") == 0);
  CHECK(fs::exists(dir / "m.mwkn"));

  CHECK(run_cli("track --model " + (dir / "m.mwkn").string() + " --out-dir " +
                (dir / "trk").string() + fast + " --n-scans 3 --seed 5") == 0);
  CHECK(fs::exists(dir / "trk" / "track.json"));
  CHECK(fs::exists(dir / "trk" / "track.csv"));
}

TEST_CASE("validation failures exit with code 1") {
  REQUIRE(!g_binary.empty());
  CHECK(run_cli("definitely-not-a-subcommand") == 1);
  CHECK(run_cli("simulate --scene /nonexistent.json --out x.mwbs") == 1);
}

TEST_CASE("runtime failures exit with code 2") {
  REQUIRE(!g_binary.empty());
  const fs::path dir = work_dir();
  io::write_text_file(dir / "bad.mwbs", "not a real file");
  CHECK(run_cli("reduce --in " + (dir / "bad.mwbs").string() + " --out " +
                (dir / "out.mwbs").string()) == 2);
}
