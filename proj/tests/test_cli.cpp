#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RB_CLI_PATH;

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "regionblend_cli_tests";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: gen-fixtures emits the manifested file set") {
  const auto dir = work_dir() / "fx";
  fs::remove_all(dir);
  REQUIRE(run("gen-fixtures --out " + dir.string() + " --seed 1") == 0);

  std::ifstream manifest(dir / "fixtures_manifest.txt");
  REQUIRE(manifest.good());
  std::string name;
  int listed = 0;
  while (std::getline(manifest, name)) {
    CHECK(fs::exists(dir / name));
    ++listed;
  }
  CHECK(listed > 20);
}

TEST_CASE("cli: config errors exit with code 2") {
  const auto dir = work_dir();
  const auto cfg = dir / "bad.cfg";
  {
    std::ofstream out(cfg);
    out << "bogus.key = 1\n";
  }
  const auto fx = dir / "fx";
  const int code = run("reconstruct --image " + (fx / "recon_00.png").string() + " --config " +
                       cfg.string() + " --out " + (dir / "out.png").string());
  CHECK(code == 2);

  CHECK(run("reconstruct --image " + (fx / "recon_00.png").string() +
            " --solver euler --out " + (dir / "out.png").string()) == 2);
}

TEST_CASE("cli: io failures exit with code 1") {
  const auto dir = work_dir();
  CHECK(run("reconstruct --image " + (dir / "absent.png").string() + " --out " +
            (dir / "out.png").string()) == 1);
}

TEST_CASE("cli: reconstruct with few steps writes image and manifest") {
  const auto dir = work_dir();
  const auto fx = dir / "fx";
  const auto out = dir / "recon_out.png";
  REQUIRE(run("reconstruct --image " + (fx / "recon_01.png").string() + " --schedule-steps 8 --out " +
              out.string()) == 0);
  CHECK(fs::exists(out));
  CHECK(fs::exists(dir / "recon_out.png.manifest"));
  std::ifstream manifest(dir / "recon_out.png.manifest");
  std::string text((std::istreambuf_iterator<char>(manifest)), std::istreambuf_iterator<char>());
  CHECK(text.find("schedule.steps = 8") != std::string::npos);
  CHECK(text.find("command = reconstruct") != std::string::npos);
}
