#include "s5id/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "s5id_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + S5ID_CLI_PATH + "\" " + args + " 2>" +
                          (scratch() / "stderr.txt").string() + " >" + (scratch() / "stdout.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string captured(const char* name) { return s5id::io::read_text(scratch() / name); }

}  // namespace

TEST(Cli, SimulateThenIdentify) {
  const fs::path data = scratch() / "data.csv";
  const fs::path model = scratch() / "model.json";
  ASSERT_EQ(run("simulate --seed 3 --out " + data.string() + " --model-out " + model.string()), 0)
      << captured("stderr.txt");
  const auto ds = s5id::io::read_dataset(data);
  EXPECT_EQ(ds.length(), 1281);
  EXPECT_EQ(ds.inputs.rows(), 2);

  ASSERT_EQ(run("identify --data " + data.string() + " --order 5 --no-timings"), 0) << captured("stderr.txt");
  const json doc = json::parse(captured("stdout.txt"));
  EXPECT_LT(doc["diagnostics"]["rho_A_hat"].get<double>(), 1.0);
  EXPECT_EQ(doc["model"]["A"].size(), 5u);

  const std::string first = captured("stdout.txt");
  ASSERT_EQ(run("identify --data " + data.string() + " --order 5 --no-timings"), 0);
  EXPECT_EQ(captured("stdout.txt"), first);
}

TEST(Cli, ErrorsExitWithTwo) {
  const fs::path bad = scratch() / "bad.csv";
  s5id::io::write_text(bad, "t,u1,y1\n0,1,2\n");
  EXPECT_EQ(run("identify --data " + bad.string() + " --order 1"), 2);
  EXPECT_NE(captured("stderr.txt").find("line 1"), std::string::npos);

  const fs::path cfg = scratch() / "bad_config.json";
  s5id::io::write_text(cfg, R"({"mode": "lowdim", "unknown_key": 1})");
  EXPECT_EQ(run("repro-lowdim --config " + cfg.string() + " --out " + (scratch() / "x").string()), 2);
}

TEST(Cli, ReproLowdimSmall) {
  const fs::path cfg = scratch() / "low.json";
  s5id::io::write_text(cfg, R"({"mode": "lowdim", "Tbar_values": [320], "target_unstable_count": 2,
                                "grid_points": 50, "bode_points": 10, "bode_repeats": 1})");
  const fs::path out = scratch() / "low";
  ASSERT_EQ(run("repro-lowdim --config " + cfg.string() + " --seed 5 --jobs 2 --no-timings --out " + out.string()), 0)
      << captured("stderr.txt");
  for (const char* f : {"record.json", "poles.csv", "hinf.csv", "timings.csv", "bode.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const json rec = json::parse(s5id::io::read_text(out / "record.json"));
  EXPECT_EQ(rec["groups"][0]["unstable_count"], 2);
  EXPECT_EQ(rec["config"]["base_seed"], 5);
}
