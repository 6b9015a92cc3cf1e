#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(IIEKF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("iiekf_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string data(const char* name) { return (fs::path(IIEKF_TEST_DATA_DIR) / name).string(); }

}  // namespace

TEST(Cli, ScenarioWritesDeterministicOutputs) {
  const fs::path a = scratch("a"), b = scratch("b");
  ASSERT_EQ(run("scenario --id 2 --sims 4 --seed 5 --out " + a.string()), 0);
  ASSERT_EQ(run("scenario --id 2 --sims 4 --seed 5 --out " + b.string() + " --serial"), 0);
  for (const char* f : {"ekf.csv", "iterekf.csv", "iekf.csv", "iiekf.csv", "runs.csv", "summary.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
  EXPECT_EQ(slurp(a / "iiekf.csv").substr(0, 10), "k,t,mean_e");
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path out = scratch("cfg");
  EXPECT_EQ(run("scenario --id 4 --out " + out.string()), 2);
  EXPECT_EQ(run("scenario --out " + out.string()), 2);
  EXPECT_EQ(run("scenario --id 1 --sims 0 --out " + out.string()), 2);
  const fs::path bad = out.string() + "_bad.json";
  std::ofstream(bad) << R"({"rate": -5})";
  EXPECT_EQ(run("scenario --id 1 --out " + out.string() + " --config " + bad.string()), 2);
  EXPECT_EQ(run("solve --group so3 --system " + data("linear_3x3.json") + " --out " + out.string()), 2);
  EXPECT_EQ(run("bogus"), 2);
  fs::remove(bad);
}

TEST(Cli, SolveExitCodes) {
  const fs::path out = scratch("solve");
  EXPECT_EQ(run("solve --group so3 --system " + data("so3_two_equations.json") + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_EQ(run("solve --group linear --system " + data("linear_3x3.json") + " --out " + out.string()), 0);
  EXPECT_EQ(run("solve --group so3 --system " + data("so3_inconsistent.json") + " --out " + out.string()), 3);
  EXPECT_NE(slurp(out / "report.json").find("inconsistent"), std::string::npos);
}
