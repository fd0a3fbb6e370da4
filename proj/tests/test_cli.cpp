#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;  // stdout and stderr together
};

Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MORL_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p) != nullptr) r.output += buf.data();
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("morl_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kSmoke = std::string(MORL_CONFIG_DIR) + "/smoke.json";

// One short run shared by the checkpoint tests.
const fs::path& trained_run() {
  static const fs::path dir = [] {
    const auto d = fresh_dir("shared") / "run";
    const auto r = cli("train --config \"" + kSmoke + "\" --run-dir \"" + d.string() + "\"");
    EXPECT_EQ(r.status, 0) << r.output;
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Train, MissingConfigNamesThePath) {
  const auto r = cli("train --config /nonexistent/cfg.json");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("/nonexistent/cfg.json"), std::string::npos) << r.output;
}

TEST(Train, UnknownKeyListsValidKeys) {
  const auto dir = fresh_dir("unknown_key");
  const auto cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"ppo.learning_rat": 0.001})";
  const auto r = cli("train --config \"" + cfg.string() + "\" --run-dir \"" + (dir / "run").string() + "\"");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("ppo.learning_rat"), std::string::npos);
  EXPECT_NE(r.output.find("valid keys"), std::string::npos);
  EXPECT_NE(r.output.find("ppo.learning_rate"), std::string::npos);
}

TEST(Train, ModeOverrideFlipsAblation) {
  const auto dir = fresh_dir("sorl");
  const auto r = cli("train --config \"" + kSmoke + "\" --mode sorl --epochs 1 --run-dir \"" + dir.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto snap = nlohmann::json::parse(slurp(dir / "config.snapshot"));
  EXPECT_EQ(snap.at("ppo.mode"), "sorl");
  EXPECT_EQ(snap.at("ppo.total_epochs"), 1);
}

TEST(Train, RunDirectoryLayout) {
  const auto& dir = trained_run();
  EXPECT_TRUE(fs::exists(dir / "config.snapshot"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "epoch_0.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "epoch_2.ckpt"));
  EXPECT_EQ(line_count(dir / "metrics.csv"), 3u);
}

TEST(Train, IdenticalConfigAndSeedGiveIdenticalMetrics) {
  const auto dir = fresh_dir("repeat");
  for (const char* name : {"a", "b"}) {
    const auto r = cli("train --config \"" + kSmoke + "\" --run-dir \"" + (dir / name).string() + "\"");
    ASSERT_EQ(r.status, 0) << r.output;
  }
  EXPECT_EQ(slurp(dir / "a" / "metrics.csv"), slurp(dir / "b" / "metrics.csv"));
}

TEST(Train, SnapshotReproducesTheRun) {
  const auto& dir = trained_run();
  const auto again = fresh_dir("snapshot") / "run";
  const auto r = cli("train --config \"" + (dir / "config.snapshot").string() + "\" --run-dir \"" + again.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir / "metrics.csv"), slurp(again / "metrics.csv"));
}

TEST(Inspect, FreshCheckpointIsEpochZero) {
  const auto r = cli("inspect --ckpt \"" + (trained_run() / "checkpoints" / "epoch_0.ckpt").string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j.at("epoch"), 0);
  EXPECT_TRUE(j.contains("config_hash"));
  EXPECT_TRUE(j.contains("observation_layout"));
  EXPECT_GT(j.at("parameter_counts").size(), 0u);
}

TEST(Inspect, SameCheckpointSameManifest) {
  const auto path = (trained_run() / "checkpoints" / "epoch_2.ckpt").string();
  const auto a = cli("inspect --ckpt \"" + path + "\"");
  const auto b = cli("inspect --ckpt \"" + path + "\"");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(nlohmann::json::parse(a.output).at("epoch"), 2);
}

TEST(Inspect, TamperedByteIsDetected) {
  const auto dir = fresh_dir("tamper");
  const auto copy = dir / "t.ckpt";
  fs::copy_file(trained_run() / "checkpoints" / "epoch_2.ckpt", copy);
  std::string bytes = slurp(copy);
  bytes[bytes.size() - 20] ^= 0x01;
  std::ofstream(copy, std::ios::binary) << bytes;
  const auto r = cli("inspect --ckpt \"" + copy.string() + "\"");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("checksum"), std::string::npos) << r.output;
  const auto e = cli("eval --ckpt \"" + copy.string() + "\" --exp pareto --out \"" + dir.string() + "\"");
  EXPECT_NE(e.status, 0);
}

TEST(Inspect, MissingFile) {
  const auto r = cli("inspect --ckpt /nonexistent/x.ckpt");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("/nonexistent/x.ckpt"), std::string::npos);
}

TEST(Eval, UnknownExperimentListsValidNames) {
  const auto r = cli("eval --ckpt \"" + (trained_run() / "checkpoints" / "epoch_2.ckpt").string() + "\" --exp bogus");
  EXPECT_EQ(r.status, 2);
  for (const char* name : {"pareto", "angular", "switch", "perturb"}) {
    EXPECT_NE(r.output.find(name), std::string::npos) << name;
  }
}

TEST(Eval, ParetoAtOneForceEmits21Rows) {
  const auto out = fresh_dir("pareto");
  const auto r = cli("eval --ckpt \"" + (trained_run() / "checkpoints" / "epoch_2.ckpt").string() +
                     "\" --exp pareto --force 20 --out \"" + out.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(line_count(out / "pareto.csv"), 22u);
  EXPECT_TRUE(fs::exists(out / "pareto_summary.json"));
}

TEST(Eval, PerturbCellsHaveRequestedTrials) {
  const auto out = fresh_dir("perturb");
  const auto r = cli("eval --ckpt \"" + (trained_run() / "checkpoints" / "epoch_2.ckpt").string() +
                     "\" --exp perturb --trials 20 --force 40 --wc 1 --out \"" + out.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(line_count(out / "perturb.csv"), 21u);
  const auto j = nlohmann::json::parse(slurp(out / "perturb_summary.json"));
  ASSERT_EQ(j.at("cells").size(), 1u);
  EXPECT_EQ(j.at("cells")[0].at("trials"), 20);
  EXPECT_EQ(j.at("cells")[0].at("magnitude"), 40.0);
}

TEST(Eval, DefaultOutputGoesUnderRunDirectory) {
  const auto r = cli("eval --ckpt \"" + (trained_run() / "checkpoints" / "epoch_2.ckpt").string() +
                     "\" --exp switch --trials 1");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(trained_run() / "eval" / "switch.csv"));
}
