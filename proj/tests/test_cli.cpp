#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mixauto_cli.hpp"

using namespace mixauto;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mixauto");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("mixauto_cli_" + std::string(::testing::UnitTest::GetInstance()
                                            ->current_test_info()
                                            ->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    star = (dir / "star3.json").string();
    ASSERT_EQ(run({"gen-network", "--family", "star-to-complete", "--n", "3", "--xi", "0",
                   "--out", star})
                  .code,
              0);
  }
  fs::path dir;
  std::string star;
};

}  // namespace

TEST_F(Cli, GenNetworkMatchesCanonicalStar) {
  EXPECT_EQ(json::parse(slurp(star)),
            json::parse(R"({"n":3,"alpha":[[0,0.5,0.5],[1,0,0],[1,0,0]],"theta":[1,1,1]})"));
  const auto r = run({"gen-network", "--family", "star-to-complete", "--n", "3", "--xi", "0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out), json::parse(slurp(star)));
}

TEST_F(Cli, GenNetworkRejections) {
  EXPECT_EQ(run({"gen-network", "--n", "2", "--xi", "0"}).code, 1);
  EXPECT_EQ(run({"gen-network", "--n", "3", "--xi", "1.5"}).code, 1);
  EXPECT_EQ(run({"gen-network", "--family", "ring", "--n", "3"}).code, 1);
}

TEST_F(Cli, SolveCheapAvs) {
  const std::string report = (dir / "report.json").string();
  const auto r = run({"solve", "--network", star, "--beta", "0.8", "--omega", "1", "--s",
                      "0.1", "--out", report});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("regime=all_av"), std::string::npos);
  const json j = json::parse(slurp(report));
  EXPECT_EQ(j.at("regime"), "all_av");
  EXPECT_LE(j.at("total_x").get<double>(), 1e-6);
  EXPECT_EQ(j.at("kind"), "mixed_alternative");
  for (const char* key : {"p", "delta", "x", "y", "z", "r", "d"})
    EXPECT_TRUE(j.at("state").contains(key));
  EXPECT_EQ(run({"verify", "--report", report, "--network", star}).code, 0);
}

TEST_F(Cli, SolveByCostRatioAndHumanOnly) {
  const std::string a = (dir / "a.json").string();
  const std::string b = (dir / "b.json").string();
  ASSERT_EQ(run({"solve", "--network", star, "--beta", "0.6", "--omega", "2", "--k", "0.1",
                 "--out", a})
                .code,
            0);
  EXPECT_DOUBLE_EQ(json::parse(slurp(a)).at("params").at("s").get<double>(), 0.2);
  ASSERT_EQ(run({"solve", "--network", star, "--beta", "0.6", "--k", "0.1", "--human-only",
                 "--out", b})
                .code,
            0);
  const json jb = json::parse(slurp(b));
  EXPECT_EQ(jb.at("kind"), "human_only");
  EXPECT_EQ(jb.at("params").at("omega").get<double>(), 1.0);
  EXPECT_EQ(run({"verify", "--report", b, "--network", star}).code, 0);
}

TEST_F(Cli, SolveRejections) {
  EXPECT_EQ(run({"solve", "--network", star, "--beta", "0.8"}).code, 1);
  EXPECT_EQ(run({"solve", "--network", star, "--beta", "0.8", "--s", "0.1", "--k", "0.1"}).code,
            1);
  EXPECT_EQ(run({"solve", "--network", star, "--beta", "1.2", "--s", "0.1"}).code, 1);
  EXPECT_EQ(run({"solve", "--network", (dir / "nope.json").string(), "--beta", "0.8", "--s",
                 "0.1"})
                .code,
            1);
  const std::string broken = (dir / "broken.json").string();
  std::ofstream(broken) << R"({"n":2,"alpha":[[0,1],[0,1]],"theta":[1,1]})";
  const auto r = run({"solve", "--network", broken, "--beta", "0.8", "--s", "0.1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("invalid network"), std::string::npos);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
}

TEST_F(Cli, VerifyDetectsPerturbation) {
  const std::string report = (dir / "report.json").string();
  ASSERT_EQ(run({"solve", "--network", star, "--beta", "0.8", "--s", "0.1", "--out", report})
                .code,
            0);
  json j = json::parse(slurp(report));
  j["state"]["z"][0] = j["state"]["z"][0].get<double>() + 0.05;
  const std::string bad = (dir / "bad.json").string();
  std::ofstream(bad) << j.dump();
  const auto r = run({"verify", "--report", bad, "--network", star});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("verdict: violation"), std::string::npos);

  json k = json::parse(slurp(report));
  k["profit"] = k["profit"].get<double>() + 1e-4;
  std::ofstream(bad) << k.dump();
  EXPECT_EQ(run({"verify", "--report", bad, "--network", star}).code, 3);

  json m = json::parse(slurp(report));
  m.erase("solve");
  std::ofstream(bad) << m.dump();
  EXPECT_EQ(run({"verify", "--report", bad, "--network", star}).code, 1);
}

TEST_F(Cli, RoundTripSmokeGrid) {
  const std::string report = (dir / "r.json").string();
  for (const char* xi : {"0", "0.5"}) {
    const std::string net = (dir / (std::string("net") + xi + ".json")).string();
    ASSERT_EQ(run({"gen-network", "--n", "4", "--xi", xi, "--out", net}).code, 0);
    for (const char* beta : {"0.5", "0.8", "0.95"})
      for (const char* k : {"0", "0.04", "0.15", "0.3", "0.6"})
        for (bool human : {false, true}) {
          std::vector<std::string> args{"solve", "--network", net,    "--beta",
                                        beta,    "--k",       k,      "--out", report};
          if (human) args.push_back("--human-only");
          ASSERT_EQ(run(args).code, 0);
          const auto v = run({"verify", "--report", report, "--network", net});
          EXPECT_EQ(v.code, 0) << "xi=" << xi << " beta=" << beta << " k=" << k
                               << " human=" << human << "\n"
                               << v.out;
        }
  }
}

TEST_F(Cli, Deterministic) {
  const std::string a = (dir / "a.json").string();
  const std::string b = (dir / "b.json").string();
  run({"solve", "--network", star, "--beta", "0.7", "--k", "0.27", "--out", a});
  run({"solve", "--network", star, "--beta", "0.7", "--k", "0.27", "--out", b});
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(Cli, SweepCsv) {
  const std::string csv = (dir / "sweep.csv").string();
  const auto r = run({"sweep", "--network", star, "--omega", "1", "--betas", "0.8:0.9:0.1",
                      "--ks", "0.1:0.3:0.1", "--out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(csv));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "beta,k,profit_mixed,profit_human,total_x,total_z,regime");
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 6);
  EXPECT_EQ(run({"sweep", "--network", star, "--betas", "0.8", "--ks", "x"}).code, 1);
}

TEST_F(Cli, ThresholdsCsv) {
  const std::string csv = (dir / "t.csv").string();
  const auto r = run({"thresholds", "--network", star, "--omega", "1", "--betas", "0.8:0.9:0.1",
                      "--tol", "5e-4", "--out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(csv);
  EXPECT_EQ(text.rfind("beta,k_a,k_s,k_t\n0.8000,", 0), 0u);
  EXPECT_NE(text.find("\n0.9000,"), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
}

TEST_F(Cli, ThresholdErrors) {
  const std::string n4 = (dir / "n4.json").string();
  std::ofstream(n4) << R"({"n":2,"alpha":[[0,1],[1,0]],"theta":[1,1]})";
  EXPECT_EQ(run({"thresholds", "--network", n4}).code, 1);
  const auto r = run({"thresholds", "--network", star, "--omega", "2.5", "--betas", "0.5"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("k, total_x, total_z"), std::string::npos);
}

TEST_F(Cli, HelpDocumentsEveryFlag) {
  const auto top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"gen-network", "solve", "verify", "sweep", "thresholds"})
    EXPECT_NE(top.out.find(sub), std::string::npos);

  const std::vector<std::pair<std::string, std::vector<std::string>>> flags{
      {"gen-network", {"--family", "--n", "--xi", "--out"}},
      {"solve", {"--network", "--beta", "--omega", "--s", "--k", "--human-only", "--out"}},
      {"verify", {"--report", "--network"}},
      {"sweep", {"--network", "--omega", "--betas", "--ks", "--out"}},
      {"thresholds", {"--network", "--omega", "--betas", "--tol", "--out"}}};
  for (const auto& [sub, names] : flags) {
    const auto h = run({sub, "--help"});
    EXPECT_EQ(h.code, 0);
    for (const auto& f : names) EXPECT_NE(h.out.find(f), std::string::npos) << sub << " " << f;
  }
}
