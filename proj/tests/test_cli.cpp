#include "cli.hpp"
#include "spgadmm/problem.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using spgadmm::cli::run;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("spgadmm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int gen(const std::string& out, const std::string& family = "lasso") {
    return run({"gen", "--seed", "7", "--family", family, "--ydims", "50,150", "--xdim", "100", "--out", out});
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenWritesLoadableDeterministicFile) {
  ASSERT_EQ(gen(path("a.json")), 0);
  ASSERT_EQ(gen(path("b.json")), 0);
  EXPECT_EQ(read(path("a.json")), read(path("b.json")));
  const auto loaded = spgadmm::load_instance(path("a.json"));
  ASSERT_TRUE(loaded.solution.has_value());
  EXPECT_TRUE(spgadmm::check_kkt(loaded.instance, *loaded.solution).valid());
  EXPECT_TRUE(fs::exists(path("a.json.manifest.json")));
}

TEST_F(Cli, GenRejectsZeroDimension) {
  ::testing::internal::CaptureStderr();
  const int code =
      run({"gen", "--seed", "1", "--family", "lasso", "--ydims", "50,0", "--xdim", "10", "--out", path("p.json")});
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 2);
  EXPECT_NE(err.find("--ydims"), std::string::npos);

  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"gen", "--seed", "1", "--family", "lasso", "--ydims", "5", "--xdim", "0", "--out", path("p.json")}), 2);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("--xdim"), std::string::npos);
}

TEST_F(Cli, GenReportsUnwritablePath) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(gen(path("missing/dir/p.json")), 2);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(Cli, SolveWritesOneRowPerIterate) {
  ASSERT_EQ(gen(path("p.json")), 0);
  ASSERT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("t.csv")}), 0);
  const std::string csv = read(path("t.csv"));
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,kkt_residual,primal_residual");
  const auto manifest = nlohmann::json::parse(read(path("t.csv.manifest.json")));
  const int iterations = manifest.at("iterations").get<int>();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), iterations + 2);
  EXPECT_EQ(manifest.at("status"), "converged");
  EXPECT_EQ(manifest.at("config").at("rho"), 1.6);
}

TEST_F(Cli, SolveExitCodes) {
  ASSERT_EQ(gen(path("p.json")), 0);
  EXPECT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("t.csv"), "--max-iters", "1"}), 1);

  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("t.csv"), "--rho", "2.5"}), 2);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("(0,2)"), std::string::npos);

  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"solve", "--instance", path("nope.json"), "--trace", path("t.csv")}), 2);
  EXPECT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("t.csv"), "--strategy", "jacobi"}), 2);
  EXPECT_EQ(run({"solve", "--instance", path("p.json")}), 2);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(Cli, CertifyNeedsKnownSolution) {
  ASSERT_EQ(gen(path("p.json")), 0);
  const auto loaded = spgadmm::load_instance(path("p.json"));
  spgadmm::save_instance(path("bare.json"), loaded.instance);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"solve", "--instance", path("bare.json"), "--trace", path("t.csv"), "--certify"}), 2);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("known_solution"), std::string::npos);
}

TEST_F(Cli, CertifiedTraceFeedsRateFit) {
  ASSERT_EQ(gen(path("p.json")), 0);
  ASSERT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("t.csv"), "--certify"}), 0);
  const std::string csv = read(path("t.csv"));
  const auto cols = spgadmm::cli::trace_columns(true);
  EXPECT_EQ(cols.size(), 13u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "k,kkt_residual,primal_residual,phi,t,lemma1_slack_a,lemma1_slack_b,lemma1_slack_c,lemma2_slack,"
            "lemma3_slack,contraction_slack,distM_singleton,ratio");
  EXPECT_NE(csv.find("\n0,"), std::string::npos);
  EXPECT_NE(csv.find(",nan,"), std::string::npos);

  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"rate", "--trace", path("t.csv")}), 0);
  const std::string report = ::testing::internal::GetCapturedStdout();
  for (const char* key : {"max_tail_ratio", "slope", "kappa_emp", "implied_vartheta"})
    EXPECT_NE(report.find(key), std::string::npos) << key;
}

TEST_F(Cli, RateRejectsBadTraces) {
  ASSERT_EQ(gen(path("p.json")), 0);
  ASSERT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("t.csv"), "--certify"}), 0);
  const std::string csv = read(path("t.csv"));
  std::size_t pos = 0;
  for (int line = 0; line < 15; ++line) pos = csv.find('\n', pos) + 1;
  std::ofstream(path("short.csv"), std::ios::binary) << csv.substr(0, pos);
  std::ofstream(path("empty.csv"), std::ios::binary) << "";
  std::ofstream(path("garbage.csv"), std::ios::binary) << csv.substr(0, csv.find('\n') + 1) << "0,1,oops\n";

  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"rate", "--trace", path("short.csv")}), 2);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("insufficient data"), std::string::npos);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"rate", "--trace", path("empty.csv")}), 2);
  EXPECT_EQ(run({"rate", "--trace", path("garbage.csv")}), 2);
  EXPECT_EQ(run({"rate", "--trace", path("absent.csv")}), 2);
  ASSERT_EQ(run({"solve", "--instance", path("p.json"), "--trace", path("plain.csv")}), 0);
  EXPECT_EQ(run({"rate", "--trace", path("plain.csv")}), 2);
  ::testing::internal::GetCapturedStderr();
}
