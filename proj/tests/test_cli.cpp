#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "sonc/cli.hpp"

using namespace sonc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome runCli(std::vector<std::string> args) {
  args.insert(args.begin(), {"sonc", "--log", "quiet"});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sonc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, BoundThenVerify) {
  const auto poly = write("f.json", polynomialToJson(fixtures::motzkinLike()));
  const auto b = runCli({"bound", "--input", poly, "--cert", path("cert.json"), "--report", path("r.csv")});
  ASSERT_EQ(b.code, cli::kOk) << b.err;
  EXPECT_NE(b.out.find("status Optimal"), std::string::npos);
  EXPECT_NE(b.out.find("rounds 2"), std::string::npos);
  const auto cert = certificateFromJson(readFile(path("cert.json")));
  EXPECT_NEAR(cert.bound(), 1.0, 1e-7);
  const auto csv = readFile(path("r.csv"));
  EXPECT_EQ(csv.rfind("round,phase,nCircuits,bound,gap,millis\n", 0), 0u);

  const auto v = runCli({"verify", "--input", poly, "--cert", path("cert.json")});
  EXPECT_EQ(v.code, cli::kOk) << v.out;
  EXPECT_EQ(v.out.rfind("valid\n", 0), 0u);
}

TEST_F(CliTest, TamperedCertificateIsRejected) {
  const auto poly = write("f.json", polynomialToJson(fixtures::motzkinLike()));
  ASSERT_EQ(runCli({"bound", "--input", poly, "--cert", path("cert.json")}).code, cli::kOk);
  auto cert = certificateFromJson(readFile(path("cert.json")));
  cert.gamma -= 0.5;
  const auto bad = write("bad.json", certificateToJson(cert));
  const auto v = runCli({"verify", "--input", poly, "--cert", bad});
  EXPECT_EQ(v.code, cli::kNoBound);
  EXPECT_NE(v.out.find("invalid"), std::string::npos);
  EXPECT_NE(v.out.find("reason residual"), std::string::npos);
}

TEST_F(CliTest, NoBoundExitsWithOne) {
  const auto poly = write("g.json", polynomialToJson(fixtures::univariate({{0, 1}, {2, 1}, {4, -1}})));
  const auto r = runCli({"bound", "--input", poly});
  EXPECT_EQ(r.code, cli::kNoBound);
  EXPECT_NE(r.out.find("status NoSoncBound"), std::string::npos);
  EXPECT_NE(r.out.find("exponent (4)"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(runCli({}).code, cli::kUsage);
  EXPECT_EQ(runCli({"bound"}).code, cli::kUsage);
  EXPECT_EQ(runCli({"bound", "--input", path("missing.json")}).code, cli::kUsage);
  EXPECT_EQ(runCli({"gen", "--n", "2", "--d", "5", "--terms", "1"}).code, cli::kUsage);
  const auto junk = write("junk.json", "{\"n\": 2, \"terms\": [");
  EXPECT_EQ(runCli({"bound", "--input", junk}).code, cli::kUsage);
}

TEST_F(CliTest, GenBatchWritesManifest) {
  const auto r = runCli({"gen", "--n", "2", "--d", "6", "--terms", "3", "--seed", "7", "--count", "3", "--out-dir", path("batch")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto manifest = readFile(path("batch/manifest.csv"));
  EXPECT_EQ(manifest, "file,seed,n,d,terms\ninstance_7.json,7,2,6,3\ninstance_8.json,8,2,6,3\ninstance_9.json,9,2,6,3\n");
  const auto p = polynomialFromJson(readFile(path("batch/instance_8.json")));
  const auto q = generate({.n = 2, .d = 6, .termCount = 3, .seed = 8});
  ASSERT_EQ(p.size(), q.size());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p.coef(i), q.coef(i));
}

TEST_F(CliTest, EnumerateRestrictedToOneInner) {
  const auto poly = write("f.json", polynomialToJson(fixtures::motzkinLike()));
  const auto r = runCli({"enumerate", "--input", poly, "--inner", "2,2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("(0,2) (6,2) ; (2,2)"), std::string::npos) << r.out;
  EXPECT_EQ(runCli({"enumerate", "--input", poly, "--inner", "2"}).code, cli::kUsage);
}

TEST_F(CliTest, OracleAndLocalMin) {
  const auto poly = write("f.json", polynomialToJson(fixtures::motzkinLike()));
  const auto o = runCli({"oracle-bound", "--input", poly});
  ASSERT_EQ(o.code, cli::kOk);
  EXPECT_NEAR(std::stod(o.out.substr(6)), 1.0, 1e-7);
  const auto l = runCli({"localmin", "--input", poly, "--starts", "10", "--seed", "3"});
  ASSERT_EQ(l.code, cli::kOk);
  EXPECT_NEAR(std::stod(l.out.substr(6)), 1.0, 1e-9);
}

TEST_F(CliTest, BenchWritesOneRowPerReplicate) {
  const auto r = runCli({"bench", "--n", "2", "--d", "6", "--terms", "3", "--seed", "100", "--replicates", "10",
                         "--threads", "2", "--out", path("bench.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream csv(readFile(path("bench.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "seed,status,bound,oracle_gap,rounds,circuits,millis");
  int rows = 0;
  while (std::getline(csv, line)) {
    EXPECT_EQ(line.rfind(std::to_string(100 + rows) + ",Optimal,", 0), 0u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}
