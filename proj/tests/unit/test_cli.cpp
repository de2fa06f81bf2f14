#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace streamcnn::cli {
namespace {

namespace fs = std::filesystem;

std::string data(const std::string& rel) { return std::string(STREAMCNN_DATA_DIR) + "/" + rel; }

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string probabilities(const std::string& json) {
  const auto a = json.find("\"probabilities\"");
  const auto b = json.find("\"argmax\"");
  return json.substr(a, b - a);
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, kOk);
  EXPECT_EQ(invoke({}).code, kUsageError);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsageError);
  EXPECT_EQ(invoke({"run", data("models/svhn_aq.json"), "--mode", "complex"}).code, kUsageError);
  EXPECT_EQ(invoke({"verify", "--trials", "0"}).code, kUsageError);
}

TEST(Cli, MissingWeightsNameThePath) {
  const auto r = invoke({"run", data("models/svhn_aq.json"), "--weights", "/nonexistent/weights.bin"});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("/nonexistent/weights.bin"), std::string::npos) << r.err;
}

TEST(Cli, RunIsDeterministicAndEnginesAgree) {
  const std::vector<std::string> base{"run", data("models/svhn_aq.json"), "--mode", "fixed", "--seed", "7"};
  auto stream = base;
  stream.insert(stream.end(), {"--engine", "stream"});
  auto direct = base;
  direct.insert(direct.end(), {"--engine", "direct"});
  const auto a = invoke(stream), b = invoke(stream), c = invoke(direct);
  ASSERT_EQ(a.code, kOk) << a.err;
  ASSERT_EQ(c.code, kOk) << c.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(probabilities(a.out), probabilities(c.out));
  EXPECT_NE(a.out.find("\"latency_cycles\": 1035"), std::string::npos);

  auto csv = stream;
  csv.insert(csv.end(), {"--format", "csv"});
  const auto d = invoke(csv);
  EXPECT_EQ(d.out.rfind("class,probability\n", 0), 0u);
}

TEST(Cli, VerifyExitCodes) {
  EXPECT_EQ(invoke({"verify", "--trials", "5"}).code, kOk);
  const auto r = invoke({"verify", "--trials", "3", "--inject-fault"});
  EXPECT_EQ(r.code, kVerificationFailure);
  EXPECT_NE(r.err.find("first failing seed 1"), std::string::npos) << r.err;
}

TEST(Cli, SweepIsByteIdentical) {
  TempDir a("streamcnn_cli_sweep_a"), b("streamcnn_cli_sweep_b");
  ASSERT_EQ(invoke({"sweep", data("models/svhn_baseline.json"), "--out", a.path().string()}).code, kOk);
  ASSERT_EQ(invoke({"sweep", data("models/svhn_baseline.json"), "--out", b.path().string()}).code, kOk);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a.path());
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / rel)) << rel;
  }
  EXPECT_EQ(files, 16u * 5 + 6);
  EXPECT_NE(slurp(a.path() / "sweep_summary.json").find("true"), std::string::npos);
}

TEST(Cli, EstimateFormats) {
  const auto j = invoke({"estimate", data("models/svhn_baseline.json")});
  ASSERT_EQ(j.code, kOk) << j.err;
  EXPECT_NE(j.out.find("streamcnn-cost-report/1"), std::string::npos);
  const auto c = invoke({"estimate", data("models/svhn_baseline.json"), "--format", "csv"});
  EXPECT_NE(c.out.find("TOTAL,"), std::string::npos);
}

TEST(Cli, PruneQuantizeProfileAndExport) {
  TempDir dir("streamcnn_cli_misc");
  const auto p = invoke({"prune", data("models/svhn_baseline.json"), "--sparsity", "0.5"});
  ASSERT_EQ(p.code, kOk) << p.err;
  EXPECT_NE(p.out.find("\"zero_fraction\": 0.5"), std::string::npos);

  const auto q = invoke({"quantize", data("models/svhn_baseline.json"), "--precision", data("configs/autoq_mixed.json"),
                         "--out", dir.path().string()});
  ASSERT_EQ(q.code, kOk) << q.err;

  const auto pr = invoke({"profile", data("models/svhn_aq.json"), "--probes", "2", "--format", "svg"});
  ASSERT_EQ(pr.code, kOk) << pr.err;
  EXPECT_NE(pr.out.find("<svg"), std::string::npos);

  const auto e = invoke({"export-instructions", "--height", "5", "--width", "5", "--kernel", "3", "--padding", "valid",
                         "--no-compress"});
  ASSERT_EQ(e.code, kOk) << e.err;
  EXPECT_NE(e.out.find("[9,27,63,54,36]"), std::string::npos) << e.out;
}

TEST(Cli, SynthWritesALoadableModel) {
  TempDir dir("streamcnn_cli_synth");
  ASSERT_EQ(invoke({"synth", data("models/svhn_baseline.json"), "--seed", "3", "--out", dir.path().string()}).code, kOk);
  std::string manifest;
  for (const auto& e : fs::directory_iterator(dir.path())) {
    if (e.path().extension() == ".json") manifest = e.path().string();
  }
  ASSERT_FALSE(manifest.empty());
  EXPECT_EQ(invoke({"run", manifest, "--engine", "direct"}).code, kOk);
}

}  // namespace
}  // namespace streamcnn::cli
