#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qchan/cli.hpp"

using namespace qchan;
namespace fs = std::filesystem;

namespace {

Correlation pr_table() {
  Correlation c(2, 2, 2);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t a = 0; a < 4; ++a) c.at(a, x) = (((a / 2) ^ (a % 2)) == ((x / 2) & (x % 2))) ? 0.5 : 0.0;
  return c;
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("qchan_test_" + std::to_string(::getpid()))) { fs::create_directories(path_); }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& text = "") const {
    const auto p = (path_ / name).string();
    if (!text.empty()) std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
};

}  // namespace

TEST(Io, RoundTripsAreCanonical) {
  std::vector<std::string> docs{
      io::serialize(io::document("correlation", io::to_json(pr_table()))),
      io::serialize(io::document("circuit", io::to_json(pr_box_channel()))),
      io::serialize(io::document("channel", io::to_json(compile_circuit(singlet_tsirelson_channel())))),
      io::serialize(io::document("assemblage", io::to_json(assemblage_from_channel(compile_circuit(pq_steering_pr_channel()))))),
      io::serialize(io::document("teleportage", io::to_json(teleportage_from_channel(compile_circuit(teleportation_channel()))))),
      io::serialize(io::document("distributed-measurement",
                                 io::to_json(distributed_measurement_from_channel(compile_circuit(bell_measurement_channel())))))};
  for (const auto& d : docs) {
    EXPECT_EQ(io::canonical(d), d);
    EXPECT_EQ(io::canonical(io::canonical(d)), io::canonical(d));
  }
  // full double precision survives
  Correlation c(1, 1, 2);
  c.table = {1.0 / 3.0, 2.0 / 3.0};
  auto back = io::correlation_from_json(io::parse_document(io::serialize(io::document("correlation", io::to_json(c)))).payload);
  EXPECT_EQ(back.table[0], 1.0 / 3.0);
  EXPECT_EQ(back.table[1], 2.0 / 3.0);
}

TEST(Io, ByteStable) {
  EXPECT_EQ(io::serialize(io::document("correlation", io::to_json(pr_table()))),
            io::serialize(io::document("correlation", io::to_json(pr_table()))));
}

TEST(Io, Diagnostics) {
  auto doc = io::document("channel", io::to_json(compile_circuit(swap_channel())));
  doc["payload"]["choi"]["data"][0] = {-1.0, 0.0};
  try {
    io::channel_from_document(io::parse_document(doc.dump()));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("positive semidefinite"), std::string::npos) << e.what();
  }
  auto c = io::document("correlation", io::to_json(pr_table()));
  c["payload"].erase("table");
  try {
    io::canonical(c.dump());
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("payload.table"), std::string::npos) << e.what();
  }
  c = io::document("correlation", io::to_json(pr_table()));
  c["payload"]["table"][3] = "x";
  EXPECT_THROW(io::canonical(c.dump()), ValidationError);
  EXPECT_THROW(io::parse_document("{not json"), ValidationError);
  EXPECT_THROW(io::parse_document(R"({"kind":"channel","version":"2","payload":{}})"), ValidationError);
}

TEST(Cli, DemosPrintTargets) {
  auto r = run({"demo", "singlet"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("2.82842712"), std::string::npos) << r.out;
  r = run({"demo", "pq-steering-alpha", "--alpha", "0.1666667"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("2.9999998"), std::string::npos) << r.out;
  for (const auto& d : cli::kDemos) {
    auto a = run({"--json", "demo", d}), b = run({"--json", "demo", d});
    EXPECT_EQ(a.code, 0) << d << a.err;
    EXPECT_EQ(a.out, b.out) << d;
    EXPECT_NO_THROW(io::parse_document(a.out)) << d;
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"verify-causal", "/nonexistent/file.json"}).code, cli::kExitValidation);
  EXPECT_EQ(run({"demo", "nope"}).code, cli::kExitValidation);
  EXPECT_EQ(run({"construct", "nope"}).code, cli::kExitValidation);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, ConstructVerifyExtractClassify) {
  TempDir tmp;
  const auto swap = tmp.file("swap.json");
  EXPECT_EQ(run({"construct", "swap", "-o", swap}).code, 0);
  auto r = run({"--json", "verify-causal", swap});
  EXPECT_EQ(r.code, 0);
  auto doc = io::parse_document(r.out);
  EXPECT_EQ(doc.payload["verdict"], "not-causal");

  const auto pr = tmp.file("pr.json");
  EXPECT_EQ(run({"construct", "pr-box", "--compiled", "-o", pr}).code, 0);
  EXPECT_EQ(io::parse_document(run({"--json", "verify-causal", pr}).out).payload["verdict"], "causal");
  const auto corr = tmp.file("corr.json");
  EXPECT_EQ(run({"extract", "correlations", pr, "-o", corr}).code, 0);
  EXPECT_EQ(io::parse_document(run({"--json", "classify", "lhv", corr}).out).payload["status"], "numerically-infeasible");
  EXPECT_EQ(io::parse_document(run({"--json", "classify", "witness", corr}).out).payload["verdict"], "not-almost-quantum");
  auto bell = io::parse_document(run({"--json", "bell", "chsh", corr}).out);
  EXPECT_NEAR(bell.payload["chsh"].get<double>(), 4.0, 1e-12);

  const auto alpha = tmp.file("alpha.json");
  EXPECT_EQ(run({"construct", "pq-steering-alpha", "--alpha", "0.5", "-o", alpha}).code, 0);
  bell = io::parse_document(run({"--json", "bell", "chsh", alpha, "--outcome-map", "0,0,1,1"}).out);
  EXPECT_NEAR(bell.payload["chsh"].get<double>(), 1.0, 1e-9);

  const auto pq = tmp.file("pq.json");
  EXPECT_EQ(run({"construct", "pq-steering-pr", "-o", pq}).code, 0);
  const auto as = tmp.file("as.json");
  EXPECT_EQ(run({"extract", "assemblage", pq, "--trusted-input", "1", "-o", as}).code, 0);
  EXPECT_EQ(io::parse_document(run({"--json", "classify", "almost-quantum", as}).out).payload["status"], "numerically-infeasible");
  EXPECT_EQ(run({"extract", "assemblage", pq, "--trusted-input", "5"}).code, cli::kExitValidation);
  EXPECT_EQ(run({"extract", "teleportage", swap}).code, cli::kExitValidation);
}

TEST(Cli, ToleranceFromEnvironment) {
  TempDir tmp;
  const auto swap = tmp.file("swap.json");
  ASSERT_EQ(run({"construct", "swap", "-o", swap}).code, 0);
  ::setenv("WORKBENCH_TOL", "100", 1);
  auto loose = io::parse_document(run({"--json", "verify-causal", swap}).out);
  auto strict = io::parse_document(run({"--json", "--tol", "1e-9", "verify-causal", swap}).out);
  ::unsetenv("WORKBENCH_TOL");
  EXPECT_EQ(loose.payload["verdict"], "causal");
  EXPECT_EQ(strict.payload["verdict"], "not-causal");
}
