// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/report.hpp"
#include "spikeforge/weights_io.hpp"
#include "test_support.hpp"

using namespace spikeforge;
using spikeforge::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli_main(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

const std::string kData = "synth:blobs:300:4";

// Trained and calibrated weights shared by the tests below.
const std::filesystem::path& weights() {
  static TempDir dir("cli");
  static const bool ready = [] {
    const auto raw = (dir / "raw").string(), cal = (dir / "cal").string();
    REQUIRE(cli({"train", "--data", kData, "--out", raw, "--hidden", "16,16", "--epochs", "10", "--seed", "3"}).code == 0);
    REQUIRE(cli({"calibrate", "--weights", raw, "--data", kData, "--samples", "200", "--out", cal}).code == 0);
    return true;
  }();
  static const auto path = dir / "cal";
  (void)ready;
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"transmogrify"}).code == kExitUsage);
  CHECK(cli({"verify", "--bogus"}).code == kExitUsage);
  CHECK(cli({"verify", "--suite", "thm9"}).code == kExitUsage);
  const Result r = cli({"run", "--weights", weights().string(), "--data", kData, "--mode", "lif"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(cli({"run", "--weights", weights().string(), "--data", kData, "--T", "0"}).code == kExitUsage);
  CHECK(cli({"hist", "--weights", weights().string(), "--data", kData, "--t", "9", "--T", "4"}).code == kExitUsage);
}

TEST_CASE("help exits cleanly") {
  const Result r = cli({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("verify") != std::string::npos);
}

TEST_CASE("runtime errors exit with 1") {
  CHECK(cli({"run", "--weights", "/nonexistent/weights", "--data", kData}).code == kExitFailure);
  CHECK(cli({"export-report", "--in", "/nonexistent.csv"}).code == kExitFailure);
}

TEST_CASE("train and calibrate write a plan into the manifest") {
  const WeightBundle b = read_weight_bundle(weights());
  REQUIRE(b.plan.has_value());
  CHECK(b.plan->layers.size() == 2);
  CHECK(b.plan->source == ThresholdSource::max());
  const auto manifest = nlohmann::json::parse(slurp(weights() / kManifestFile));
  CHECK(manifest.at("calibration").at("source") == "max");
}

TEST_CASE("run emits the cartesian product of T and seeds") {
  const Result r = cli({"run", "--weights", weights().string(), "--data", kData, "--mode", "tpp", "--T", "2,4,8",
                        "--seeds", "1,2,3", "--limit", "50"});
  REQUIRE(r.code == kExitOk);
  const auto rows = parse_csv(r.out);
  CHECK(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"mode", "T", "seed", "accuracy", "mean", "std"});
  // The resolved configuration is logged as one JSON line.
  const auto line = r.err.substr(0, r.err.find('\n'));
  const auto cfg = nlohmann::json::parse(line);
  CHECK(cfg.at("command") == "run");
  CHECK(cfg.at("seeds") == nlohmann::json::array({1, 2, 3}));

  // Reproducible from the same inputs.
  CHECK(cli({"run", "--weights", weights().string(), "--data", kData, "--mode", "tpp", "--T", "2,4,8", "--seeds",
             "1,2,3", "--limit", "50", "--threads", "3"})
            .out == r.out);
}

TEST_CASE("run with --seed and --trials and an anytime table") {
  TempDir dir("cli-run");
  const auto acc = (dir / "acc.csv").string(), any = (dir / "any.csv").string();
  REQUIRE(cli({"run", "--weights", weights().string(), "--data", kData, "--mode", "baseline,shuffle", "--T", "4",
               "--seed", "5", "--trials", "2", "--limit", "40", "--out", acc, "--anytime", any})
              .code == kExitOk);
  const auto rows = parse_csv(slurp(acc));
  REQUIRE(rows.size() == 5);
  CHECK(rows[1][2] == "5");
  CHECK(rows[2][2] == "6");
  CHECK(parse_csv(slurp(any)).size() == 1 + 2 * 4);

  const Result rep = cli({"export-report", "--in", acc});
  REQUIRE(rep.code == kExitOk);
  const auto j = nlohmann::json::parse(rep.out);
  CHECK(j.at("kind") == "accuracy");
  CHECK(j.at("summary").size() == 2);
  CHECK(j.at("summary")[0].at("seeds") == 2);
  CHECK(nlohmann::json::parse(cli({"export-report", "--in", any}).out).at("kind") == "anytime");
}

TEST_CASE("spikes and hist reports") {
  const Result s = cli({"spikes", "--weights", weights().string(), "--data", kData, "--mode", "shuffle,tpp", "--T", "4",
                        "--limit", "30"});
  REQUIRE(s.code == kExitOk);
  const auto rows = parse_csv(s.out);
  CHECK(rows[0] == std::vector<std::string>{"mode", "T", "layer", "step", "mean_spikes", "baseline_mean_spikes",
                                            "pct_difference"});
  // 2 modes x (2 layers x 4 steps + 2 layer totals + 1 network total)
  CHECK(rows.size() == 1 + 2 * (8 + 3));
  bool found = false;
  for (const auto& row : rows)
    if (row[0] == "shuffle" && row[2] == "1" && row[3] == "all") {
      found = true;
      CHECK(row[6] == "0");
    }
  CHECK(found);

  const Result h = cli({"hist", "--weights", weights().string(), "--data", kData, "--mode", "tpp", "--T", "4", "--t", "1",
                        "--layer", "2", "--bins", "6", "--limit", "20"});
  REQUIRE(h.code == kExitOk);
  CHECK(parse_csv(h.out).size() == 7);
  CHECK(cli({"hist", "--weights", weights().string(), "--data", kData, "--layer", "3"}).code == kExitUsage);
}

TEST_CASE("verify exit status follows the check outcomes") {
  TempDir dir("cli-verify");
  const auto json = (dir / "perm.json").string();
  const Result perm = cli({"verify", "--suite", "perm", "--json", json});
  CHECK(perm.code == kExitOk);
  CHECK(perm.out.find("3/3 checks passed") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(json)).at("passed") == true);

  // The running and conditional expectation identities do not hold for
  // interior X; every other check in the suite passes.
  const Result thm = cli({"verify", "--suite", "thm1"});
  CHECK(thm.code == kExitFailure);
  std::istringstream lines(thm.out);
  std::string line;
  int failing = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("FAIL", 0) != 0) continue;
    ++failing;
    const bool expected = line.find("running-expectation") != std::string::npos ||
                          line.find("conditional-expectation") != std::string::npos;
    CHECK_MESSAGE(expected, line);
    CHECK(line.find(" X=0 ") == std::string::npos);
    CHECK(line.find(" X=1/4 ") == std::string::npos);
  }
  CHECK(failing == 14);
}

TEST_CASE("SPIKEFORGE_SEED sets the default seed") {
  ::setenv("SPIKEFORGE_SEED", "42", 1);
  CHECK(default_seed() == 42);
  const Result r = cli({"run", "--weights", weights().string(), "--data", kData, "--mode", "tpp", "--T", "2",
                        "--limit", "10"});
  CHECK(r.code == kExitOk);
  CHECK(parse_csv(r.out)[1][2] == "42");
  ::setenv("SPIKEFORGE_SEED", "forty-two", 1);
  CHECK(cli({"verify", "--suite", "perm"}).code == kExitUsage);
  ::unsetenv("SPIKEFORGE_SEED");
  CHECK(default_seed(9) == 9);
}

TEST_CASE("dataset specs") {
  CHECK(load_data_spec("synth:xor:8").size() == 8);
  CHECK(load_data_spec("synth:blobs:20:3").features == load_data_spec("synth:blobs:20:3").features);
  const auto d = spikeforge::testing::data_dir() / "digits";
  const Dataset digits = load_data_spec("idx:" + (d / "digits-test-images-idx3-ubyte").string() + "," +
                                        (d / "digits-test-labels-idx1-ubyte").string());
  CHECK(digits.size() == 500);
  CHECK_THROWS(load_data_spec("mnist"));
  CHECK_THROWS(load_data_spec("synth:spiral:10"));
}
