#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dbaug/cli/cli.hpp"

namespace fs = std::filesystem;
using dbaug::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dbaug_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(call({}).code == dbaug::cli::kExitUsage);
    CHECK(call({"gen-corpus", "--no-such-flag"}).code == dbaug::cli::kExitUsage);
    CHECK(call({"frobnicate"}).code == dbaug::cli::kExitUsage);
    const auto dir = scratch("usage");
    auto r = call({"augment", "--checkpoint", (dir / "missing.json").string(), "--out-dir", dir.string()});
    CHECK(r.code == dbaug::cli::kExitUsage);
    CHECK(r.err.find("checkpoint") != std::string::npos);
    CHECK(call({"ablate", "nonsense", "--out-dir", dir.string()}).code == dbaug::cli::kExitUsage);
  }

  TEST_CASE("runtime errors exit 1 with a kind") {
    const auto dir = scratch("runtime");
    std::ofstream(dir / "bad.jsonl") << "{\"text\": \"x\"}\n";
    auto r = call({"train", "--corpus", (dir / "bad.jsonl").string(), "--out-dir", dir.string()});
    CHECK(r.code == dbaug::cli::kExitFailure);
    CHECK(r.err.find("error[input]") != std::string::npos);
    CHECK(r.err.find("line 1") != std::string::npos);
    r = call({"gen-corpus", "--lr", "-1", "--out-dir", dir.string()});
    CHECK(r.code == dbaug::cli::kExitFailure);
    CHECK(r.err.find("error[value]") != std::string::npos);
  }

  TEST_CASE("version and gen-corpus") {
    CHECK(call({"--version"}).code == 0);
    const auto dir = scratch("gen");
    auto r = call({"gen-corpus", "--n-per-class", "7", "--seed", "3", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    const auto corpus = slurp(dir / "corpus.jsonl");
    CHECK(std::count(corpus.begin(), corpus.end(), '\n') == 14);
    const auto manifest = slurp(dir / "gen-corpus.manifest.json");
    CHECK(manifest.find("\"command\"") != std::string::npos);
    CHECK(manifest.find("corpus.jsonl") != std::string::npos);
    r = call({"gen-corpus", "--n-per-class", "7", "--seed", "3", "--out-dir", dir.string()});
    CHECK(slurp(dir / "corpus.jsonl") == corpus);
    CHECK(slurp(dir / "gen-corpus.manifest.json") == manifest);
  }

  TEST_CASE("config file supplies options") {
    const auto dir = scratch("config");
    std::ofstream(dir / "run.ini") << "n-per-class=4\nseed=9\n";
    auto r = call({"gen-corpus", "--config", (dir / "run.ini").string(), "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    const auto corpus = slurp(dir / "corpus.jsonl");
    CHECK(std::count(corpus.begin(), corpus.end(), '\n') == 8);
  }
}
