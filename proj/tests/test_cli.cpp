#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "holonomy/cli.hpp"
#include "holonomy/parallel.hpp"
#include "json.hpp"

using namespace holonomy;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

const std::filesystem::path kOut = std::filesystem::temp_directory_path() / "holonomy-cli-test";

}  // namespace

TEST_CASE("validate prints free-point witnesses") {
  const auto r = cli({"validate", "--hyph", HOLONOMY_DATA_DIR "/baez_sawin_J8.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("edge 4: free point") != std::string::npos);
  CHECK(cli({"validate", "--baez-sawin", "3"}).code == 0);
  CHECK(cli({"validate"}).code == 2);
  CHECK(cli({"validate", "--hyph", "/nonexistent.json"}).code == 2);
}

TEST_CASE("area-law report and byte-identical reruns") {
  std::filesystem::remove_all(kOut);
  const std::vector<std::string> argv{"area-law", "--spec", R"({"family":"su2"})", "--seed", "7", "--out", kOut.string()};
  const auto a = cli(argv);
  CHECK(a.code == 0);
  const std::string first = slurp(kOut / "area-law-7.json");
  const auto j = nlohmann::json::parse(first);
  CHECK(j["metrics"].contains("slope"));
  CHECK(j["pass"] == true);
  auto again = argv;
  again.insert(again.end(), {"--threads", "3"});
  CHECK(cli(again).code == 0);
  set_thread_limit(0);
  CHECK(slurp(kOut / "area-law-7.json") == first);
  CHECK(std::filesystem::exists(kOut / "area-law-7.csv"));
  std::filesystem::remove_all(kOut);
}

TEST_CASE("exit codes") {
  const std::string out = kOut.string();
  CHECK(cli({"area-law", "--out", out, "--slope-min", "3"}).code == 1);
  CHECK(cli({"area-law", "--out", out, "--stepz", "3"}).code == 2);
  CHECK(cli({"no-such-command"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  const auto bad_spec = cli({"area-law", "--out", out, "--spec", "{not json"});
  CHECK(bad_spec.code == 2);
  CHECK(bad_spec.err.find("'spec'") != std::string::npos);

  CHECK(cli({"densecrit-fuzz", "--out", out, "--steps", "10"}).code == 2);
  CHECK(cli({"area-law", "--out", out, "--seed", "-4"}).code == 2);

  const auto cfg = kOut / "config.json";
  std::filesystem::create_directories(kOut);
  std::ofstream(cfg) << R"({"seed": 3, "bogus": 1})";
  const auto unknown = cli({"area-law", "--out", out, "--json-config", cfg.string()});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("'bogus'") != std::string::npos);
  std::ofstream(cfg) << R"({"seed": 3, "rhos": "small"})";
  CHECK(cli({"area-law", "--out", out, "--json-config", cfg.string()}).err.find("'rhos'") != std::string::npos);
  std::ofstream(cfg) << "{ broken";
  CHECK(cli({"area-law", "--out", out, "--json-config", cfg.string()}).code == 2);
  std::filesystem::remove_all(kOut);
}

TEST_CASE("config file overrides flags and the environment supplies the seed") {
  const std::string out = kOut.string();
  std::filesystem::create_directories(kOut);
  const auto cfg = kOut / "config.json";
  std::ofstream(cfg) << R"({"seed": 11, "instances": 50, "acted": 5})";
  CHECK(cli({"densecrit-fuzz", "--out", out, "--seed", "2", "--instances", "9999999", "--json-config", cfg.string()})
            .code == 0);
  CHECK(std::filesystem::exists(kOut / "densecrit-fuzz-11.json"));
  const auto j = nlohmann::json::parse(slurp(kOut / "densecrit-fuzz-11.json"));
  CHECK(j["metrics"]["instances"] == 50);

  setenv("HOLONOMY_SEED", "123", 1);
  CHECK(cli({"densecrit-fuzz", "--out", out, "--instances", "20", "--acted", "2"}).code == 0);
  CHECK(std::filesystem::exists(kOut / "densecrit-fuzz-123.json"));
  setenv("HOLONOMY_SEED", "x", 1);
  CHECK(cli({"densecrit-fuzz", "--out", out, "--instances", "20"}).code == 2);
  unsetenv("HOLONOMY_SEED");
  std::filesystem::remove_all(kOut);
}

TEST_CASE("fuzz subcommand") {
  const auto r = cli({"densecrit-fuzz", "--instances", "500", "--seed", "1", "--out", kOut.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("disagreements = 0") != std::string::npos);
  std::filesystem::remove_all(kOut);
}
