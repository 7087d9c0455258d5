// End-to-end tests that shell out to the built CLI (path in $PERMREG_CLI).

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "permreg/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace permreg;

namespace {

std::string cli_path() {
  const char* p = std::getenv("PERMREG_CLI");
  REQUIRE_MESSAGE(p != nullptr, "PERMREG_CLI must point at the built binary");
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("permreg_test_" + std::to_string(std::rand()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& sub = "") const {
    return sub.empty() ? path.string() : (path / sub).string();
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

const char* kSimConfig =
    "[sim]\n"
    "n = 24\n"
    "d = 2\n"
    "s0 = 3\n"
    "sigma = 0.1\n"
    "duplicate_first = false\n"
    "seed = 21\n";

const char* kFitConfig =
    "[fit]\n"
    "alpha = 0.5\n"
    "gibbs_iters = 60\n"
    "warmup_iters = 30\n"
    "seed = 22\n";

}  // namespace

TEST_CASE("simulate -> fit -> summarize pipeline produces its artifacts") {
  TempDir dir;
  write_file(dir.str("sim.ini"), kSimConfig);
  write_file(dir.str("fit.ini"), kFitConfig);

  CHECK(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("simout") +
            " --quiet") == 0);
  for (const char* f : {"data.csv", "truth.json", "manifest.json"})
    CHECK_MESSAGE(fs::exists(dir.path / "simout" / f), f);

  CHECK(run("fit --data " + dir.str("simout/data.csv") + " --config " + dir.str("fit.ini") +
            " --out " + dir.str("fitout") + " --quiet") == 0);
  for (const char* f : {"draws_beta.csv", "draws_sigma2.csv", "draws_perm.jsonl",
                        "summary.json", "manifest.json"})
    CHECK_MESSAGE(fs::exists(dir.path / "fitout" / f), f);

  CHECK(run("summarize --draws " + dir.str("fitout")) == 0);
  CHECK(fs::exists(dir.path / "fitout" / "hist_beta_1.csv"));
  CHECK(fs::exists(dir.path / "fitout" / "hist_beta_2.csv"));

  // manifest sanity
  json m = json::parse(io::read_text_file(dir.str("fitout/manifest.json")));
  CHECK(m["command"] == "fit");
  CHECK(m["seed"] == 22);
  CHECK(m.contains("start_time"));
  CHECK(m.contains("end_time"));
  CHECK(m["outputs"].size() == 4);

  // histogram counts add up to the retained draws (60-30 sweeps, thin 1)
  const io::Histogram dummy;  // silence unused-include warnings on some compilers
  (void)dummy;
  std::istringstream hist(io::read_text_file(dir.str("fitout/hist_beta_1.csv")));
  std::string line;
  std::getline(hist, line);
  CHECK(line == "bin_left,bin_right,count");
  long total = 0;
  while (std::getline(hist, line)) {
    const auto last = line.rfind(',');
    total += std::stol(line.substr(last + 1));
  }
  CHECK(total == 30);
}

TEST_CASE("dataset CSV written by simulate round-trips exactly") {
  TempDir dir;
  write_file(dir.str("sim.ini"), kSimConfig);
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("out") +
              " --quiet") == 0);
  const std::string csv = io::read_text_file(dir.str("out/data.csv"));
  const Dataset d = io::dataset_from_csv(csv);
  CHECK(io::dataset_to_csv(d) == csv);
  CHECK(d.n() == 24);
  CHECK(d.d() == 2);
}

TEST_CASE("reruns with the same seed are byte-identical outside the manifest") {
  TempDir dir;
  write_file(dir.str("sim.ini"), kSimConfig);
  write_file(dir.str("fit.ini"), kFitConfig);
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("s1") +
              " --quiet") == 0);
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("s2") +
              " --quiet") == 0);
  for (const char* f : {"data.csv", "truth.json"})
    CHECK(io::read_text_file(dir.str("s1/") + f) == io::read_text_file(dir.str("s2/") + f));

  REQUIRE(run("fit --data " + dir.str("s1/data.csv") + " --config " + dir.str("fit.ini") +
              " --out " + dir.str("f1") + " --quiet") == 0);
  REQUIRE(run("fit --data " + dir.str("s1/data.csv") + " --config " + dir.str("fit.ini") +
              " --out " + dir.str("f2") + " --quiet") == 0);
  for (const char* f : {"draws_beta.csv", "draws_sigma2.csv", "draws_perm.jsonl",
                        "summary.json"})
    CHECK(io::read_text_file(dir.str("f1/") + f) == io::read_text_file(dir.str("f2/") + f));
}

TEST_CASE("--seed overrides the config seed") {
  TempDir dir;
  write_file(dir.str("sim.ini"), kSimConfig);
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("a") +
              " --quiet") == 0);
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --seed 999 --out " + dir.str("b") +
              " --quiet") == 0);
  CHECK(io::read_text_file(dir.str("a/data.csv")) != io::read_text_file(dir.str("b/data.csv")));
  json m = json::parse(io::read_text_file(dir.str("b/manifest.json")));
  CHECK(m["seed"] == 999);
}

TEST_CASE("mcem mode runs and records convergence in the manifest") {
  TempDir dir;
  write_file(dir.str("sim.ini"), kSimConfig);
  write_file(dir.str("fit.ini"),
             "[fit]\nalpha = 1.0\ngibbs_iters = 60\nwarmup_iters = 10\nseed = 5\n");
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("s") +
              " --quiet") == 0);
  CHECK(run("fit --data " + dir.str("s/data.csv") + " --config " + dir.str("fit.ini") +
            " --mode mcem --out " + dir.str("m") + " --quiet") == 0);
  json m = json::parse(io::read_text_file(dir.str("m/manifest.json")));
  CHECK(m.contains("mcem_converged"));
  CHECK(m.contains("mcem_iterations"));
}

TEST_CASE("malformed config exits with the config error code") {
  TempDir dir;
  write_file(dir.str("bad1.ini"), "[sim]\nbogus_key = 1\n");
  CHECK(run("simulate --config " + dir.str("bad1.ini") + " --out " + dir.str("o")) == 2);

  write_file(dir.str("bad2.ini"), "[sim]\nn = 10\nn = 12\n");
  CHECK(run("simulate --config " + dir.str("bad2.ini") + " --out " + dir.str("o")) == 2);

  write_file(dir.str("bad3.ini"), "[fit]\nalpha = 2.0\n");
  write_file(dir.str("sim.ini"), kSimConfig);
  REQUIRE(run("simulate --config " + dir.str("sim.ini") + " --out " + dir.str("s") +
              " --quiet") == 0);
  CHECK(run("fit --data " + dir.str("s/data.csv") + " --config " + dir.str("bad3.ini") +
            " --out " + dir.str("f")) == 2);

  // missing required option is also a usage/config failure
  CHECK(run("simulate --out " + dir.str("o")) == 2);
}

TEST_CASE("missing input files exit with the io error code") {
  TempDir dir;
  CHECK(run("simulate --config " + dir.str("nope.ini") + " --out " + dir.str("o")) == 3);
  write_file(dir.str("fit.ini"), kFitConfig);
  CHECK(run("fit --data " + dir.str("nope.csv") + " --config " + dir.str("fit.ini") +
            " --out " + dir.str("o")) == 3);
  CHECK(run("summarize --draws " + dir.str("empty_dir_that_does_not_exist")) == 3);
}
