// Batch CLI: simulate synthetic mismatched-regression data, fit the Gibbs or
// MC-EM sampler, run the benchmark grid, and summarize stored draws.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "permreg/engine.hpp"
#include "permreg/io.hpp"
#include "permreg/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace permreg;

namespace {

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct ManifestBuilder {
  json j;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  ManifestBuilder(const std::string& command, std::uint64_t seed) {
    j["artifact_version"] = "1.0";
    j["command"] = command;
    j["seed"] = seed;
    j["start_time"] = timestamp_now();
    j["outputs"] = json::array();
    j["stage_seconds"] = json::object();
  }
  void stage(const std::string& name, double seconds) { j["stage_seconds"][name] = seconds; }
  void output(const std::string& path) { j["outputs"].push_back(path); }
  void write(const std::string& out_dir) {
    j["end_time"] = timestamp_now();
    j["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_text_file(out_dir + "/manifest.json", j.dump(2) + "\n");
  }
};

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io::IoError("cannot create output directory: " + out_dir);
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_override = -1;
  std::string mode_override;
  bool quiet = false;
};

int cmd_simulate(const CommonOpts& opts) {
  auto cfg = io::ConfigFile::parse_file(opts.config_path);
  SimConfig sim = io::sim_config_from(cfg);
  if (opts.seed_override >= 0) sim.seed = static_cast<std::uint64_t>(opts.seed_override);
  sim.validate();

  ensure_out_dir(opts.out_dir);
  ManifestBuilder manifest("simulate", sim.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const SimOutput out = generate_linear(sim);
  manifest.stage("generate", std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - t0).count());

  io::write_text_file(opts.out_dir + "/data.csv", io::dataset_to_csv(out.data));
  io::write_text_file(opts.out_dir + "/truth.json", io::truth_to_json(out, sim));
  manifest.output(opts.out_dir + "/data.csv");
  manifest.output(opts.out_dir + "/truth.json");
  manifest.write(opts.out_dir);
  if (!opts.quiet)
    std::cout << "simulated n=" << sim.n << " d=" << sim.d << " displaced=" << out.pi0.displaced()
              << " -> " << opts.out_dir << "\n";
  return io::kExitOk;
}

int cmd_fit(const std::string& data_path, const CommonOpts& opts) {
  auto cfg = io::ConfigFile::parse_file(opts.config_path);
  FitConfig fit = io::fit_config_from(cfg);
  if (opts.seed_override >= 0) fit.seed = static_cast<std::uint64_t>(opts.seed_override);
  if (opts.mode_override == "gibbs") fit.mode = FitMode::Gibbs;
  else if (opts.mode_override == "mcem") fit.mode = FitMode::Mcem;
  else if (!opts.mode_override.empty())
    throw io::ConfigError("unknown mode '" + opts.mode_override + "'");

  const Dataset data = io::dataset_from_csv(io::read_text_file(data_path));
  try {
    fit.validate();
  } catch (const std::exception& e) {
    throw io::ConfigError(e.what());
  }

  ensure_out_dir(opts.out_dir);
  ManifestBuilder manifest("fit", fit.seed);
  const auto t0 = std::chrono::steady_clock::now();

  Draws draws;
  if (fit.mode == FitMode::Gibbs) {
    draws = gibbs_fit(data, fit);
  } else {
    const McemResult r = mcem_fit(data, fit);
    // Persist the trajectory in the same trace format; the last record is the
    // fixed point (or the cap).
    for (const auto& rec : r.trajectory) {
      draws.beta_trace.push_back(rec.state.beta);
      draws.sigma2_trace.push_back(rec.state.sigma2);
      draws.perm_trace.push_back(rec.perm);
    }
    manifest.j["mcem_converged"] = r.converged;
    manifest.j["mcem_iterations"] = r.iterations;
  }
  manifest.stage("fit", std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count());

  const PosteriorSummary summary = summarize(draws);
  io::write_text_file(opts.out_dir + "/draws_beta.csv", io::draws_beta_csv(draws));
  io::write_text_file(opts.out_dir + "/draws_sigma2.csv", io::draws_sigma2_csv(draws));
  io::write_text_file(opts.out_dir + "/draws_perm.jsonl", io::draws_perm_jsonl(draws));
  io::write_text_file(opts.out_dir + "/summary.json",
                      io::summary_to_json(summary, data.n()));
  for (const char* f : {"draws_beta.csv", "draws_sigma2.csv", "draws_perm.jsonl",
                        "summary.json"})
    manifest.output(opts.out_dir + "/" + f);
  manifest.write(opts.out_dir);
  if (!opts.quiet)
    std::cout << "fit: " << draws.size() << " retained draws -> " << opts.out_dir << "\n";
  return io::kExitOk;
}

int cmd_benchmark(const CommonOpts& opts) {
  auto cfg = io::ConfigFile::parse_file(opts.config_path);
  BenchmarkGrid grid = io::benchmark_grid_from(cfg);
  if (opts.seed_override >= 0) grid.seed = static_cast<std::uint64_t>(opts.seed_override);

  ensure_out_dir(opts.out_dir);
  ManifestBuilder manifest("benchmark", grid.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkResult result = run_benchmark(grid);
  manifest.stage("benchmark", std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0).count());

  io::write_text_file(opts.out_dir + "/table.csv", io::benchmark_table_csv(result));
  io::write_text_file(opts.out_dir + "/timing.csv", io::benchmark_timing_csv(result));
  manifest.output(opts.out_dir + "/table.csv");
  manifest.output(opts.out_dir + "/timing.csv");
  manifest.write(opts.out_dir);

  bool any_ok = false;
  for (const auto& row : result.rows) any_ok = any_ok || row.replicates > 0;
  if (!opts.quiet)
    std::cout << "benchmark: " << result.rows.size() << " cells -> " << opts.out_dir << "\n";
  return any_ok ? io::kExitOk : io::kExitNumericError;
}

int cmd_summarize(const std::string& draws_dir, const CommonOpts& opts) {
  const Draws draws = io::draws_from_files(draws_dir);
  const PosteriorSummary summary = summarize(draws);
  const std::string out_dir = opts.out_dir == "." ? draws_dir : opts.out_dir;
  ensure_out_dir(out_dir);

  std::cout << io::render_summary_text(summary);
  const int d = static_cast<int>(summary.beta_mean.size());
  std::vector<double> coord(draws.size());
  for (int j = 0; j < d; ++j) {
    for (std::size_t t = 0; t < draws.size(); ++t) coord[t] = draws.beta_trace[t][j];
    const io::Histogram h = io::freedman_diaconis_histogram(coord);
    io::write_text_file(out_dir + "/hist_beta_" + std::to_string(j + 1) + ".csv",
                        io::histogram_csv(h));
  }
  return io::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Bayesian regression under sparse permutations"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string data_path, draws_dir;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", opts.config_path, "config file")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed_override, "override config seed");
    sub->add_flag("--quiet", opts.quiet, "suppress progress output");
  };

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, true);

  auto* fit = app.add_subcommand("fit", "run the Gibbs or MC-EM sampler");
  fit->add_option("--data", data_path, "dataset CSV")->required();
  fit->add_option("--mode", opts.mode_override, "gibbs|mcem");
  add_common(fit, true);

  auto* bench = app.add_subcommand("benchmark", "run the repeated-simulation grid");
  add_common(bench, true);

  auto* summ = app.add_subcommand("summarize", "summarize stored draws");
  summ->add_option("--draws", draws_dir, "directory holding draw files")->required();
  add_common(summ, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? io::kExitOk : io::kExitConfigError;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opts);
    if (fit->parsed()) return cmd_fit(data_path, opts);
    if (bench->parsed()) return cmd_benchmark(opts);
    if (summ->parsed()) return cmd_summarize(draws_dir, opts);
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return io::kExitConfigError;
  } catch (const io::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return io::kExitIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return io::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io::kExitNumericError;
  }
  return io::kExitConfigError;
}
