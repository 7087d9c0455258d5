#pragma once

#include <map>
#include <string>
#include <vector>

#include "permreg/engine.hpp"
#include "permreg/simlab.hpp"
#include "permreg/types.hpp"

namespace permreg::io {

// Exit codes shared by the CLI and its tests.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;
inline constexpr int kExitNumericError = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat `[section]` / `key = value` config file. Unknown sections or keys are
/// rejected. `#` starts a comment.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
};

SimConfig sim_config_from(const ConfigFile& cfg);
/// n is needed to resolve `alpha = 1/n`; pass 0 to defer (alpha_auto stays set).
FitConfig fit_config_from(const ConfigFile& cfg);
BenchmarkGrid benchmark_grid_from(const ConfigFile& cfg);

// Locale-independent formatting with 17 significant digits (round-trip exact).
std::string fmt_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& csv);

std::string truth_to_json(const SimOutput& sim, const SimConfig& cfg);

std::string draws_beta_csv(const Draws& draws);
std::string draws_sigma2_csv(const Draws& draws);
std::string draws_perm_jsonl(const Draws& draws);
Draws draws_from_files(const std::string& dir);

std::string summary_to_json(const PosteriorSummary& s, int n);

std::string benchmark_table_csv(const BenchmarkResult& r);
std::string benchmark_timing_csv(const BenchmarkResult& r);

/// Histogram with Freedman-Diaconis bin width; degenerate samples collapse to
/// a single bin.
struct Histogram {
  std::vector<double> bin_left, bin_right;
  std::vector<long> count;
};
Histogram freedman_diaconis_histogram(std::vector<double> values);
std::string histogram_csv(const Histogram& h);

std::string render_summary_text(const PosteriorSummary& s);

}  // namespace permreg::io
