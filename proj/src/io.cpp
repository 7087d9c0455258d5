#include "permreg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace permreg::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + what + ": '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + what + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean for " + what + ": '" + v + "'");
}

LikelihoodFamily parse_family(const std::string& name, double tau) {
  if (name == "gaussian") return LikelihoodFamily::gaussian();
  if (name == "ald") return LikelihoodFamily::ald(tau);
  throw ConfigError("unknown likelihood family: '" + name + "'");
}

const std::set<std::string> kSimKeys = {"n",      "d",     "s0",  "sigma",           "family",
                                        "tau",    "beta0", "seed", "duplicate_first"};
const std::set<std::string> kFitKeys = {
    "alpha",         "family",          "tau",           "beta_prior_var",
    "sigma2_prior_var", "k_bound",      "gibbs_iters",   "warmup_iters",
    "perm_steps",    "hmc_per_sweep",   "hmc_step_size", "hmc_leapfrog",
    "hmc_target_accept", "thin",        "seed",          "mode"};
const std::set<std::string> kBenchKeys = {"n_values", "alpha_values", "replicates", "seed"};

void check_keys(const ConfigFile& cfg, const std::string& section,
                const std::set<std::string>& allowed) {
  auto it = cfg.sections.find(section);
  if (it == cfg.sections.end()) return;
  for (const auto& [key, _] : it->second)
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw ConfigError("malformed line " + std::to_string(lineno) + ": '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    if (cfg.sections[section].count(key))
      throw ConfigError("duplicate key '" + key + "' in section [" + section + "]");
    cfg.sections[section][key] = val;
  }
  const std::set<std::string> known_sections = {"sim", "fit", "benchmark"};
  for (const auto& [name, _] : cfg.sections)
    if (!known_sections.count(name)) throw ConfigError("unknown section [" + name + "]");
  check_keys(cfg, "sim", kSimKeys);
  check_keys(cfg, "fit", kFitKeys);
  check_keys(cfg, "benchmark", kBenchKeys);
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  return parse_string(read_text_file(path));
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  auto it = sections.find(section);
  if (it == sections.end()) return fallback;
  auto jt = it->second.find(key);
  return jt == it->second.end() ? fallback : jt->second;
}

SimConfig sim_config_from(const ConfigFile& cfg) {
  SimConfig sim;
  sim.n = static_cast<int>(parse_long(cfg.get("sim", "n", "100"), "sim.n"));
  sim.d = static_cast<int>(parse_long(cfg.get("sim", "d", "20"), "sim.d"));
  sim.s0 = static_cast<int>(parse_long(cfg.get("sim", "s0", "6"), "sim.s0"));
  sim.sigma = parse_double(cfg.get("sim", "sigma", "0.1"), "sim.sigma");
  const double tau = parse_double(cfg.get("sim", "tau", "0.5"), "sim.tau");
  sim.family = parse_family(cfg.get("sim", "family", "gaussian"), tau);
  sim.duplicate_first = parse_bool(cfg.get("sim", "duplicate_first", "true"),
                                   "sim.duplicate_first");
  sim.seed = static_cast<std::uint64_t>(parse_long(cfg.get("sim", "seed", "0"), "sim.seed"));
  if (cfg.has("sim", "beta0")) {
    const auto parts = split(cfg.get("sim", "beta0", ""), ',');
    sim.beta0.resize(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
      sim.beta0[i] = parse_double(parts[i], "sim.beta0");
  }
  return sim;
}

FitConfig fit_config_from(const ConfigFile& cfg) {
  FitConfig fit;
  const std::string alpha = cfg.get("fit", "alpha", "1/n");
  if (alpha == "1/n") {
    fit.alpha_auto = true;
  } else {
    fit.alpha = parse_double(alpha, "fit.alpha");
  }
  const double tau = parse_double(cfg.get("fit", "tau", "0.5"), "fit.tau");
  fit.family = parse_family(cfg.get("fit", "family", "gaussian"), tau);
  fit.priors.beta_prior_var =
      parse_double(cfg.get("fit", "beta_prior_var", "1000"), "fit.beta_prior_var");
  fit.priors.sigma2_prior_var =
      parse_double(cfg.get("fit", "sigma2_prior_var", "1000"), "fit.sigma2_prior_var");
  const std::string kb = cfg.get("fit", "k_bound", "none");
  if (kb != "none" && kb != "unbounded")
    fit.priors.k_bound = static_cast<int>(parse_long(kb, "fit.k_bound"));
  fit.gibbs_iters = static_cast<int>(parse_long(cfg.get("fit", "gibbs_iters", "400"),
                                                "fit.gibbs_iters"));
  fit.warmup_iters = static_cast<int>(parse_long(
      cfg.get("fit", "warmup_iters", std::to_string(fit.gibbs_iters / 2)),
      "fit.warmup_iters"));
  const std::string ps = cfg.get("fit", "perm_steps", "auto");
  fit.perm_chain_steps_per_gibbs =
      ps == "auto" ? 0 : static_cast<int>(parse_long(ps, "fit.perm_steps"));
  fit.hmc_transitions_per_sweep =
      static_cast<int>(parse_long(cfg.get("fit", "hmc_per_sweep", "5"), "fit.hmc_per_sweep"));
  fit.hmc.step_size = parse_double(cfg.get("fit", "hmc_step_size", "0.05"), "fit.hmc_step_size");
  fit.hmc.n_leapfrog =
      static_cast<int>(parse_long(cfg.get("fit", "hmc_leapfrog", "20"), "fit.hmc_leapfrog"));
  fit.hmc.target_accept =
      parse_double(cfg.get("fit", "hmc_target_accept", "0.75"), "fit.hmc_target_accept");
  fit.thin = static_cast<int>(parse_long(cfg.get("fit", "thin", "1"), "fit.thin"));
  fit.seed = static_cast<std::uint64_t>(parse_long(cfg.get("fit", "seed", "0"), "fit.seed"));
  const std::string mode = cfg.get("fit", "mode", "gibbs");
  if (mode == "gibbs")
    fit.mode = FitMode::Gibbs;
  else if (mode == "mcem")
    fit.mode = FitMode::Mcem;
  else
    throw ConfigError("unknown mode '" + mode + "'");
  return fit;
}

BenchmarkGrid benchmark_grid_from(const ConfigFile& cfg) {
  BenchmarkGrid grid;
  grid.sim = sim_config_from(cfg);
  grid.fit = fit_config_from(cfg);
  if (cfg.has("benchmark", "n_values")) {
    grid.n_values.clear();
    for (const auto& v : split(cfg.get("benchmark", "n_values", ""), ','))
      grid.n_values.push_back(static_cast<int>(parse_long(v, "benchmark.n_values")));
  }
  if (cfg.has("benchmark", "alpha_values")) {
    grid.alpha_values.clear();
    for (const auto& v : split(cfg.get("benchmark", "alpha_values", ""), ','))
      grid.alpha_values.push_back(v == "1/n" ? -1.0
                                             : parse_double(v, "benchmark.alpha_values"));
  }
  grid.replicates = static_cast<int>(
      parse_long(cfg.get("benchmark", "replicates", "20"), "benchmark.replicates"));
  grid.seed = static_cast<std::uint64_t>(
      parse_long(cfg.get("benchmark", "seed", "0"), "benchmark.seed"));
  if (grid.n_values.empty() || grid.alpha_values.empty() || grid.replicates < 1)
    throw ConfigError("benchmark grid must be non-empty");
  return grid;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "y";
  for (int j = 1; j <= data.d(); ++j) out += ",x" + std::to_string(j);
  out += "\n";
  for (int i = 0; i < data.n(); ++i) {
    out += fmt_double(data.y[i]);
    for (int j = 0; j < data.d(); ++j) out += "," + fmt_double(data.X(i, j));
    out += "\n";
  }
  return out;
}

Dataset dataset_from_csv(const std::string& csv) {
  std::stringstream ss(csv);
  std::string line;
  if (!std::getline(ss, line)) throw IoError("empty dataset file");
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "y") throw IoError("dataset header must start with y");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw IoError("dataset needs at least one covariate column");

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  while (std::getline(ss, line)) {
    if (trim(line).empty()) continue;
    const auto parts = split(line, ',');
    if (static_cast<int>(parts.size()) != d + 1) throw IoError("ragged dataset row");
    ys.push_back(parse_double(parts[0], "y"));
    std::vector<double> row(d);
    for (int j = 0; j < d; ++j) row[j] = parse_double(parts[j + 1], "x");
    xs.push_back(std::move(row));
  }
  Dataset data;
  data.y.resize(ys.size());
  data.X.resize(ys.size(), d);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    data.y[i] = ys[i];
    for (int j = 0; j < d; ++j) data.X(i, j) = xs[i][j];
  }
  data.validate();
  return data;
}

namespace {
json sparse_triplets(const MatrixXd& m, double drop_below) {
  json arr = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) >= drop_below) arr.push_back({i, j, m(i, j)});
  return arr;
}
}  // namespace

std::string truth_to_json(const SimOutput& sim, const SimConfig& cfg) {
  json j;
  j["beta0"] = std::vector<double>(sim.beta0.data(), sim.beta0.data() + sim.beta0.size());
  j["sigma"] = cfg.sigma;
  j["s0"] = cfg.s0;
  j["family"] = cfg.family.is_gaussian() ? "gaussian" : "ald";
  if (!cfg.family.is_gaussian()) j["tau"] = cfg.family.tau;
  j["duplicate_first"] = cfg.duplicate_first;
  j["pi0"] = sim.pi0.sigma;
  j["pi0_target"] = sparse_triplets(sim.pi0_target, 1e-12);
  j["displaced"] = sim.pi0.displaced();
  return j.dump(2) + "\n";
}

std::string draws_beta_csv(const Draws& draws) {
  const int d = static_cast<int>(draws.beta_trace.front().size());
  std::string out;
  for (int j = 1; j <= d; ++j) out += (j > 1 ? "," : "") + ("beta" + std::to_string(j));
  out += "\n";
  for (const auto& b : draws.beta_trace) {
    for (int j = 0; j < d; ++j) out += (j > 0 ? "," : "") + fmt_double(b[j]);
    out += "\n";
  }
  return out;
}

std::string draws_sigma2_csv(const Draws& draws) {
  std::string out = "sigma2\n";
  for (double v : draws.sigma2_trace) out += fmt_double(v) + "\n";
  return out;
}

std::string draws_perm_jsonl(const Draws& draws) {
  std::string out;
  for (const auto& p : draws.perm_trace) {
    json j = p.sigma;
    out += j.dump() + "\n";
  }
  return out;
}

Draws draws_from_files(const std::string& dir) {
  Draws draws;
  {
    std::stringstream ss(read_text_file(dir + "/draws_beta.csv"));
    std::string line;
    std::getline(ss, line);  // header
    const int d = static_cast<int>(split(line, ',').size());
    while (std::getline(ss, line)) {
      if (trim(line).empty()) continue;
      const auto parts = split(line, ',');
      if (static_cast<int>(parts.size()) != d) throw IoError("ragged draws_beta.csv row");
      VectorXd b(d);
      for (int j = 0; j < d; ++j) b[j] = parse_double(parts[j], "beta draw");
      draws.beta_trace.push_back(std::move(b));
    }
  }
  {
    std::stringstream ss(read_text_file(dir + "/draws_sigma2.csv"));
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line))
      if (!trim(line).empty()) draws.sigma2_trace.push_back(parse_double(line, "sigma2 draw"));
  }
  {
    std::stringstream ss(read_text_file(dir + "/draws_perm.jsonl"));
    std::string line;
    while (std::getline(ss, line)) {
      if (trim(line).empty()) continue;
      const json j = json::parse(line);
      PermutationMap p;
      p.sigma = j.get<std::vector<int>>();
      if (!p.is_valid()) throw IoError("invalid permutation in draws_perm.jsonl");
      draws.perm_trace.push_back(std::move(p));
    }
  }
  if (draws.beta_trace.empty() || draws.beta_trace.size() != draws.sigma2_trace.size() ||
      draws.beta_trace.size() != draws.perm_trace.size())
    throw IoError("draw files are empty or misaligned");
  return draws;
}

std::string summary_to_json(const PosteriorSummary& s, int n) {
  json j;
  const int d = static_cast<int>(s.beta_mean.size());
  j["beta_mean"] = std::vector<double>(s.beta_mean.data(), s.beta_mean.data() + d);
  j["beta_ci_lower"] =
      std::vector<double>(s.beta_ci_lower.data(), s.beta_ci_lower.data() + d);
  j["beta_ci_upper"] =
      std::vector<double>(s.beta_ci_upper.data(), s.beta_ci_upper.data() + d);
  j["sigma2_mean"] = s.sigma2_mean;
  j["n"] = n;
  j["pi_mean"] = sparse_triplets(s.pi_mean, 1e-12);
  if (s.mean_abs_beta_error) j["mean_abs_beta_error"] = *s.mean_abs_beta_error;
  if (s.entrywise_l1_pi) j["entrywise_l1_pi"] = *s.entrywise_l1_pi;
  if (s.entrywise_l1_pi_norm) j["entrywise_l1_pi_norm"] = *s.entrywise_l1_pi_norm;
  if (s.entrywise_l1_pi_blended) j["entrywise_l1_pi_blended"] = *s.entrywise_l1_pi_blended;
  return j.dump(2) + "\n";
}

std::string benchmark_table_csv(const BenchmarkResult& r) {
  std::string out = "n,alpha,beta_l1,pi_l1_raw,pi_l1_norm,sec_per_iter,replicates,error\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.n) + "," + fmt_double(row.alpha) + "," +
           fmt_double(row.mean_abs_beta_error) + "," + fmt_double(row.entrywise_l1_pi) + "," +
           fmt_double(row.entrywise_l1_pi_norm) + "," + fmt_double(row.sec_per_iter) + "," +
           std::to_string(row.replicates) + "," + row.error + "\n";
  }
  return out;
}

std::string benchmark_timing_csv(const BenchmarkResult& r) {
  std::string out = "n,alpha,replicate,sec_per_iter\n";
  for (const auto& t : r.timings)
    out += std::to_string(t.n) + "," + fmt_double(t.alpha) + "," +
           std::to_string(t.replicate) + "," + fmt_double(t.sec_per_iter) + "\n";
  return out;
}

Histogram freedman_diaconis_histogram(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("histogram of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  const double lo = values.front(), hi = values.back();

  auto quant = [&](double p) {
    const double pos = p * double(m - 1);
    const std::size_t i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t k = std::min(i + 1, m - 1);
    const double frac = pos - double(i);
    return values[i] * (1.0 - frac) + values[k] * frac;
  };
  const double iqr = quant(0.75) - quant(0.25);
  const double width = 2.0 * iqr / std::cbrt(double(m));

  Histogram h;
  if (hi <= lo || width <= 0.0) {
    h.bin_left = {lo};
    h.bin_right = {hi > lo ? hi : lo + 1.0};
    h.count = {static_cast<long>(m)};
    return h;
  }
  const int bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  h.bin_left.resize(bins);
  h.bin_right.resize(bins);
  h.count.assign(bins, 0);
  const double step = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    h.bin_left[b] = lo + b * step;
    h.bin_right[b] = lo + (b + 1) * step;
  }
  for (double v : values) {
    int b = static_cast<int>((v - lo) / step);
    if (b >= bins) b = bins - 1;
    ++h.count[b];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < h.count.size(); ++b)
    out += fmt_double(h.bin_left[b]) + "," + fmt_double(h.bin_right[b]) + "," +
           std::to_string(h.count[b]) + "\n";
  return out;
}

std::string render_summary_text(const PosteriorSummary& s) {
  std::stringstream out;
  out << "posterior summary\n";
  out << "  coord        mean          2.5%         97.5%\n";
  char buf[160];
  for (int j = 0; j < s.beta_mean.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "  beta%-3d %12.6f  %12.6f  %12.6f\n", j + 1,
                  s.beta_mean[j], s.beta_ci_lower[j], s.beta_ci_upper[j]);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "  sigma2  %12.6f\n", s.sigma2_mean);
  out << buf;
  double diag = 0.0;
  for (int i = 0; i < s.pi_mean.rows(); ++i) diag += s.pi_mean(i, i);
  std::snprintf(buf, sizeof(buf), "  pi_mean diagonal mass %.6f over n=%ld\n",
                diag / double(s.pi_mean.rows()), long(s.pi_mean.rows()));
  out << buf;
  if (s.mean_abs_beta_error) {
    std::snprintf(buf, sizeof(buf), "  mean |beta - beta0| = %.6g\n", *s.mean_abs_beta_error);
    out << buf;
  }
  if (s.entrywise_l1_pi) {
    std::snprintf(buf, sizeof(buf), "  entrywise L1 (pi_mean vs Pi0) = %.6g (norm %.6g)\n",
                  *s.entrywise_l1_pi, *s.entrywise_l1_pi_norm);
    out << buf;
  }
  return out.str();
}

}  // namespace permreg::io
