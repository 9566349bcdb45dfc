#include "mfgc/config.hpp"

#include "mfgc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mfgc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "config line " << line << ": " << what;
  throw ConfigError(msg.str());
}

double parse_number(int line, const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) fail(line, "trailing characters in value of " + key);
    return v;
  } catch (const std::exception&) {
    fail(line, "expected a number for " + key + ", got '" + value + "'");
  }
}

long long parse_int(int line, const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) fail(line, "trailing characters in value of " + key);
    return v;
  } catch (const std::exception&) {
    fail(line, "expected an integer for " + key + ", got '" + value + "'");
  }
}

std::vector<int> parse_int_list(int line, const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(line, "empty entry in list " + key);
    out.push_back(static_cast<int>(parse_int(line, key, item)));
  }
  if (out.empty()) fail(line, "empty list for " + key);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  static const char* kExperiments[] = {"fixedpoint-decay", "monotonicity-audit",
                                       "nash-solve",       "sde-norms",
                                       "master-residual",  "convergence",
                                       "mfg-picard"};
  bool known = false;
  for (const char* e : kExperiments)
    if (experiment == e) known = true;
  if (!known) throw ConfigError("unknown experiment: '" + experiment + "'");
  if (model_family != "lq" && model_family != "lq-tanh")
    throw ConfigError("unknown model family: '" + model_family + "'");
  if (!seed_present) throw ConfigError("config must set a seed");
  if (tol <= 0 || picard_tol <= 0) throw ConfigError("tolerances must be positive");
  if (n_list.empty()) throw ConfigError("N_list must be nonempty");
  if (!std::is_sorted(n_list.begin(), n_list.end()) ||
      std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
    throw ConfigError("N_list must be strictly ascending");
  for (int n : n_list)
    if (n < 2) throw ConfigError("N_list entries must be >= 2");
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (dim < 1 || dim > 3) throw ConfigError("dim must be 1..3");
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  ExperimentConfig cfg;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (value.empty()) fail(line_no, "empty value for " + key);

    if (key == "experiment") cfg.experiment = value;
    else if (key == "model") cfg.model_family = value;
    else if (key == "lambda") cfg.spec.lambda = parse_number(line_no, key, value);
    else if (key == "c_x") cfg.spec.c_x = parse_number(line_no, key, value);
    else if (key == "q_x") cfg.spec.q_x = parse_number(line_no, key, value);
    else if (key == "c_g") cfg.spec.c_g = parse_number(line_no, key, value);
    else if (key == "q_g") cfg.spec.q_g = parse_number(line_no, key, value);
    else if (key == "eps") cfg.eps = parse_number(line_no, key, value);
    else if (key == "sigma0") cfg.sigma0 = parse_number(line_no, key, value);
    else if (key == "horizon") cfg.horizon = parse_number(line_no, key, value);
    else if (key == "dim") cfg.dim = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "N_list") cfg.n_list = parse_int_list(line_no, key, value);
    else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(line_no, key, value));
      cfg.seed_present = true;
    } else if (key == "tol") cfg.tol = parse_number(line_no, key, value);
    else if (key == "grid_radius") cfg.grid_radius = parse_number(line_no, key, value);
    else if (key == "grid_points")
      cfg.grid_points = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "mfg_radius") cfg.mfg_radius = parse_number(line_no, key, value);
    else if (key == "mfg_points")
      cfg.mfg_points = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "samples")
      cfg.samples = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "cloud_size")
      cfg.cloud_size = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "sample_scale") cfg.sample_scale = parse_number(line_no, key, value);
    else if (key == "probes") cfg.probes = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "n_paths")
      cfg.n_paths = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "sde_steps")
      cfg.sde_steps = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "quad_particles")
      cfg.quad_particles = static_cast<int>(parse_int(line_no, key, value));
    else if (key == "picard_tol") cfg.picard_tol = parse_number(line_no, key, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "workers")
      cfg.workers = static_cast<int>(parse_int(line_no, key, value));
    else fail(line_no, "unknown key '" + key + "'");
  }
  return cfg;
}

std::string config_schema() {
  return R"(# experiment config keys (flat key = value, '#' comments)
experiment     one of: fixedpoint-decay monotonicity-audit nash-solve
               sde-norms master-residual convergence mfg-picard
model          lq | lq-tanh
lambda c_x q_x c_g q_g   model coefficients (defaults 0)
eps            tanh coupling strength (lq-tanh only, default 0.1)
sigma0         common-noise intensity (default 0)
horizon        time horizon T (default 1)
dim            state dimension (default 1)
N_list         comma-separated ascending player counts (default 8,16,32,64)
seed           64-bit seed (required)
tol            fixed-point tolerance (default 1e-10)
grid_radius    tensor grid half-width (default 4)
grid_points    odd nodes per axis (default 33)
mfg_radius     1-d mean-field grid half-width (default 6)
mfg_points     1-d mean-field nodes (default 401)
samples        audit sample count (default 100)
cloud_size     audit cloud size (default 16)
sample_scale   Gaussian sampling scale (default 1)
probes         probe count for residual/convergence (default 20)
n_paths        simulated paths (default 10000)
sde_steps      Euler-Maruyama steps (default 200)
quad_particles quadrature particles for the mean-field flow (default 64)
picard_tol     mean-field flow tolerance (default 1e-4)
out_dir        output directory (default out)
workers        worker threads, 0 = hardware (default 0)
)";
}

}  // namespace mfgc
