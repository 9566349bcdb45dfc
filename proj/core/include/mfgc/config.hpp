#pragma once

#include "mfgc/lq.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mfgc {

// Declarative experiment description parsed from a flat key = value file
// (# comments allowed). Unknown keys and malformed values raise ConfigError
// with the offending line.
struct ExperimentConfig {
  std::string experiment;  // fixedpoint-decay | monotonicity-audit | nash-solve |
                           // sde-norms | master-residual | convergence | mfg-picard
  std::string model_family = "lq";
  LqSpec spec;
  double eps = 0.1;
  double sigma0 = 0.0;
  double horizon = 1.0;
  int dim = 1;

  std::vector<int> n_list{8, 16, 32, 64};
  std::uint64_t seed = 0;
  bool seed_present = false;

  double tol = 1e-10;
  double grid_radius = 4.0;
  int grid_points = 33;
  double mfg_radius = 6.0;
  int mfg_points = 401;
  int samples = 100;
  int cloud_size = 16;
  double sample_scale = 1.0;
  int probes = 20;
  int n_paths = 10000;
  int sde_steps = 200;
  int quad_particles = 64;
  double picard_tol = 1e-4;

  std::string out_dir = "out";
  int workers = 0;

  void validate() const;  // throws ConfigError on broken invariants
};

ExperimentConfig parse_config(const std::string& path);

// Key-value documentation string for the README / --help output.
std::string config_schema();

}  // namespace mfgc
