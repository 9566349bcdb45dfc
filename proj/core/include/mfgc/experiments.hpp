#pragma once

#include "mfgc/config.hpp"

namespace mfgc {

// Runs the configured experiment, writing CSV/SVG/JSON artifacts under
// cfg.out_dir. Returns 0 when every acceptance band passed and 2 when at
// least one failed; execution errors propagate as exceptions (the CLI maps
// them to exit code 1).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace mfgc
