#pragma once

#include <string>
#include <vector>

namespace mfgc {

// Renders decay / residual / convergence CSV tables as standalone SVG
// plots. kind selects the layout:
//   "decay"       log-log norm vs N, one file per player-index class
//   "residual"    median residual vs N, linear-log
//   "convergence" log-log error vs N with the fitted slope annotated
// Returns the emitted paths (decay can produce several). Throws UnknownKind
// for anything else and Error for an empty table.
std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& kind,
                                    const std::string& out_dir);

}  // namespace mfgc
