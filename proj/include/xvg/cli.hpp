#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "xvg/fusion.hpp"

namespace xvg::cli {

// Subcommands: prepare | synthesize-weather | generate-captions | train |
// evaluate | ablate | report. Every command accepts --config <file> and any
// number of --set key=value overrides. Failures print one line
//   error: <kind>: <message>
// to the error stream, kind ∈ {argument, structural, training, protocol,
// internal}, and return a nonzero exit code.

enum ExitCode : int { ok = 0, internal = 1, argument = 2, structural = 3, training = 4, protocol = 5 };

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

struct AblationCell {
  std::string id;      // directory name, e.g. "static-cot6"
  std::string sweep;   // "fusion" or "cot"
  std::string label;   // table row label
  fusion::Mode mode = fusion::Mode::dynamic;
  int cot_steps = 6;
};

/// Fusion rows (concat, static, dynamic at 6 CoT steps) then CoT rows
/// (NAN, 0, 2, 4, 6 with the dynamic gate). The shared dynamic/6 cell is
/// trained once and appears in both tables.
const std::vector<AblationCell>& ablation_cells();

}  // namespace xvg::cli
