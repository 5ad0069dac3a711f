#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xlalign/config.hpp"
#include "xlalign/eval.hpp"
#include "xlalign/objectives.hpp"

namespace xlalign {

enum class Stage {
  Train,  // final model on the largest split, checkpoints, dumps, neighbours
  Curve,  // accuracy vs. split size only
  Cldc,   // final model plus document classification
  Full,   // everything
};

struct RunResult {
  std::vector<eval::CurvePoint> curve;
  std::vector<eval::CLDCReport> cldc;
  std::vector<objectives::TraceRecord> trace;
  std::vector<std::string> files;  // relative to out_dir, manifest last
  std::filesystem::path out_dir;
};

/// Executes train -> align -> evaluate for cfg.framework. Outputs are written
/// under cfg.out_dir (resolved against cfg.base_dir when relative). `log`
/// receives progress lines when non-null.
RunResult run_experiment(const ExperimentConfig& cfg, Stage stage, std::ostream* log = nullptr);

// Exit status for the in-flight exception (call inside a catch block): 1 for
// validation errors, 2 for runtime and numeric failures. Prints the message.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace xlalign
