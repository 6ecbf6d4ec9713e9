#pragma once

#include "cutmpc/config.hpp"
#include "cutmpc/eval.hpp"

#include <string>

namespace cutmpc::cli {

/// Seeded trials over the training materials with randomized gains and
/// trajectories; writes trial CSVs and the manifest under <out>/dataset.
void cmd_collect(const RunConfig& cfg, const std::string& out_dir);

/// Runs the training curriculum on <out>/dataset. stage 0 runs 1 -> 2 -> 3;
/// stages 2 and 3 alone require the previous stage's checkpoint file.
void cmd_train(const RunConfig& cfg, const std::string& out_dir, int stage = 0);

/// One online episode on `material`; writes <out>/run_<material>.csv and
/// prints a summary line.
void cmd_run(const RunConfig& cfg, const std::string& out_dir, const std::string& material);

/// Comparison protocol plus the force-critical scenario; writes <out>/report.
void cmd_eval(const RunConfig& cfg, const std::string& out_dir);

/// Context shared by cmd_run/cmd_eval: model, stats, plant and controller
/// wiring from the config.
eval::EvalContext make_eval_context(const RunConfig& cfg, const std::string& model_path,
                                    const std::string& manifest_path);

}  // namespace cutmpc::cli
