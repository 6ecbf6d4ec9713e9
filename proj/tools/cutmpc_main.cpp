#include "cutmpc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric fault.
int run(int argc, char** argv) {
  CLI::App app{"simulated food-cutting stack: synthetic contact plant, admittance "
               "data collection, learned block dynamics, shooting MPC"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", material;
  std::vector<std::string> overrides;
  std::vector<std::string> eval_materials;
  std::int64_t seed = -1;
  int stage = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (sectioned key=value)");
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--seed", seed, "override the global seed");
    sub->add_option("overrides", overrides, "section.key=value overrides");
  };

  auto* collect = app.add_subcommand("collect", "generate the training dataset");
  add_common(collect);
  auto* train = app.add_subcommand("train", "run the training curriculum");
  add_common(train);
  train->add_option("--stage", stage, "run a single stage (1..3) instead of all");
  auto* run_cmd = app.add_subcommand("run", "one online episode on a material");
  add_common(run_cmd);
  run_cmd->add_option("--material", material, "material preset")->required();
  auto* eval_cmd = app.add_subcommand("eval", "comparison protocol and report");
  add_common(eval_cmd);
  eval_cmd->add_option("--materials", eval_materials,
                       "restrict the comparison to these materials")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    cutmpc::cli::RunConfig cfg;
    if (!config_path.empty()) cfg = cutmpc::cli::load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    for (const auto& o : overrides) cutmpc::cli::apply_override(cfg, o);
    if (!eval_materials.empty()) cfg.eval_materials = eval_materials;

    if (collect->parsed()) cutmpc::cli::cmd_collect(cfg, out_dir);
    if (train->parsed()) cutmpc::cli::cmd_train(cfg, out_dir, stage);
    if (run_cmd->parsed()) cutmpc::cli::cmd_run(cfg, out_dir, material);
    if (eval_cmd->parsed()) cutmpc::cli::cmd_eval(cfg, out_dir);
    return 0;
  } catch (const cutmpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const cutmpc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const cutmpc::NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
