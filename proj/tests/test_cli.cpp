#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cutmpc/cli.hpp"
#include "cutmpc/model.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cutmpc;
using namespace cutmpc::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.seed = 5;
  cfg.trials_per_material = 3;
  cfg.train_materials = {"cake", "cucumber"};
  cfg.duration_min = 2.0;
  cfg.duration_max = 2.5;
  cfg.trial_extra_s = 0.5;
  cfg.stage1_epochs = 2;
  cfg.stage2_epochs = 2;
  cfg.stage3_epochs = 2;
  cfg.eval_n = 1;
  cfg.eval_materials = {"cake"};
  cfg.candidates = 16;
  cfg.timeout_s = 15.0;
  return cfg;
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(CUTMPC_BIN) + " " + args).c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config file parsing, overrides and unknown-key rejection") {
  const std::string path = "test_config.ini";
  {
    std::ofstream out(path);
    out << "# comment\n"
        << "[run]\n"
        << "seed = 42\n"
        << "[mpc]\n"
        << "candidates = 99\n"
        << "c_cut = 12.5\n"
        << "[collect]\n"
        << "train_materials = cake, lemon\n";
  }
  RunConfig cfg = load_config(path);
  CHECK(cfg.seed == 42);
  CHECK(cfg.candidates == 99);
  CHECK(cfg.c_cut == 12.5);
  CHECK(cfg.train_materials == std::vector<std::string>{"cake", "lemon"});
  CHECK(cfg.force_amp == 8.0);  // untouched default

  apply_override(cfg, "mpc.force_amp=6");
  CHECK(cfg.force_amp == 6.0);
  CHECK_THROWS_AS(apply_override(cfg, "mpc.bogus=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "nonsense"), ConfigError);

  {
    std::ofstream out(path);
    out << "[mpc]\nwrong_key = 3\n";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  {
    std::ofstream out(path);
    out << "[mpc]\ncandidates = not_a_number\n";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_config("missing_config.ini"), ConfigError);
}

TEST_CASE("serialize -> load round trip preserves every key") {
  RunConfig cfg = tiny_config();
  cfg.c_v = 0.125;
  cfg.held_out = {"carrot"};
  const std::string path = "test_config_rt.ini";
  write_config(cfg, path);
  const RunConfig back = load_config(path);
  CHECK(serialize_config(back) == serialize_config(cfg));
  std::remove(path.c_str());
}

TEST_CASE("config validation catches bad setups") {
  RunConfig cfg = tiny_config();
  cfg.train_materials = {"cake", "carrot"};  // held-out leak
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.train_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("collect writes a hygienic manifest and is idempotent") {
  const std::string out = "test_cli_out";
  fs::remove_all(out);
  RunConfig cfg = tiny_config();
  cmd_collect(cfg, out);

  const auto manifest = data::read_manifest(out + "/dataset/manifest.json");
  CHECK(manifest.trials.size() == 6);
  for (const auto& t : manifest.trials) {
    CHECK(t.material != "potato");
    CHECK(t.material != "carrot");
    CHECK(fs::exists(out + "/dataset/" + t.file));
  }
  CHECK(fs::exists(out + "/config.ini"));

  const std::string manifest_bytes = slurp(out + "/dataset/manifest.json");
  const std::string trial_bytes = slurp(out + "/dataset/" + manifest.trials[0].file);
  cmd_collect(cfg, out);  // same seed: identical files
  CHECK(slurp(out + "/dataset/manifest.json") == manifest_bytes);
  CHECK(slurp(out + "/dataset/" + manifest.trials[0].file) == trial_bytes);

  fs::remove_all(out);
}

TEST_CASE("train emits stage checkpoints with correct tags and gates stages") {
  const std::string out = "test_cli_train";
  fs::remove_all(out);
  RunConfig cfg = tiny_config();
  cmd_collect(cfg, out);

  CHECK_THROWS_AS(cmd_train(cfg, out, 2), DataError);  // no stage-1 checkpoint yet

  cmd_train(cfg, out, 0);
  CHECK(net::load_model(out + "/model_stage1.json").first.stage == net::Stage::autoencoder);
  CHECK(net::load_model(out + "/model_stage2.json").first.stage == net::Stage::single_step);
  CHECK(net::load_model(out + "/model_stage3.json").first.stage == net::Stage::multi_step);

  // metrics.csv holds one row per epoch per stage.
  std::ifstream in(out + "/metrics.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,stage,train_loss,val_loss");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == cfg.stage1_epochs + cfg.stage2_epochs + cfg.stage3_epochs);

  // Single-stage rerun only needs the previous checkpoint.
  cmd_train(cfg, out, 3);
  CHECK(fs::exists(out + "/model_stage3.json"));

  fs::remove_all(out);
}

TEST_CASE("run requires a deployable model and validates the material") {
  const std::string out = "test_cli_run";
  fs::remove_all(out);
  RunConfig cfg = tiny_config();
  CHECK_THROWS_AS(cmd_run(cfg, out, "cake"), DataError);  // no model

  fs::create_directories(out);
  {
    auto params = net::init_params(net::Dims{}, 1);
    params.stage = net::Stage::single_step;  // not deployable
    data::NormStats stats;
    net::save_model(params, stats, out + "/model_stage3.json");
  }
  CHECK_THROWS_AS(cmd_run(cfg, out, "cake"), DataError);  // stage gate

  {
    auto params = net::init_params(net::Dims{}, 1);
    params.stage = net::Stage::multi_step;
    data::NormStats stats;
    stats.std << 1e-3, 1e-3, 1.0, 1.0;  // position scale so the random net moves gently
    net::save_model(params, stats, out + "/model_stage3.json");
  }
  CHECK_THROWS_AS(cmd_run(cfg, out, "granite"), ConfigError);  // names the presets
  cfg.timeout_s = 3.0;
  cfg.candidates = 8;
  cmd_run(cfg, out, "cake");
  CHECK(fs::exists(out + "/run_cake.csv"));
  fs::remove_all(out);
}

TEST_CASE("binary exit codes: 2 config, 3 data, 0 success") {
  const std::string out = "test_cli_exit";
  fs::remove_all(out);
  CHECK(run_binary("--help > /dev/null 2>&1") == 0);
  CHECK(run_binary("bogus-subcommand > /dev/null 2>&1") == 2);
  CHECK(run_binary("collect --out " + out + " collect.trials_per_material=oops 2> /dev/null") ==
        2);
  CHECK(run_binary("train --out " + out + " 2> /dev/null") == 3);  // no dataset
  CHECK(run_binary("collect --out " + out +
                   " --seed 3 collect.trials_per_material=2"
                   " 'collect.train_materials=cake,cucumber' collect.duration_min=2"
                   " collect.duration_max=2.4 > /dev/null") == 0);
  CHECK(run_binary("run --material granite --out " + out + " 2> /dev/null") == 2);
  fs::remove_all(out);
}
