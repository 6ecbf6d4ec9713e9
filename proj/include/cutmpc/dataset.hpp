#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/controller.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

namespace cutmpc::data {

// Channel layout of a block row: relative positions then sensed forces.
inline constexpr int kChanRelY = 0;
inline constexpr int kChanRelZ = 1;
inline constexpr int kChanFy = 2;
inline constexpr int kChanFz = 3;

/// One M-timestep training sample.
///
/// Block b covers log samples [bM, (b+1)M-1]. Its relative positions are the
/// absolute positions minus the last absolute position of block b-1 (block 0
/// subtracts the trial's first logged position). `v` carries the forces of
/// block b+1 (the block being predicted) and `target` that block's relative
/// positions.
struct Block {
  Eigen::MatrixXd x;       // M x 4: rel_y, rel_z, F_y, F_z
  Eigen::MatrixXd v;       // M x 2: control-force channel
  Eigen::MatrixXd target;  // M x 2: next block's relative positions
  int block_index = 0;
};

/// Per-channel normalization over the 4 x channels. Force channels double as
/// the v-channel statistics, position channels as the target statistics.
struct NormStats {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d std = Eigen::Vector4d::Ones();
  std::array<bool, 4> degenerate = {false, false, false, false};
  std::string computed_over;
};

/// Cut a trial log into blocks with targets; yields floor(len/M) - 1 blocks,
/// trailing remainder dropped. Throws DataError when the log is shorter
/// than 2M.
std::vector<Block> blockify(const ctl::TrialLog& log, int M);

/// Population (divide by N) statistics over every timestep of every block.
NormStats fit_norm_stats(const std::vector<std::vector<Block>>& trials, const std::string& id);

Block apply_norm(const Block& b, const NormStats& s);
Block invert_norm(const Block& b, const NormStats& s);

struct TrialEntry {
  std::string file;      // path relative to the manifest
  std::string material;
  int samples = 0;
};

struct DatasetManifest {
  int schema_version = 1;
  int M = 10;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  std::vector<TrialEntry> trials;
  std::vector<int> train_trials;  // indices into `trials`
  std::vector<int> val_trials;
  std::vector<std::string> held_out_materials;
  NormStats stats;
};

/// Deterministic trial-granularity split; never divides one trial across the
/// two sides. Throws DataError with fewer than 2 trials.
void split(DatasetManifest& m, std::uint64_t seed);

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

/// Blockified trials of one manifest side, in manifest order.
std::vector<std::vector<Block>> load_blocks(const DatasetManifest& m, const std::string& dir,
                                            const std::vector<int>& trial_indices);

}  // namespace cutmpc::data
