#pragma once

#include "cutmpc/dataset.hpp"
#include "cutmpc/model.hpp"

#include <string>
#include <vector>

namespace cutmpc::net {

struct TrainConfig {
  Stage stage = Stage::autoencoder;
  double lr = 1e-3;
  int epochs = 50;
  int minibatch = 32;
  int horizon_blocks = 5;  // H_b for the multi-step stage
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  double momentum = 0.9;
};

struct EpochMetrics {
  int epoch;
  Stage stage;
  double train_loss;
  double val_loss;
};

void append_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);

/// Normalized blocks, one inner vector per trial (block order preserved).
using BlockSet = std::vector<std::vector<data::Block>>;

/// Throwaway decoder used only while pretraining the encoder.
struct AutoencoderHead {
  Eigen::MatrixXd W_de1, W_de2;
  Eigen::VectorXd b_de1, b_de2;
};

// --- loss/gradient entry points (shared by the trainer and the gradient
// --- checks; every gradient here is hand-derived)

double autoencoder_loss(const NetworkParams& p, const AutoencoderHead& h,
                        const Eigen::MatrixXd& rows);
double autoencoder_grad(const NetworkParams& p, const AutoencoderHead& h,
                        const Eigen::MatrixXd& rows, NetworkParams& gp, AutoencoderHead& gh);

double single_step_loss(const NetworkParams& p, const data::Block& b, const LatentState& latent);
double single_step_grad(const NetworkParams& p, const data::Block& b, const LatentState& latent,
                        NetworkParams& g);

/// One multi-step training sample: rollout of `targets.size()` blocks starting
/// from x0 with the recorded future forces.
struct RolloutSample {
  Eigen::MatrixXd x0;
  std::vector<Eigen::MatrixXd> future_v;
  std::vector<Eigen::MatrixXd> targets;
  LatentState start;
};

double multi_step_loss(const NetworkParams& p, const RolloutSample& s);
double multi_step_grad(const NetworkParams& p, const RolloutSample& s, NetworkParams& g);

// --- evaluation

/// Per-entry MSE of single-block predictions with the latent threaded along
/// each trial, mirroring deployment.
double single_step_mse(const NetworkParams& p, const BlockSet& trials);

/// Per-entry MSE of H-block rollouts starting at every admissible block, with
/// the latent threaded along the trial and forked per rollout.
double multi_step_mse(const NetworkParams& p, const BlockSet& trials, int horizon_blocks);

/// Predicts every next block as the current block's relative positions; the
/// data-only baseline a learned model has to beat.
double persistence_mse(const BlockSet& trials);

// --- the three-stage curriculum

/// Stage 1: encoder pretraining on per-timestep reconstruction. Returns fresh
/// params (seeded from cfg.seed) whose encoder minimizes the reconstruction
/// error; the decoder is discarded.
NetworkParams stage1_autoencoder_train(const BlockSet& train, const BlockSet& val,
                                       const TrainConfig& cfg, const Dims& dims,
                                       std::vector<EpochMetrics>& metrics);

/// Stage 2: every dense layer trained on one-block prediction; the recurrent
/// tensors are left bit-identical.
NetworkParams stage2_single_step_train(const BlockSet& train, const BlockSet& val,
                                       const TrainConfig& cfg, NetworkParams params,
                                       std::vector<EpochMetrics>& metrics);

/// Stage 3: full network trained on unrolled multi-block rollouts
/// (backpropagation through time), gradients clipped at cfg.clip_norm.
NetworkParams stage3_multi_step_train(const BlockSet& train, const BlockSet& val,
                                      const TrainConfig& cfg, NetworkParams params,
                                      std::vector<EpochMetrics>& metrics);

}  // namespace cutmpc::net
