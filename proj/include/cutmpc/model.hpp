#pragma once

#include "cutmpc/common.hpp"
#include "cutmpc/dataset.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace cutmpc::net {

/// Layer widths. The dense stack is six layers: two encoder layers applied
/// per timestep with shared weights (in_ch -> enc_hidden -> latent), one layer
/// on the flattened current block, one on the flattened control-force block,
/// and two output layers on the concatenation [rnn, state, input]. The
/// recurrent core is two tanh layers of rnn_units each. The final output layer
/// is linear; every other layer ends in tanh.
struct Dims {
  int M = 10;
  int in_ch = 4;
  int enc_hidden = 32;
  int latent = 3;
  int rnn_units = 30;
  int state_hidden = 32;
  int input_hidden = 32;
  int out_hidden = 32;

  int x_flat() const { return M * in_ch; }
  int v_flat() const { return M * 2; }
  int z_flat() const { return M * latent; }
  int concat_width() const { return rnn_units + state_hidden + input_hidden; }
  int out_flat() const { return M * 2; }
  bool operator==(const Dims&) const = default;
};

enum class Stage { autoencoder, single_step, multi_step };
std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

struct NetworkParams {
  Dims dims;
  Stage stage = Stage::autoencoder;

  Eigen::MatrixXd W_en1, W_en2;        // per-timestep encoder
  Eigen::VectorXd b_en1, b_en2;
  Eigen::MatrixXd W_state, W_input;    // current-state / control-input branches
  Eigen::VectorXd b_state, b_input;
  Eigen::MatrixXd W_out1, W_out2;      // output head
  Eigen::VectorXd b_out1, b_out2;
  Eigen::MatrixXd W1x, W1h, W2x, W2h;  // recurrent core
  Eigen::VectorXd b1, b2;
};

/// Visit every trainable tensor in canonical order (defines the flattening,
/// serialization, and checksum order).
void visit_tensors(NetworkParams& p,
                   const std::function<void(const char*, double*, long)>& f);
void visit_tensors(const NetworkParams& p,
                   const std::function<void(const char*, const double*, long)>& f);

long param_count(const NetworkParams& p);

/// Fresh parameters: weights uniform in +-1/sqrt(fan_in), biases zero, seeded.
NetworkParams init_params(const Dims& dims, std::uint64_t seed);
NetworkParams zeros_like(const NetworkParams& p);

/// Hidden activations of both recurrent layers; zero at sequence start.
struct LatentState {
  Eigen::VectorXd h1, h2;

  explicit LatentState(const Dims& d)
      : h1(Eigen::VectorXd::Zero(d.rnn_units)), h2(Eigen::VectorXd::Zero(d.rnn_units)) {}
  void reset() {
    h1.setZero();
    h2.setZero();
  }
};

/// Intermediate activations of one block pass, kept for the backward pass.
struct BlockCache {
  Eigen::MatrixXd x, v;          // inputs (M x 4, M x 2), normalized
  Eigen::VectorXd xf, vf;        // flattened inputs
  Eigen::MatrixXd a, z;          // encoder activations, columns are timesteps
  Eigen::VectorXd z_flat;
  Eigen::VectorXd h1_prev, h2_prev, h1, h2;
  Eigen::VectorXd s, g, o, yhat;
};

struct ForwardResult {
  Eigen::MatrixXd pred;  // M x 2 predicted relative positions, normalized
  LatentState latent;
};

/// One block-granular application of the learned dynamics. Pure; inputs must
/// be normalized with the training statistics. Throws NumericFault if the
/// output is not finite.
ForwardResult forward_block(const NetworkParams& p, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& v, const LatentState& latent);

/// forward_block that also fills the cache used by backward_block.
ForwardResult forward_block_cached(const NetworkParams& p, const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& v, const LatentState& latent,
                                   BlockCache& cache);

/// Multi-block prediction: block i's position input is the prediction for
/// block i-1; the force part of every future input block and the control-force
/// channel come from future_v. future_v[i] carries the forces of the i-th
/// predicted block.
std::vector<Eigen::MatrixXd> rollout(const NetworkParams& p, const Eigen::MatrixXd& x,
                                     const std::vector<Eigen::MatrixXd>& future_v,
                                     const LatentState& latent);

/// Reverse pass of one cached block. dyhat is the loss gradient on the flat
/// output. dh1/dh2 enter holding the gradient w.r.t. this block's output
/// latent (zero when none) and leave holding the gradient w.r.t. the input
/// latent. dx receives the gradient w.r.t. the x input. Parameter gradients
/// accumulate into g.
void backward_block(const NetworkParams& p, const BlockCache& c, const Eigen::VectorXd& dyhat,
                    Eigen::VectorXd& dh1, Eigen::VectorXd& dh2, Eigen::MatrixXd& dx,
                    NetworkParams& g);

/// Versioned JSON model file: dims, stage tag, weights, normalization
/// statistics, checksum over the weight bytes. load(save(x)) is bit-identical.
void save_model(const NetworkParams& p, const data::NormStats& stats, const std::string& path);
std::pair<NetworkParams, data::NormStats> load_model(const std::string& path);

}  // namespace cutmpc::net
