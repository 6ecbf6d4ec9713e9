#include "cutmpc/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace cutmpc::net {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void append_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  const bool fresh = !std::ifstream(path).good();
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot write metrics csv: " + path);
  if (fresh) out << "epoch,stage,train_loss,val_loss\n";
  for (const auto& m : metrics)
    out << m.epoch << ',' << stage_name(m.stage) << ',' << fmt_g(m.train_loss) << ','
        << fmt_g(m.val_loss) << '\n';
}

namespace {

double tensor_sq_norm(const NetworkParams& g) {
  double s = 0.0;
  visit_tensors(g, [&](const char*, const double* d, long n) {
    for (long i = 0; i < n; ++i) s += d[i] * d[i];
  });
  return s;
}

void scale_tensors(NetworkParams& g, double f) {
  visit_tensors(g, [&](const char*, double* d, long n) {
    for (long i = 0; i < n; ++i) d[i] *= f;
  });
}

void axpy_tensors(NetworkParams& dst, const NetworkParams& src, double f) {
  std::vector<std::pair<double*, long>> d;
  visit_tensors(dst, [&](const char*, double* p, long n) { d.emplace_back(p, n); });
  std::size_t i = 0;
  visit_tensors(src, [&](const char*, const double* p, long n) {
    for (long k = 0; k < n; ++k) d[i].first[k] += f * p[k];
    ++i;
  });
}

void zero_rnn(NetworkParams& g) {
  g.W1x.setZero();
  g.W1h.setZero();
  g.b1.setZero();
  g.W2x.setZero();
  g.W2h.setZero();
  g.b2.setZero();
}

/// SGD with momentum and global-norm clipping over the whole gradient.
struct Optimizer {
  NetworkParams vel;
  explicit Optimizer(const NetworkParams& p) : vel(zeros_like(p)) {}

  void step(NetworkParams& p, NetworkParams& grad, const TrainConfig& cfg) {
    const double norm = std::sqrt(tensor_sq_norm(grad));
    if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) scale_tensors(grad, cfg.clip_norm / norm);
    scale_tensors(vel, cfg.momentum);
    axpy_tensors(vel, grad, -cfg.lr);
    axpy_tensors(p, vel, 1.0);
  }
};

void dump_divergence(const NetworkParams& p, const std::string& tag) {
  data::NormStats dummy;
  dummy.computed_over = "divergence snapshot";
  save_model(p, dummy, "cutmpc_diverged_" + tag + ".json");
}

/// Guards against runaway loss: more than 10x the pre-training loss for three
/// consecutive epochs aborts with a parameter snapshot.
struct DivergenceGuard {
  double initial;
  std::string tag;
  int streak = 0;

  void check(double loss, const NetworkParams& p) {
    if (!std::isfinite(loss)) {
      dump_divergence(p, tag);
      throw NumericFault("training loss is not finite (" + tag +
                         "); parameter snapshot dumped");
    }
    streak = loss > 10.0 * initial ? streak + 1 : 0;
    if (streak >= 3) {
      dump_divergence(p, tag);
      throw NumericFault("training diverged (" + tag + "): loss " + fmt_g(loss) +
                         " vs initial " + fmt_g(initial) + "; parameter snapshot dumped");
    }
  }
};

MatrixXd stack_rows(const BlockSet& trials) {
  long n = 0;
  for (const auto& t : trials)
    for (const auto& b : t) n += b.x.rows();
  if (n == 0) throw DataError("training set is empty");
  MatrixXd rows(n, 4);
  long r = 0;
  for (const auto& t : trials)
    for (const auto& b : t)
      for (int i = 0; i < b.x.rows(); ++i) rows.row(r++) = b.x.row(i);
  return rows;
}

std::vector<const data::Block*> flat_blocks(const BlockSet& trials) {
  std::vector<const data::Block*> out;
  for (const auto& t : trials)
    for (const auto& b : t) out.push_back(&b);
  return out;
}

VectorXd flatten_target(const MatrixXd& target) {
  VectorXd y(target.rows() * 2);
  for (int t = 0; t < target.rows(); ++t) y.segment(t * 2, 2) = target.row(t).transpose();
  return y;
}

}  // namespace

// --- autoencoder ------------------------------------------------------------

namespace {

struct AeCache {
  VectorXd x, a, z, dpost, xhat;
};

void ae_forward(const NetworkParams& p, const AutoencoderHead& h, const VectorXd& x, AeCache& c) {
  c.x = x;
  c.a = (p.W_en1 * x + p.b_en1).array().tanh();
  c.z = (p.W_en2 * c.a + p.b_en2).array().tanh();
  c.dpost = (h.W_de1 * c.z + h.b_de1).array().tanh();
  c.xhat = h.W_de2 * c.dpost + h.b_de2;
}

}  // namespace

double autoencoder_loss(const NetworkParams& p, const AutoencoderHead& h, const MatrixXd& rows) {
  AeCache c;
  double loss = 0.0;
  for (int i = 0; i < rows.rows(); ++i) {
    ae_forward(p, h, rows.row(i).transpose(), c);
    loss += (c.xhat - c.x).squaredNorm() / static_cast<double>(rows.cols());
  }
  return loss / static_cast<double>(rows.rows());
}

double autoencoder_grad(const NetworkParams& p, const AutoencoderHead& h, const MatrixXd& rows,
                        NetworkParams& gp, AutoencoderHead& gh) {
  AeCache c;
  double loss = 0.0;
  const double inv = 1.0 / (static_cast<double>(rows.rows()) * static_cast<double>(rows.cols()));
  for (int i = 0; i < rows.rows(); ++i) {
    ae_forward(p, h, rows.row(i).transpose(), c);
    const VectorXd err = c.xhat - c.x;
    loss += err.squaredNorm() * inv;

    const VectorXd dxhat = 2.0 * inv * err;
    gh.W_de2 += dxhat * c.dpost.transpose();
    gh.b_de2 += dxhat;
    VectorXd dd = h.W_de2.transpose() * dxhat;
    dd = dd.cwiseProduct(VectorXd::Ones(dd.size()) - c.dpost.cwiseProduct(c.dpost));
    gh.W_de1 += dd * c.z.transpose();
    gh.b_de1 += dd;
    VectorXd dz = h.W_de1.transpose() * dd;
    dz = dz.cwiseProduct(VectorXd::Ones(dz.size()) - c.z.cwiseProduct(c.z));
    gp.W_en2 += dz * c.a.transpose();
    gp.b_en2 += dz;
    VectorXd da = p.W_en2.transpose() * dz;
    da = da.cwiseProduct(VectorXd::Ones(da.size()) - c.a.cwiseProduct(c.a));
    gp.W_en1 += da * c.x.transpose();
    gp.b_en1 += da;
  }
  return loss;
}

// --- single step ------------------------------------------------------------

double single_step_loss(const NetworkParams& p, const data::Block& b, const LatentState& latent) {
  BlockCache c;
  forward_block_cached(p, b.x, b.v, latent, c);
  return (c.yhat - flatten_target(b.target)).squaredNorm() /
         static_cast<double>(c.yhat.size());
}

double single_step_grad(const NetworkParams& p, const data::Block& b, const LatentState& latent,
                        NetworkParams& g) {
  BlockCache c;
  forward_block_cached(p, b.x, b.v, latent, c);
  const VectorXd err = c.yhat - flatten_target(b.target);
  const double loss = err.squaredNorm() / static_cast<double>(c.yhat.size());
  const VectorXd dyhat = 2.0 / static_cast<double>(c.yhat.size()) * err;
  VectorXd dh1 = VectorXd::Zero(p.dims.rnn_units);
  VectorXd dh2 = VectorXd::Zero(p.dims.rnn_units);
  MatrixXd dx;
  backward_block(p, c, dyhat, dh1, dh2, dx, g);
  return loss;
}

// --- multi step (backpropagation through time) -------------------------------

double multi_step_loss(const NetworkParams& p, const RolloutSample& s) {
  const auto preds = rollout(p, s.x0, s.future_v, s.start);
  double loss = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    loss += (preds[i] - s.targets[i]).squaredNorm() / static_cast<double>(preds[i].size());
  return loss / static_cast<double>(preds.size());
}

double multi_step_grad(const NetworkParams& p, const RolloutSample& s, NetworkParams& g) {
  const int H = static_cast<int>(s.future_v.size());
  if (H < 1 || s.targets.size() != s.future_v.size())
    throw DataError("multi_step_grad: malformed rollout sample");
  const Dims& d = p.dims;

  std::vector<BlockCache> caches(H);
  LatentState h = s.start;
  MatrixXd xin = s.x0;
  double loss = 0.0;
  for (int i = 0; i < H; ++i) {
    auto r = forward_block_cached(p, xin, s.future_v[i], h, caches[i]);
    h = r.latent;
    loss += (r.pred - s.targets[i]).squaredNorm() / static_cast<double>(r.pred.size());
    if (i + 1 < H) {
      xin.leftCols(2) = r.pred;
      xin.rightCols(2) = s.future_v[i];
    }
  }
  loss /= H;

  const double scale = 2.0 / (static_cast<double>(d.out_flat()) * H);
  VectorXd dh1 = VectorXd::Zero(d.rnn_units);
  VectorXd dh2 = VectorXd::Zero(d.rnn_units);
  MatrixXd dx_next;  // gradient w.r.t. step i+1's x input
  for (int i = H - 1; i >= 0; --i) {
    VectorXd dyhat = scale * (caches[i].yhat - flatten_target(s.targets[i]));
    if (i + 1 < H) {
      // Predictions feed the next block's position channels.
      for (int t = 0; t < d.M; ++t)
        dyhat.segment(t * 2, 2) += dx_next.row(t).head(2).transpose();
    }
    MatrixXd dx;
    backward_block(p, caches[i], dyhat, dh1, dh2, dx, g);
    dx_next = dx;
  }
  return loss;
}

// --- evaluation ---------------------------------------------------------------

double single_step_mse(const NetworkParams& p, const BlockSet& trials) {
  double sq = 0.0;
  long n = 0;
  for (const auto& trial : trials) {
    LatentState h(p.dims);
    for (const auto& b : trial) {
      auto r = forward_block(p, b.x, b.v, h);
      sq += (r.pred - b.target).squaredNorm();
      n += b.target.size();
      h = r.latent;
    }
  }
  if (n == 0) throw DataError("single_step_mse: empty set");
  return sq / static_cast<double>(n);
}

double multi_step_mse(const NetworkParams& p, const BlockSet& trials, int horizon_blocks) {
  double sq = 0.0;
  long n = 0;
  for (const auto& trial : trials) {
    const int B = static_cast<int>(trial.size());
    LatentState h(p.dims);
    for (int j = 0; j + horizon_blocks <= B; ++j) {
      std::vector<MatrixXd> future_v;
      for (int i = 0; i < horizon_blocks; ++i) future_v.push_back(trial[j + i].v);
      const auto preds = rollout(p, trial[j].x, future_v, h);
      for (int i = 0; i < horizon_blocks; ++i) {
        sq += (preds[i] - trial[j + i].target).squaredNorm();
        n += trial[j + i].target.size();
      }
      h = forward_block(p, trial[j].x, trial[j].v, h).latent;
    }
  }
  if (n == 0) throw DataError("multi_step_mse: no admissible windows");
  return sq / static_cast<double>(n);
}

double persistence_mse(const BlockSet& trials) {
  double sq = 0.0;
  long n = 0;
  for (const auto& trial : trials) {
    for (const auto& b : trial) {
      sq += (b.target - b.x.leftCols(2)).squaredNorm();
      n += b.target.size();
    }
  }
  if (n == 0) throw DataError("persistence_mse: empty set");
  return sq / static_cast<double>(n);
}

// --- stage drivers ------------------------------------------------------------

NetworkParams stage1_autoencoder_train(const BlockSet& train, const BlockSet& val,
                                       const TrainConfig& cfg, const Dims& dims,
                                       std::vector<EpochMetrics>& metrics) {
  if (cfg.stage != Stage::autoencoder)
    throw ConfigError("stage1 called with wrong TrainConfig.stage");
  NetworkParams p = init_params(dims, cfg.seed);

  AutoencoderHead h;
  {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0xae));
    auto fill = [&rng](MatrixXd& w) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (long i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    };
    h.W_de1.setZero(dims.enc_hidden, dims.latent);
    h.W_de2.setZero(dims.in_ch, dims.enc_hidden);
    h.b_de1.setZero(dims.enc_hidden);
    h.b_de2.setZero(dims.in_ch);
    fill(h.W_de1);
    fill(h.W_de2);
  }

  const MatrixXd train_rows = stack_rows(train);
  const MatrixXd val_rows = stack_rows(val);

  Optimizer opt(p);
  AutoencoderHead hvel = h;
  hvel.W_de1.setZero();
  hvel.W_de2.setZero();
  hvel.b_de1.setZero();
  hvel.b_de2.setZero();

  DivergenceGuard guard{autoencoder_loss(p, h, train_rows), "stage1"};
  std::vector<long> idx(static_cast<std::size_t>(train_rows.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 shuffler(mix_seed(cfg.seed, 0x51));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), shuffler);
    double epoch_loss = 0.0;
    long batches = 0;
    for (std::size_t off = 0; off < idx.size(); off += cfg.minibatch) {
      const long bn = std::min<std::size_t>(cfg.minibatch, idx.size() - off);
      MatrixXd batch(bn, 4);
      for (long i = 0; i < bn; ++i) batch.row(i) = train_rows.row(idx[off + i]);
      NetworkParams gp = zeros_like(p);
      AutoencoderHead gh;
      gh.W_de1.setZero(dims.enc_hidden, dims.latent);
      gh.W_de2.setZero(dims.in_ch, dims.enc_hidden);
      gh.b_de1.setZero(dims.enc_hidden);
      gh.b_de2.setZero(dims.in_ch);
      epoch_loss += autoencoder_grad(p, h, batch, gp, gh);
      ++batches;

      // Momentum update; the head piggybacks on the same schedule. The clip
      // covers the encoder tensors, which are the ones that survive.
      const double norm = std::sqrt(tensor_sq_norm(gp));
      const double f = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;
      scale_tensors(opt.vel, cfg.momentum);
      axpy_tensors(opt.vel, gp, -cfg.lr * f);
      axpy_tensors(p, opt.vel, 1.0);
      hvel.W_de1 = cfg.momentum * hvel.W_de1 - cfg.lr * f * gh.W_de1;
      hvel.W_de2 = cfg.momentum * hvel.W_de2 - cfg.lr * f * gh.W_de2;
      hvel.b_de1 = cfg.momentum * hvel.b_de1 - cfg.lr * f * gh.b_de1;
      hvel.b_de2 = cfg.momentum * hvel.b_de2 - cfg.lr * f * gh.b_de2;
      h.W_de1 += hvel.W_de1;
      h.W_de2 += hvel.W_de2;
      h.b_de1 += hvel.b_de1;
      h.b_de2 += hvel.b_de2;
    }
    const double train_loss = epoch_loss / static_cast<double>(batches);
    guard.check(train_loss, p);
    metrics.push_back({epoch, Stage::autoencoder, train_loss, autoencoder_loss(p, h, val_rows)});
  }
  p.stage = Stage::autoencoder;
  return p;
}

NetworkParams stage2_single_step_train(const BlockSet& train, const BlockSet& val,
                                       const TrainConfig& cfg, NetworkParams p,
                                       std::vector<EpochMetrics>& metrics) {
  if (cfg.stage != Stage::single_step)
    throw ConfigError("stage2 called with wrong TrainConfig.stage");
  if (p.stage != Stage::autoencoder)
    throw ConfigError("stage2 requires a stage-1 (autoencoder) checkpoint, got " +
                      stage_name(p.stage));

  const auto samples = flat_blocks(train);
  const auto val_samples = flat_blocks(val);
  const LatentState zero(p.dims);

  auto set_loss = [&](const std::vector<const data::Block*>& set) {
    double l = 0.0;
    for (const auto* b : set) l += single_step_loss(p, *b, zero);
    return l / static_cast<double>(set.size());
  };

  Optimizer opt(p);
  DivergenceGuard guard{set_loss(samples), "stage2"};
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 shuffler(mix_seed(cfg.seed, 0x52));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), shuffler);
    double epoch_loss = 0.0;
    long batches = 0;
    for (std::size_t off = 0; off < idx.size(); off += cfg.minibatch) {
      const std::size_t bn = std::min<std::size_t>(cfg.minibatch, idx.size() - off);
      NetworkParams g = zeros_like(p);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < bn; ++i)
        batch_loss += single_step_grad(p, *samples[idx[off + i]], zero, g);
      scale_tensors(g, 1.0 / static_cast<double>(bn));
      zero_rnn(g);  // recurrent core excluded at this stage
      opt.step(p, g, cfg);
      epoch_loss += batch_loss / static_cast<double>(bn);
      ++batches;
    }
    const double train_loss = epoch_loss / static_cast<double>(batches);
    guard.check(train_loss, p);
    metrics.push_back({epoch, Stage::single_step, train_loss, set_loss(val_samples)});
  }
  p.stage = Stage::single_step;
  return p;
}

namespace {

/// Start latents for every block of every trial under the current parameters
/// (no gradient flows through them; refreshed once per epoch).
std::vector<std::vector<LatentState>> thread_latents(const NetworkParams& p,
                                                     const BlockSet& trials) {
  std::vector<std::vector<LatentState>> out;
  out.reserve(trials.size());
  for (const auto& trial : trials) {
    std::vector<LatentState> states;
    states.reserve(trial.size());
    LatentState h(p.dims);
    for (const auto& b : trial) {
      states.push_back(h);
      h = forward_block(p, b.x, b.v, h).latent;
    }
    out.push_back(std::move(states));
  }
  return out;
}

RolloutSample make_window(const BlockSet& trials,
                          const std::vector<std::vector<LatentState>>& latents, int trial, int j,
                          int H) {
  RolloutSample s{trials[trial][j].x, {}, {}, latents[trial][j]};
  for (int i = 0; i < H; ++i) {
    s.future_v.push_back(trials[trial][j + i].v);
    s.targets.push_back(trials[trial][j + i].target);
  }
  return s;
}

}  // namespace

NetworkParams stage3_multi_step_train(const BlockSet& train, const BlockSet& val,
                                      const TrainConfig& cfg, NetworkParams p,
                                      std::vector<EpochMetrics>& metrics) {
  if (cfg.stage != Stage::multi_step)
    throw ConfigError("stage3 called with wrong TrainConfig.stage");
  if (p.stage != Stage::single_step)
    throw ConfigError("stage3 requires a stage-2 (single_step) checkpoint, got " +
                      stage_name(p.stage));
  if (cfg.horizon_blocks < 1) throw ConfigError("stage3: horizon_blocks must be >= 1");
  const int H = cfg.horizon_blocks;

  std::vector<std::pair<int, int>> windows;  // (trial, start block)
  for (int tr = 0; tr < static_cast<int>(train.size()); ++tr)
    for (int j = 0; j + H <= static_cast<int>(train[tr].size()); ++j) windows.emplace_back(tr, j);
  if (windows.empty()) throw DataError("stage3: no rollout windows; trials too short for H_b");

  Optimizer opt(p);
  double initial = multi_step_mse(p, train, H);
  DivergenceGuard guard{initial, "stage3"};
  std::vector<std::size_t> idx(windows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 shuffler(mix_seed(cfg.seed, 0x53));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto latents = thread_latents(p, train);
    std::shuffle(idx.begin(), idx.end(), shuffler);
    double epoch_loss = 0.0;
    long batches = 0;
    for (std::size_t off = 0; off < idx.size(); off += cfg.minibatch) {
      const std::size_t bn = std::min<std::size_t>(cfg.minibatch, idx.size() - off);
      NetworkParams g = zeros_like(p);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < bn; ++i) {
        const auto [tr, j] = windows[idx[off + i]];
        batch_loss += multi_step_grad(p, make_window(train, latents, tr, j, H), g);
      }
      scale_tensors(g, 1.0 / static_cast<double>(bn));
      opt.step(p, g, cfg);
      epoch_loss += batch_loss / static_cast<double>(bn);
      ++batches;
    }
    const double train_loss = epoch_loss / static_cast<double>(batches);
    guard.check(train_loss, p);
    metrics.push_back({epoch, Stage::multi_step, train_loss, multi_step_mse(p, val, H)});
  }
  p.stage = Stage::multi_step;
  return p;
}

}  // namespace cutmpc::net
