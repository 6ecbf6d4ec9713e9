#include "cutmpc/model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace cutmpc::net {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::autoencoder: return "autoencoder";
    case Stage::single_step: return "single_step";
    case Stage::multi_step: return "multi_step";
  }
  throw ConfigError("bad stage enum");
}

Stage stage_from_name(const std::string& name) {
  if (name == "autoencoder") return Stage::autoencoder;
  if (name == "single_step") return Stage::single_step;
  if (name == "multi_step") return Stage::multi_step;
  throw DataError("unknown training stage tag: " + name);
}

namespace {

template <class Params, class Fn>
void visit_impl(Params& p, const Fn& f) {
  f("W_en1", p.W_en1.data(), p.W_en1.size());
  f("b_en1", p.b_en1.data(), p.b_en1.size());
  f("W_en2", p.W_en2.data(), p.W_en2.size());
  f("b_en2", p.b_en2.data(), p.b_en2.size());
  f("W_state", p.W_state.data(), p.W_state.size());
  f("b_state", p.b_state.data(), p.b_state.size());
  f("W_input", p.W_input.data(), p.W_input.size());
  f("b_input", p.b_input.data(), p.b_input.size());
  f("W_out1", p.W_out1.data(), p.W_out1.size());
  f("b_out1", p.b_out1.data(), p.b_out1.size());
  f("W_out2", p.W_out2.data(), p.W_out2.size());
  f("b_out2", p.b_out2.data(), p.b_out2.size());
  f("W1x", p.W1x.data(), p.W1x.size());
  f("W1h", p.W1h.data(), p.W1h.size());
  f("b1", p.b1.data(), p.b1.size());
  f("W2x", p.W2x.data(), p.W2x.size());
  f("W2h", p.W2h.data(), p.W2h.size());
  f("b2", p.b2.data(), p.b2.size());
}

void allocate(NetworkParams& p) {
  const Dims& d = p.dims;
  p.W_en1.setZero(d.enc_hidden, d.in_ch);
  p.b_en1.setZero(d.enc_hidden);
  p.W_en2.setZero(d.latent, d.enc_hidden);
  p.b_en2.setZero(d.latent);
  p.W_state.setZero(d.state_hidden, d.x_flat());
  p.b_state.setZero(d.state_hidden);
  p.W_input.setZero(d.input_hidden, d.v_flat());
  p.b_input.setZero(d.input_hidden);
  p.W_out1.setZero(d.out_hidden, d.concat_width());
  p.b_out1.setZero(d.out_hidden);
  p.W_out2.setZero(d.out_flat(), d.out_hidden);
  p.b_out2.setZero(d.out_flat());
  p.W1x.setZero(d.rnn_units, d.z_flat());
  p.W1h.setZero(d.rnn_units, d.rnn_units);
  p.b1.setZero(d.rnn_units);
  p.W2x.setZero(d.rnn_units, d.rnn_units);
  p.W2h.setZero(d.rnn_units, d.rnn_units);
  p.b2.setZero(d.rnn_units);
}

}  // namespace

void visit_tensors(NetworkParams& p, const std::function<void(const char*, double*, long)>& f) {
  visit_impl(p, f);
}

void visit_tensors(const NetworkParams& p,
                   const std::function<void(const char*, const double*, long)>& f) {
  visit_impl(p, f);
}

long param_count(const NetworkParams& p) {
  long n = 0;
  visit_tensors(p, [&](const char*, const double*, long sz) { n += sz; });
  return n;
}

NetworkParams init_params(const Dims& dims, std::uint64_t seed) {
  NetworkParams p;
  p.dims = dims;
  allocate(p);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](MatrixXd& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (long i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  };
  fill(p.W_en1);
  fill(p.W_en2);
  fill(p.W_state);
  fill(p.W_input);
  fill(p.W_out1);
  fill(p.W_out2);
  fill(p.W1x);
  fill(p.W1h);
  fill(p.W2x);
  fill(p.W2h);
  return p;
}

NetworkParams zeros_like(const NetworkParams& p) {
  NetworkParams g;
  g.dims = p.dims;
  g.stage = p.stage;
  allocate(g);
  return g;
}

ForwardResult forward_block_cached(const NetworkParams& p, const MatrixXd& x, const MatrixXd& v,
                                   const LatentState& latent, BlockCache& c) {
  const Dims& d = p.dims;
  if (x.rows() != d.M || x.cols() != d.in_ch || v.rows() != d.M || v.cols() != 2)
    throw DataError("forward_block: input shape mismatch");

  c.x = x;
  c.v = v;
  c.xf.resize(d.x_flat());
  c.vf.resize(d.v_flat());
  c.a.resize(d.enc_hidden, d.M);
  c.z.resize(d.latent, d.M);
  c.z_flat.resize(d.z_flat());
  for (int t = 0; t < d.M; ++t) {
    c.xf.segment(t * d.in_ch, d.in_ch) = x.row(t).transpose();
    c.vf.segment(t * 2, 2) = v.row(t).transpose();
    c.a.col(t) = (p.W_en1 * x.row(t).transpose() + p.b_en1).array().tanh();
    c.z.col(t) = (p.W_en2 * c.a.col(t) + p.b_en2).array().tanh();
    c.z_flat.segment(t * d.latent, d.latent) = c.z.col(t);
  }

  c.h1_prev = latent.h1;
  c.h2_prev = latent.h2;
  c.h1 = (p.W1x * c.z_flat + p.W1h * c.h1_prev + p.b1).array().tanh();
  c.h2 = (p.W2x * c.h1 + p.W2h * c.h2_prev + p.b2).array().tanh();

  c.s = (p.W_state * c.xf + p.b_state).array().tanh();
  c.g = (p.W_input * c.vf + p.b_input).array().tanh();

  VectorXd concat(d.concat_width());
  concat << c.h2, c.s, c.g;
  c.o = (p.W_out1 * concat + p.b_out1).array().tanh();
  c.yhat = p.W_out2 * c.o + p.b_out2;
  if (!c.yhat.allFinite()) throw NumericFault("forward_block: non-finite prediction");

  ForwardResult r{MatrixXd(d.M, 2), LatentState(d)};
  for (int t = 0; t < d.M; ++t) r.pred.row(t) = c.yhat.segment(t * 2, 2).transpose();
  r.latent.h1 = c.h1;
  r.latent.h2 = c.h2;
  return r;
}

ForwardResult forward_block(const NetworkParams& p, const MatrixXd& x, const MatrixXd& v,
                            const LatentState& latent) {
  BlockCache c;
  return forward_block_cached(p, x, v, latent, c);
}

std::vector<MatrixXd> rollout(const NetworkParams& p, const MatrixXd& x,
                              const std::vector<MatrixXd>& future_v, const LatentState& latent) {
  if (future_v.empty()) throw DataError("rollout: needs at least one future block");
  std::vector<MatrixXd> preds;
  preds.reserve(future_v.size());
  LatentState h = latent;
  MatrixXd xin = x;
  for (std::size_t i = 0; i < future_v.size(); ++i) {
    auto r = forward_block(p, xin, future_v[i], h);
    h = r.latent;
    if (i + 1 < future_v.size()) {
      xin.leftCols(2) = r.pred;
      xin.rightCols(2) = future_v[i];
    }
    preds.push_back(std::move(r.pred));
  }
  return preds;
}

void backward_block(const NetworkParams& p, const BlockCache& c, const VectorXd& dyhat,
                    VectorXd& dh1, VectorXd& dh2, MatrixXd& dx, NetworkParams& g) {
  const Dims& d = p.dims;

  g.W_out2 += dyhat * c.o.transpose();
  g.b_out2 += dyhat;
  const VectorXd do_post = p.W_out2.transpose() * dyhat;
  const VectorXd do_pre = do_post.cwiseProduct(VectorXd::Ones(d.out_hidden) - c.o.cwiseProduct(c.o));

  VectorXd concat(d.concat_width());
  concat << c.h2, c.s, c.g;
  g.W_out1 += do_pre * concat.transpose();
  g.b_out1 += do_pre;
  const VectorXd dconcat = p.W_out1.transpose() * do_pre;

  const VectorXd dh2_total = dconcat.head(d.rnn_units) + dh2;
  const VectorXd ds = dconcat.segment(d.rnn_units, d.state_hidden);
  const VectorXd dg = dconcat.tail(d.input_hidden);

  const VectorXd dg_pre = dg.cwiseProduct(VectorXd::Ones(d.input_hidden) - c.g.cwiseProduct(c.g));
  g.W_input += dg_pre * c.vf.transpose();
  g.b_input += dg_pre;

  const VectorXd ds_pre = ds.cwiseProduct(VectorXd::Ones(d.state_hidden) - c.s.cwiseProduct(c.s));
  g.W_state += ds_pre * c.xf.transpose();
  g.b_state += ds_pre;
  const VectorXd dxf = p.W_state.transpose() * ds_pre;

  const VectorXd dh2_pre =
      dh2_total.cwiseProduct(VectorXd::Ones(d.rnn_units) - c.h2.cwiseProduct(c.h2));
  g.W2x += dh2_pre * c.h1.transpose();
  g.W2h += dh2_pre * c.h2_prev.transpose();
  g.b2 += dh2_pre;
  const VectorXd dh1_total = p.W2x.transpose() * dh2_pre + dh1;
  const VectorXd dh2_prev = p.W2h.transpose() * dh2_pre;

  const VectorXd dh1_pre =
      dh1_total.cwiseProduct(VectorXd::Ones(d.rnn_units) - c.h1.cwiseProduct(c.h1));
  g.W1x += dh1_pre * c.z_flat.transpose();
  g.W1h += dh1_pre * c.h1_prev.transpose();
  g.b1 += dh1_pre;
  const VectorXd dz_flat = p.W1x.transpose() * dh1_pre;
  const VectorXd dh1_prev = p.W1h.transpose() * dh1_pre;

  dx.setZero(d.M, d.in_ch);
  for (int t = 0; t < d.M; ++t) {
    const VectorXd dz_t = dz_flat.segment(t * d.latent, d.latent);
    const VectorXd z_t = c.z.col(t);
    const VectorXd dz_pre =
        dz_t.cwiseProduct(VectorXd::Ones(d.latent) - z_t.cwiseProduct(z_t));
    g.W_en2 += dz_pre * c.a.col(t).transpose();
    g.b_en2 += dz_pre;
    const VectorXd da = p.W_en2.transpose() * dz_pre;
    const VectorXd a_t = c.a.col(t);
    const VectorXd da_pre =
        da.cwiseProduct(VectorXd::Ones(d.enc_hidden) - a_t.cwiseProduct(a_t));
    g.W_en1 += da_pre * c.x.row(t);
    g.b_en1 += da_pre;
    dx.row(t) = (p.W_en1.transpose() * da_pre).transpose();
    dx.row(t) += dxf.segment(t * d.in_ch, d.in_ch).transpose();
  }

  dh1 = dh1_prev;
  dh2 = dh2_prev;
}

void save_model(const NetworkParams& p, const data::NormStats& stats, const std::string& path) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "cutmpc-model";
  j["stage"] = stage_name(p.stage);
  j["dims"] = {{"M", p.dims.M},
               {"in_ch", p.dims.in_ch},
               {"enc_hidden", p.dims.enc_hidden},
               {"latent", p.dims.latent},
               {"rnn_units", p.dims.rnn_units},
               {"state_hidden", p.dims.state_hidden},
               {"input_hidden", p.dims.input_hidden},
               {"out_hidden", p.dims.out_hidden}};
  j["norm_stats"] = {{"mean", {stats.mean[0], stats.mean[1], stats.mean[2], stats.mean[3]}},
                     {"std", {stats.std[0], stats.std[1], stats.std[2], stats.std[3]}},
                     {"degenerate",
                      {stats.degenerate[0], stats.degenerate[1], stats.degenerate[2],
                       stats.degenerate[3]}},
                     {"computed_over", stats.computed_over}};
  json tensors;
  std::uint64_t checksum = 0xcbf29ce484222325ull;
  visit_tensors(p, [&](const char* name, const double* data, long n) {
    tensors[name] = std::vector<double>(data, data + n);
    checksum = fnv1a64(data, static_cast<std::size_t>(n) * sizeof(double), checksum);
  });
  j["tensors"] = std::move(tensors);
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(checksum));
  j["checksum"] = hex;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << j.dump(1) << '\n';
}

std::pair<NetworkParams, data::NormStats> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model parse error in " + path + ": " + e.what());
  }
  if (j.value("kind", "") != "cutmpc-model" || j.value("schema_version", 0) != 1)
    throw DataError(path + ": not a supported model file");

  NetworkParams p;
  const auto& jd = j.at("dims");
  p.dims.M = jd.at("M").get<int>();
  p.dims.in_ch = jd.at("in_ch").get<int>();
  p.dims.enc_hidden = jd.at("enc_hidden").get<int>();
  p.dims.latent = jd.at("latent").get<int>();
  p.dims.rnn_units = jd.at("rnn_units").get<int>();
  p.dims.state_hidden = jd.at("state_hidden").get<int>();
  p.dims.input_hidden = jd.at("input_hidden").get<int>();
  p.dims.out_hidden = jd.at("out_hidden").get<int>();
  p.stage = stage_from_name(j.at("stage").get<std::string>());
  allocate(p);

  std::uint64_t checksum = 0xcbf29ce484222325ull;
  try {
    visit_tensors(p, [&](const char* name, double* data, long n) {
      const auto& arr = j.at("tensors").at(name);
      if (static_cast<long>(arr.size()) != n)
        throw DataError(path + ": tensor " + name + " has wrong size");
      for (long i = 0; i < n; ++i) data[i] = arr.at(i).get<double>();
      checksum = fnv1a64(data, static_cast<std::size_t>(n) * sizeof(double), checksum);
    });
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  }
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(checksum));
  if (j.at("checksum").get<std::string>() != hex)
    throw DataError(path + ": checksum mismatch (corrupted model file)");

  data::NormStats stats;
  const auto& js = j.at("norm_stats");
  for (int c = 0; c < 4; ++c) {
    stats.mean[c] = js.at("mean").at(c).get<double>();
    stats.std[c] = js.at("std").at(c).get<double>();
    stats.degenerate[c] = js.at("degenerate").at(c).get<bool>();
  }
  stats.computed_over = js.at("computed_over").get<std::string>();
  return {std::move(p), std::move(stats)};
}

}  // namespace cutmpc::net
