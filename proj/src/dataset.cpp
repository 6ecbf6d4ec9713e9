#include "cutmpc/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace cutmpc::data {

using nlohmann::json;

std::vector<Block> blockify(const ctl::TrialLog& log, int M) {
  if (M < 1) throw DataError("blockify: M must be >= 1");
  const int len = static_cast<int>(log.rows.size());
  if (len < 2 * M)
    throw DataError("blockify: log too short (" + std::to_string(len) + " rows, need >= " +
                    std::to_string(2 * M) + ")");
  const int n_raw = len / M;

  auto rel_block = [&](int b) {
    // Reference: last absolute position of the previous block; the trial's
    // first position for block 0.
    const Vec2 ref = b == 0 ? log.rows[0].p : log.rows[b * M - 1].p;
    Eigen::MatrixXd rel(M, 2);
    for (int t = 0; t < M; ++t) {
      rel(t, 0) = log.rows[b * M + t].p[kY] - ref[kY];
      rel(t, 1) = log.rows[b * M + t].p[kZ] - ref[kZ];
    }
    return rel;
  };
  auto force_block = [&](int b) {
    Eigen::MatrixXd f(M, 2);
    for (int t = 0; t < M; ++t) {
      f(t, 0) = log.rows[b * M + t].F_s[kY];
      f(t, 1) = log.rows[b * M + t].F_s[kZ];
    }
    return f;
  };

  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(n_raw - 1));
  for (int b = 0; b + 1 < n_raw; ++b) {
    Block blk;
    blk.block_index = b;
    blk.x.resize(M, 4);
    blk.x.leftCols(2) = rel_block(b);
    blk.x.rightCols(2) = force_block(b);
    blk.v = force_block(b + 1);
    blk.target = rel_block(b + 1);
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

NormStats fit_norm_stats(const std::vector<std::vector<Block>>& trials, const std::string& id) {
  NormStats s;
  s.computed_over = id;
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  Eigen::Vector4d sumsq = Eigen::Vector4d::Zero();
  long n = 0;
  for (const auto& trial : trials) {
    for (const auto& b : trial) {
      for (int t = 0; t < b.x.rows(); ++t) {
        const Eigen::Vector4d row = b.x.row(t).transpose();
        sum += row;
        sumsq += row.cwiseProduct(row);
        n += 1;
      }
    }
  }
  if (n == 0) throw DataError("fit_norm_stats: empty training set");
  s.mean = sum / static_cast<double>(n);
  for (int c = 0; c < 4; ++c) {
    const double var = sumsq[c] / static_cast<double>(n) - s.mean[c] * s.mean[c];
    const double sd = std::sqrt(std::max(var, 0.0));
    if (sd > 0.0) {
      s.std[c] = sd;
    } else {
      s.std[c] = 1.0;
      s.degenerate[c] = true;
    }
  }
  return s;
}

Block apply_norm(const Block& b, const NormStats& s) {
  Block out = b;
  for (int c = 0; c < 4; ++c)
    out.x.col(c) = (b.x.col(c).array() - s.mean[c]) / s.std[c];
  for (int c = 0; c < 2; ++c) {
    out.v.col(c) = (b.v.col(c).array() - s.mean[kChanFy + c]) / s.std[kChanFy + c];
    out.target.col(c) = (b.target.col(c).array() - s.mean[kChanRelY + c]) / s.std[kChanRelY + c];
  }
  return out;
}

Block invert_norm(const Block& b, const NormStats& s) {
  Block out = b;
  for (int c = 0; c < 4; ++c)
    out.x.col(c) = b.x.col(c).array() * s.std[c] + s.mean[c];
  for (int c = 0; c < 2; ++c) {
    out.v.col(c) = b.v.col(c).array() * s.std[kChanFy + c] + s.mean[kChanFy + c];
    out.target.col(c) = b.target.col(c).array() * s.std[kChanRelY + c] + s.mean[kChanRelY + c];
  }
  return out;
}

void split(DatasetManifest& m, std::uint64_t seed) {
  const int n = static_cast<int>(m.trials.size());
  if (n < 2) throw DataError("split: need at least 2 trials");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  int n_train = static_cast<int>(std::llround(m.train_fraction * n));
  n_train = std::clamp(n_train, 1, n - 1);
  m.split_seed = seed;
  m.train_trials.assign(idx.begin(), idx.begin() + n_train);
  m.val_trials.assign(idx.begin() + n_train, idx.end());
  std::sort(m.train_trials.begin(), m.train_trials.end());
  std::sort(m.val_trials.begin(), m.val_trials.end());
}

namespace {

json stats_to_json(const NormStats& s) {
  json j;
  j["mean"] = {s.mean[0], s.mean[1], s.mean[2], s.mean[3]};
  j["std"] = {s.std[0], s.std[1], s.std[2], s.std[3]};
  j["degenerate"] = {s.degenerate[0], s.degenerate[1], s.degenerate[2], s.degenerate[3]};
  j["computed_over"] = s.computed_over;
  return j;
}

NormStats stats_from_json(const json& j) {
  NormStats s;
  for (int c = 0; c < 4; ++c) {
    s.mean[c] = j.at("mean").at(c).get<double>();
    s.std[c] = j.at("std").at(c).get<double>();
    s.degenerate[c] = j.at("degenerate").at(c).get<bool>();
  }
  s.computed_over = j.at("computed_over").get<std::string>();
  return s;
}

}  // namespace

void write_manifest(const DatasetManifest& m, const std::string& path) {
  json j;
  j["schema_version"] = m.schema_version;
  j["M"] = m.M;
  j["split_seed"] = m.split_seed;
  j["train_fraction"] = m.train_fraction;
  j["held_out_materials"] = m.held_out_materials;
  j["train_trials"] = m.train_trials;
  j["val_trials"] = m.val_trials;
  j["norm_stats"] = stats_to_json(m.stats);
  json trials = json::array();
  for (const auto& t : m.trials)
    trials.push_back({{"file", t.file}, {"material", t.material}, {"samples", t.samples}});
  j["trials"] = trials;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest parse error in " + path + ": " + e.what());
  }
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != 1)
    throw DataError("manifest schema_version " + std::to_string(m.schema_version) +
                    " not supported");
  m.M = j.at("M").get<int>();
  m.split_seed = j.at("split_seed").get<std::uint64_t>();
  m.train_fraction = j.at("train_fraction").get<double>();
  m.held_out_materials = j.at("held_out_materials").get<std::vector<std::string>>();
  m.train_trials = j.at("train_trials").get<std::vector<int>>();
  m.val_trials = j.at("val_trials").get<std::vector<int>>();
  m.stats = stats_from_json(j.at("norm_stats"));
  for (const auto& t : j.at("trials"))
    m.trials.push_back({t.at("file").get<std::string>(), t.at("material").get<std::string>(),
                        t.at("samples").get<int>()});
  return m;
}

std::vector<std::vector<Block>> load_blocks(const DatasetManifest& m, const std::string& dir,
                                            const std::vector<int>& trial_indices) {
  std::vector<std::vector<Block>> out;
  out.reserve(trial_indices.size());
  for (int i : trial_indices) {
    if (i < 0 || i >= static_cast<int>(m.trials.size()))
      throw DataError("load_blocks: trial index out of range");
    const auto log = ctl::read_trial_csv(dir + "/" + m.trials[i].file);
    out.push_back(blockify(log, m.M));
  }
  return out;
}

}  // namespace cutmpc::data
