#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cutmpc/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <random>

using namespace cutmpc;
using namespace cutmpc::data;

namespace {

ctl::TrialLog linear_log(int n, const Vec2& step, const Vec2& start = Vec2(0.0, 0.05)) {
  ctl::TrialLog log;
  for (int i = 0; i < n; ++i)
    log.rows.push_back({i * 0.01, start + static_cast<double>(i) * step,
                        Vec2(0.1 * i, -0.2 * i), Vec2::Zero()});
  return log;
}

}  // namespace

TEST_CASE("blockify counting rules") {
  CHECK(blockify(linear_log(25, Vec2(0.001, 0.0)), 10).size() == 1);   // 5 samples dropped
  CHECK(blockify(linear_log(20, Vec2(0.001, 0.0)), 10).size() == 1);
  CHECK(blockify(linear_log(100, Vec2(0.001, 0.0)), 10).size() == 9);  // floor(len/M) - 1
  CHECK_THROWS_AS(blockify(linear_log(19, Vec2(0.001, 0.0)), 10), DataError);
  CHECK_THROWS_AS(blockify(linear_log(10, Vec2::Zero()), 0), DataError);
}

TEST_CASE("constant position log gives zero relative positions") {
  const auto blocks = blockify(linear_log(50, Vec2::Zero()), 10);
  for (const auto& b : blocks) {
    CHECK(b.x.leftCols(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.target.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("linear motion produces the hand-computed relative-position ramp") {
  // 1 mm per step on Y: block b >= 1 holds k mm for k = 1..10 relative to the
  // previous block's last sample; block 0 is referenced to the first sample.
  const auto blocks = blockify(linear_log(40, Vec2(0.001, 0.0)), 10);
  REQUIRE(blocks.size() == 3);
  for (int t = 0; t < 10; ++t)
    CHECK(blocks[0].x(t, kChanRelY) == doctest::Approx(0.001 * t).epsilon(1e-12));
  for (std::size_t b = 1; b < blocks.size(); ++b)
    for (int t = 0; t < 10; ++t)
      CHECK(blocks[b].x(t, kChanRelY) == doctest::Approx(0.001 * (t + 1)).epsilon(1e-12));

  // Target of block b is the relative-position part of block b+1.
  for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
    CHECK((blocks[b].target - blocks[b + 1].x.leftCols(2)).cwiseAbs().maxCoeff() == 0.0);
  }
  // The v channel carries the next block's forces.
  for (int t = 0; t < 10; ++t) {
    CHECK(blocks[0].v(t, 0) == doctest::Approx(0.1 * (10 + t)));
    CHECK(blocks[0].v(t, 1) == doctest::Approx(-0.2 * (10 + t)));
  }
}

TEST_CASE("absolute positions are recoverable from the blocks") {
  // Random-walk log, reconstruct by cumulatively chaining block references.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(-0.002, 0.002);
  ctl::TrialLog log;
  Vec2 p(0.01, 0.04);
  for (int i = 0; i < 87; ++i) {
    log.rows.push_back({i * 0.01, p, Vec2::Zero(), Vec2::Zero()});
    p += Vec2(uni(rng), uni(rng));
  }
  const int M = 10;
  const auto blocks = blockify(log, M);
  Vec2 ref = log.rows[0].p;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int t = 0; t < M; ++t) {
      const Vec2 abs_p = ref + Vec2(blocks[b].x(t, 0), blocks[b].x(t, 1));
      CHECK(std::abs(abs_p[kY] - log.rows[b * M + t].p[kY]) < 1e-9);
      CHECK(std::abs(abs_p[kZ] - log.rows[b * M + t].p[kZ]) < 1e-9);
    }
    ref = log.rows[(b + 1) * M - 1].p;
  }
}

TEST_CASE("normalization statistics and round trip") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.3, 2.0);
  ctl::TrialLog log;
  Vec2 p(0.0, 0.0);
  for (int i = 0; i < 400; ++i) {
    log.rows.push_back({i * 0.01, p, Vec2(gauss(rng), gauss(rng)), Vec2::Zero()});
    p += Vec2(0.001 * gauss(rng), 0.001 * gauss(rng));
  }
  std::vector<std::vector<Block>> trials{blockify(log, 10)};
  const NormStats stats = fit_norm_stats(trials, "unit-test");

  // Normalized training set has zero mean and unit variance per channel.
  Eigen::Vector4d sum = Eigen::Vector4d::Zero(), sumsq = Eigen::Vector4d::Zero();
  long n = 0;
  for (const auto& b : trials[0]) {
    const Block nb = apply_norm(b, stats);
    for (int t = 0; t < nb.x.rows(); ++t) {
      const Eigen::Vector4d row = nb.x.row(t).transpose();
      sum += row;
      sumsq += row.cwiseProduct(row);
      ++n;
    }
  }
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(sum[c] / n) < 1e-9);
    CHECK(std::abs(sumsq[c] / n - 1.0) < 1e-9);
  }

  // invert_norm(apply_norm(x)) == x to near machine precision.
  const Block b = trials[0][3];
  const Block round = invert_norm(apply_norm(b, stats), stats);
  CHECK((round.x - b.x).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.x.cwiseAbs().maxCoeff()));
  CHECK((round.v - b.v).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.v.cwiseAbs().maxCoeff()));
  CHECK((round.target - b.target).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-point channel {1,3} has mean 2 and population std 1") {
  Block b;
  b.x.resize(2, 4);
  b.x << 1.0, 1.0, 1.0, 5.0,
         3.0, 1.0, 3.0, 5.0;
  b.v.setZero(2, 2);
  b.target.setZero(2, 2);
  std::vector<std::vector<Block>> trials{{b}};
  const NormStats s = fit_norm_stats(trials, "two-point");
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.std[0] == doctest::Approx(1.0));  // divide-by-N convention
  CHECK_FALSE(s.degenerate[0]);

  // Constant channels are degenerate: std snaps to 1 and the flag is set.
  CHECK(s.mean[1] == doctest::Approx(1.0));
  CHECK(s.std[1] == 1.0);
  CHECK(s.degenerate[1]);
  CHECK(s.degenerate[3]);
}

TEST_CASE("split is deterministic, trial-granular and leak free") {
  DatasetManifest m;
  m.train_fraction = 0.8;
  for (int i = 0; i < 10; ++i)
    m.trials.push_back({"trial_" + std::to_string(i) + ".csv", "cake", 100});

  split(m, 42);
  CHECK(m.train_trials.size() == 8);
  CHECK(m.val_trials.size() == 2);

  DatasetManifest m2 = m;
  m2.train_trials.clear();
  m2.val_trials.clear();
  split(m2, 42);
  CHECK(m2.train_trials == m.train_trials);
  CHECK(m2.val_trials == m.val_trials);

  // Different seed, different split (with overwhelming probability).
  DatasetManifest m3 = m;
  split(m3, 43);
  CHECK(m3.train_trials != m.train_trials);

  // No trial lands on both sides and all trials are used.
  std::vector<int> all = m.train_trials;
  all.insert(all.end(), m.val_trials.begin(), m.val_trials.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10; ++i) CHECK(all[i] == i);

  DatasetManifest tiny;
  tiny.trials.push_back({"only.csv", "cake", 100});
  CHECK_THROWS_AS(split(tiny, 1), DataError);
}

TEST_CASE("manifest json round trip") {
  DatasetManifest m;
  m.M = 10;
  m.train_fraction = 0.75;
  m.held_out_materials = {"potato", "carrot"};
  for (int i = 0; i < 4; ++i) m.trials.push_back({"t" + std::to_string(i) + ".csv", "lemon", 55});
  split(m, 7);
  m.stats.mean << 0.1, 0.2, 0.3, 0.4;
  m.stats.std << 1.0, 2.0, 3.0, 4.0;
  m.stats.computed_over = "round-trip";

  const std::string path = "test_manifest.json";
  write_manifest(m, path);
  const DatasetManifest back = read_manifest(path);
  CHECK(back.M == m.M);
  CHECK(back.split_seed == m.split_seed);
  CHECK(back.train_trials == m.train_trials);
  CHECK(back.val_trials == m.val_trials);
  CHECK(back.held_out_materials == m.held_out_materials);
  CHECK(back.stats.mean == m.stats.mean);
  CHECK(back.stats.std == m.stats.std);
  CHECK(back.trials.size() == m.trials.size());
  CHECK(back.trials[2].material == "lemon");
  std::remove(path.c_str());
}
