// Copyright 2026  The sfv developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "error.hpp"
#include "image.hpp"
#include "oracles.hpp"
#include "trainer.hpp"

using namespace sfv;

namespace {

// In-memory synthetic identity clusters: low-frequency identity templates
// (coarse grids, bilinearly upsampled so structure survives pooling) with
// per-pixel jitter. Returns the image set and the id->identity assignment.
struct ClusterData {
  ImageSet images;
  std::unordered_map<std::string, std::string> labels;
};

ClusterData make_clusters(const EncoderConfig& cfg, int identities,
                          int per_identity, uint64_t seed) {
  ClusterData out;
  const int h = cfg.input_height, w = cfg.input_width;
  out.images.height = h;
  out.images.width = w;
  const int total = identities * per_identity;
  out.images.pixels = Tensor<float>({total, h, w, 3});
  const int64_t row = static_cast<int64_t>(h) * w * 3;
  Rng rng(seed);
  const int grid_side = std::max(2, h / 4);
  int serial = 0;
  for (int ident = 0; ident < identities; ++ident) {
    Image grid(grid_side, grid_side);
    for (auto& v : grid.pixels) {
      v = std::clamp(0.5f + 0.35f * static_cast<float>(rng.normal()), 0.0f,
                     1.0f);
    }
    const Image tmpl = resize_bilinear(grid, h, w);
    for (int j = 0; j < per_identity; ++j, ++serial) {
      const std::string id = "img" + std::to_string(serial);
      out.images.ids.push_back(id);
      out.images.index[id] = static_cast<size_t>(serial);
      out.labels[id] = "id" + std::to_string(ident);
      float* dst = out.images.pixels.data.data() + serial * row;
      for (int64_t p = 0; p < row; ++p) {
        dst[p] = std::clamp(
            tmpl.pixels[p] + static_cast<float>(rng.uniform(-0.05, 0.05)),
            0.0f, 1.0f);
      }
    }
  }
  return out;
}

// Easily separable pairs over the cluster data: label 1 = same identity.
PairSet separable_pairs(const ClusterData& data, int count, uint64_t seed) {
  PairSet ps;
  Rng rng(seed);
  const size_t n = data.images.ids.size();
  while (ps.pairs.size() < static_cast<size_t>(count)) {
    const size_t a = rng.below(n);
    const size_t b = rng.below(n);
    if (a == b) continue;
    const std::string& ida = data.images.ids[a];
    const std::string& idb = data.images.ids[b];
    const int label = data.labels.at(ida) == data.labels.at(idb) ? 1 : 0;
    // Alternate labels so the batch stays balanced.
    const int want = static_cast<int>(ps.pairs.size()) % 2;
    if (label != want) continue;
    ps.pairs.push_back(TrainingPair{ida, idb, label, 0.0});
  }
  return ps;
}

EncoderConfig small_encoder() {
  EncoderConfig cfg;
  cfg.input_height = 8;
  cfg.input_width = 8;
  cfg.input_channels = 3;
  cfg.block_channels = {4, 6, 8};
  cfg.fc1_units = 16;
  cfg.embedding_dim = 8;
  return cfg;
}

}  // namespace

TEST_CASE("lr schedule hits both endpoints exactly and decays monotonically") {
  TrainConfig cfg;
  cfg.epochs = 300;
  CHECK(lr_schedule(0, cfg) == 1e-2);
  CHECK(lr_schedule(299, cfg) == 1e-8);
  double prev = lr_schedule(0, cfg);
  for (int e = 1; e < 300; ++e) {
    const double lr = lr_schedule(e, cfg);
    CHECK(lr < prev);
    prev = lr;
  }
}

TEST_CASE("lr schedule geometric midpoint") {
  TrainConfig cfg;
  cfg.epochs = 301;
  CHECK(lr_schedule(150, cfg) == doctest::Approx(1e-5).epsilon(1e-12));
}

TEST_CASE("lr schedule edge cases") {
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK(lr_schedule(0, cfg) == cfg.lr_start);
  cfg.epochs = 10;
  CHECK_THROWS_AS(lr_schedule(10, cfg), Error);
  CHECK_THROWS_AS(lr_schedule(-1, cfg), Error);
}

TEST_CASE("sgd_step reduces to vanilla SGD without momentum or decay") {
  const EncoderConfig cfg = test::tiny_encoder_config();
  const HeadConfig head = test::tiny_head_config();
  auto params = params_init<double>(cfg, head, 1);
  const auto before = params;
  auto grads = ModelParams<double>::allocate(cfg, head);
  grads.for_each_tensor([](const std::string&, Tensor<double>& t) {
    for (auto& v : t.data) v = 0.5;
  });
  auto velocity = ModelParams<double>::allocate(cfg, head);
  TrainConfig tc;
  tc.momentum = 0.0;
  tc.weight_decay = 0.0;
  sgd_step(params, grads, velocity, 0.1, tc);
  CHECK(params.fc1_w.data[0] ==
        doctest::Approx(before.fc1_w.data[0] - 0.1 * 0.5).epsilon(1e-12));
}

TEST_CASE("sgd_step fixed point: zero gradient, zero velocity, no decay") {
  const EncoderConfig cfg = test::tiny_encoder_config();
  const HeadConfig head = test::tiny_head_config();
  auto params = params_init<double>(cfg, head, 2);
  const auto before = params;
  auto grads = ModelParams<double>::allocate(cfg, head);
  auto velocity = ModelParams<double>::allocate(cfg, head);
  TrainConfig tc;
  tc.weight_decay = 0.0;
  sgd_step(params, grads, velocity, 0.1, tc);
  CHECK(params.fc1_w.data == before.fc1_w.data);
  CHECK(params.conv_w[0].data == before.conv_w[0].data);
}

TEST_CASE("sgd_step hand-evaluated scalar update") {
  // w=1, g=1, v=0, lr=0.1, momentum 0.91, wd 1e-5:
  //   v' = -0.1 * (1 + 1e-5) = -0.100001, w' = 0.899999
  const EncoderConfig cfg = test::tiny_encoder_config();
  const HeadConfig head = test::tiny_head_config();
  auto params = ModelParams<double>::allocate(cfg, head);
  auto grads = ModelParams<double>::allocate(cfg, head);
  auto velocity = ModelParams<double>::allocate(cfg, head);
  params.head2_b.data[0] = 1.0;
  grads.head2_b.data[0] = 1.0;
  TrainConfig tc;  // momentum 0.91, weight_decay 1e-5 defaults
  sgd_step(params, grads, velocity, 0.1, tc);
  CHECK(velocity.head2_b.data[0] == doctest::Approx(-0.100001).epsilon(1e-12));
  CHECK(params.head2_b.data[0] == doctest::Approx(0.899999).epsilon(1e-12));
}

TEST_CASE("non-finite gradients abort with the tensor named") {
  const EncoderConfig cfg = test::tiny_encoder_config();
  const HeadConfig head = test::tiny_head_config();
  auto params = params_init<double>(cfg, head, 3);
  auto grads = ModelParams<double>::allocate(cfg, head);
  grads.fc2_w.data[5] = std::numeric_limits<double>::quiet_NaN();
  auto velocity = ModelParams<double>::allocate(cfg, head);
  TrainConfig tc;
  CHECK_THROWS_WITH_AS(sgd_step(params, grads, velocity, 0.1, tc),
                       doctest::Contains("fc2_w"), Error);
}

TEST_CASE("training overfits a small separable pair set") {
  const EncoderConfig cfg = small_encoder();
  HeadConfig head;  // default 256 hidden units: plateau escape needs width

  const ClusterData data = make_clusters(cfg, 4, 8, 41);
  const PairSet pairs = separable_pairs(data, 32, 42);

  TrainConfig tc;
  tc.epochs = 500;  // batch == pair count, so epochs == optimizer steps
  tc.batch_size = 32;
  tc.early_stop_patience = 0;  // run the full budget
  tc.seed = 7;
  const TrainResult result = train_siamese(pairs, data.images, cfg, head, tc);
  REQUIRE(!result.log.records.empty());
  CHECK(result.log.records.back().train_loss < 0.05);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
  const EncoderConfig cfg = small_encoder();
  const HeadConfig head = test::tiny_head_config();
  const ClusterData data = make_clusters(cfg, 3, 6, 51);
  const PairSet pairs = separable_pairs(data, 16, 52);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 8;
  tc.seed = 99;

  const TrainResult r1 = train_siamese(pairs, data.images, cfg, head, tc);
  const TrainResult r2 = train_siamese(pairs, data.images, cfg, head, tc);
  REQUIRE(r1.log.records.size() == r2.log.records.size());
  for (size_t i = 0; i < r1.log.records.size(); ++i) {
    CHECK(r1.log.records[i].train_loss == r2.log.records[i].train_loss);
    CHECK(r1.log.records[i].val_loss == r2.log.records[i].val_loss);
  }
  CHECK(r1.params.fc1_w.data == r2.params.fc1_w.data);
  CHECK(r1.params.conv_w[3].data == r2.params.conv_w[3].data);

  std::ostringstream log1, log2;
  trainlog_write(r1.log, log1);
  trainlog_write(r2.log, log2);
  CHECK(log1.str() == log2.str());
}

TEST_CASE("degenerate training inputs error out before work starts") {
  const EncoderConfig cfg = small_encoder();
  const HeadConfig head = test::tiny_head_config();
  const ClusterData data = make_clusters(cfg, 2, 4, 61);

  PairSet empty;
  TrainConfig tc;
  CHECK_THROWS_AS(train_siamese(empty, data.images, cfg, head, tc), Error);

  PairSet ghost;
  ghost.pairs.push_back(TrainingPair{"img0", "nosuchimage", 1, 0.0});
  CHECK_THROWS_WITH_AS(train_siamese(ghost, data.images, cfg, head, tc),
                       doctest::Contains("nosuchimage"), Error);
}

TEST_CASE("train config invariants") {
  TrainConfig tc;
  tc.momentum = 1.0;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc.momentum = 0.91;
  tc.lr_end = 0.1;
  tc.lr_start = 0.01;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc.lr_end = 1e-8;
  tc.lr_start = 1e-2;
  tc.validation_fraction = 1.0;
  CHECK_THROWS_AS(tc.validate(), Error);
}

TEST_CASE("early stopping reports the best epoch and reason") {
  const EncoderConfig cfg = small_encoder();
  const HeadConfig head = test::tiny_head_config();
  const ClusterData data = make_clusters(cfg, 3, 6, 71);
  const PairSet pairs = separable_pairs(data, 16, 72);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 8;
  tc.early_stop_patience = 3;
  tc.seed = 5;
  const TrainResult r = train_siamese(pairs, data.images, cfg, head, tc);
  CHECK(r.log.best_epoch >= 0);
  if (r.log.records.size() < 200) {
    CHECK(r.log.stop_reason == "early stop: no validation improvement for 3 epochs");
  } else {
    CHECK(r.log.stop_reason == "completed");
  }
}

TEST_CASE("baseline separates two identities and rejects one") {
  const EncoderConfig cfg = small_encoder();
  const HeadConfig head = test::tiny_head_config();
  const ClusterData data = make_clusters(cfg, 2, 10, 81);

  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 10;
  tc.early_stop_patience = 0;
  tc.seed = 3;
  const TrainResult r =
      train_baseline(data.images, data.labels, cfg, head, tc);
  CHECK(r.final_train_accuracy == 1.0);
  CHECK(r.class_names.size() == 2);

  std::unordered_map<std::string, std::string> one_class;
  for (const auto& id : data.images.ids) one_class[id] = "same";
  CHECK_THROWS_AS(train_baseline(data.images, one_class, cfg, head, tc), Error);
}

TEST_CASE("baseline loss trajectory is invariant to label renaming") {
  const EncoderConfig cfg = small_encoder();
  const HeadConfig head = test::tiny_head_config();
  const ClusterData data = make_clusters(cfg, 3, 6, 91);

  // Swap identity names; per-image grouping is unchanged.
  std::unordered_map<std::string, std::string> renamed;
  for (const auto& [id, ident] : data.labels) {
    renamed[id] = ident == "id0" ? "id2" : (ident == "id2" ? "id0" : ident);
  }
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 6;
  tc.seed = 17;
  const TrainResult a = train_baseline(data.images, data.labels, cfg, head, tc);
  const TrainResult b = train_baseline(data.images, renamed, cfg, head, tc);
  REQUIRE(a.log.records.size() == b.log.records.size());
  for (size_t i = 0; i < a.log.records.size(); ++i) {
    // Identical up to float32 summation-order noise: relabeling permutes
    // the class axis, which reorders reductions.
    CHECK(a.log.records[i].train_loss ==
          doctest::Approx(b.log.records[i].train_loss).epsilon(1e-6));
  }
}

TEST_CASE("adam optimizer also drives the loss down") {
  const EncoderConfig cfg = small_encoder();
  HeadConfig head;
  head.hidden_units = 32;
  const ClusterData data = make_clusters(cfg, 4, 8, 141);
  const PairSet pairs = separable_pairs(data, 32, 142);
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 32;
  tc.optimizer = Optimizer::kAdam;
  tc.lr_start = 1e-3;
  tc.lr_end = 1e-5;
  tc.early_stop_patience = 0;
  tc.seed = 11;
  const TrainResult r = train_siamese(pairs, data.images, cfg, head, tc);
  CHECK(r.log.records.back().train_loss < r.log.records.front().train_loss);
}

TEST_CASE("train log format") {
  TrainLog log;
  log.records.push_back(EpochRecord{0, 1e-2, 0.7, 0.71});
  log.records.push_back(EpochRecord{1, 1e-3, 0.5, 0.52});
  log.best_epoch = 1;
  log.stop_reason = "completed";
  std::ostringstream os;
  trainlog_write(log, os);
  CHECK(os.str() == "#trainlog v1\n0,0.01,0.7,0.71\n1,0.001,0.5,0.52\n");
  const std::string summary = trainlog_summary(log);
  CHECK(summary.find("best epoch: 1") != std::string::npos);
  CHECK(summary.find("completed") != std::string::npos);
}
