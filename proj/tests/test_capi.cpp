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

// Exercises the public C surface of the shared library.

#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "sfv/sfv.h"

namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sfv_test_capi";
  fs::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(std::strlen(sfv_version()) > 0);
  CHECK(sfv_last_error() != nullptr);
}

TEST_CASE("store lifecycle through the C API") {
  sfv_store* store = nullptr;
  REQUIRE(sfv_store_create(3, &store) == SFV_OK);
  const float a[3] = {1, 0, 0};
  const float b[3] = {0, 1, 0};
  CHECK(sfv_store_add(store, "a", a, 3) == SFV_OK);
  CHECK(sfv_store_add(store, "b", b, 3) == SFV_OK);
  CHECK(sfv_store_size(store) == 2);
  CHECK(sfv_store_dim(store) == 3);

  // Duplicate id and dimension mismatch are distinct failures.
  CHECK(sfv_store_add(store, "a", b, 3) == SFV_ERR_INVALID);
  CHECK(std::strlen(sfv_last_error()) > 0);
  CHECK(sfv_store_add(store, "c", b, 2) == SFV_ERR_DIMENSION);

  const std::string path = temp_path("store.emb");
  CHECK(sfv_store_write(store, path.c_str()) == SFV_OK);
  sfv_store* back = nullptr;
  REQUIRE(sfv_store_read(path.c_str(), &back) == SFV_OK);
  CHECK(sfv_store_size(back) == 2);
  const char* id = nullptr;
  const float* values = nullptr;
  REQUIRE(sfv_store_entry(back, 0, &id, &values) == SFV_OK);
  CHECK(std::string(id) == "a");
  CHECK(values[0] == 1.0f);
  CHECK(sfv_store_entry(back, 9, &id, &values) == SFV_ERR_INVALID);
  sfv_store_free(back);
  sfv_store_free(store);

  sfv_store* missing = nullptr;
  CHECK(sfv_store_read(temp_path("missing.emb").c_str(), &missing) ==
        SFV_ERR_IO);
}

TEST_CASE("cosine through the C API") {
  const float a[2] = {3, 4};
  const float b[2] = {4, 3};
  double out = 0.0;
  REQUIRE(sfv_cosine(a, b, 2, &out) == SFV_OK);
  CHECK(out == doctest::Approx(0.96).epsilon(1e-12));
  const float z[2] = {0, 0};
  CHECK(sfv_cosine(a, z, 2, &out) == SFV_ERR_INVALID);
}

TEST_CASE("mining through the C API") {
  sfv_mining_config cfg;
  sfv_mining_config_init(&cfg);
  CHECK(cfg.k == 10);
  CHECK(cfg.pos_threshold == 0.3);
  CHECK(cfg.neg_threshold == 0.1);
  CHECK(cfg.pos_mode == SFV_THRESHOLD_BELOW);
  CHECK(cfg.bidirectional == 0);

  sfv_store* x = nullptr;
  sfv_store* y = nullptr;
  REQUIRE(sfv_store_create(2, &x) == SFV_OK);
  REQUIRE(sfv_store_create(2, &y) == SFV_OK);
  const float e1[2] = {1, 0};
  const float e2[2] = {0.9f, 0.1f};
  const float e3[2] = {0, 1};
  CHECK(sfv_store_add(x, "x1", e1, 2) == SFV_OK);
  CHECK(sfv_store_add(x, "x2", e2, 2) == SFV_OK);
  CHECK(sfv_store_add(y, "y1", e3, 2) == SFV_OK);

  cfg.k = 1;
  cfg.pos_threshold = -1.0;
  cfg.neg_threshold = -1.0;
  cfg.pos_mode = SFV_THRESHOLD_ABOVE;
  cfg.neg_mode = SFV_THRESHOLD_ABOVE;
  sfv_pairset* ps = nullptr;
  REQUIRE(sfv_mine(x, y, &cfg, 1, &ps) == SFV_OK);
  CHECK(sfv_pairset_size(ps) == 4);  // 2 positives + 2 negatives

  const char* anchor = nullptr;
  const char* partner = nullptr;
  int label = -1;
  double score = 0.0;
  REQUIRE(sfv_pairset_entry(ps, 0, &anchor, &partner, &label, &score) ==
          SFV_OK);
  CHECK(std::string(anchor) == "x1");
  CHECK(label == 1);

  const std::string path = temp_path("pairs.csv");
  CHECK(sfv_pairset_write(ps, path.c_str()) == SFV_OK);
  sfv_pairset* back = nullptr;
  REQUIRE(sfv_pairset_read(path.c_str(), &back) == SFV_OK);
  CHECK(sfv_pairset_size(back) == 4);
  sfv_pairset_free(back);
  sfv_pairset_free(ps);
  sfv_store_free(x);
  sfv_store_free(y);
}

TEST_CASE("model round trip through the C API") {
  sfv_encoder_config cfg;
  sfv_encoder_config_init(&cfg);
  CHECK(cfg.input_height == 64);
  CHECK(cfg.embedding_dim == 300);
  CHECK(cfg.head_hidden_units == 256);

  // Tiny architecture keeps the checkpoint small.
  cfg.input_height = 8;
  cfg.input_width = 8;
  cfg.input_channels = 1;
  cfg.block_channels[0] = 2;
  cfg.block_channels[1] = 3;
  cfg.block_channels[2] = 4;
  cfg.fc1_units = 8;
  cfg.embedding_dim = 4;
  cfg.head_hidden_units = 3;

  sfv_model* model = nullptr;
  REQUIRE(sfv_model_init(&cfg, 123, &model) == SFV_OK);
  const std::string path = temp_path("model.snw");
  CHECK(sfv_model_save(model, path.c_str()) == SFV_OK);

  sfv_model* back = nullptr;
  REQUIRE(sfv_model_load(path.c_str(), &back) == SFV_OK);
  sfv_encoder_config round;
  REQUIRE(sfv_model_config(back, &round) == SFV_OK);
  CHECK(round.input_height == 8);
  CHECK(round.embedding_dim == 4);
  CHECK(round.head_hidden_units == 3);
  sfv_model_free(back);
  sfv_model_free(model);

  cfg.input_height = 7;  // not divisible by 8
  sfv_model* bad = nullptr;
  CHECK(sfv_model_init(&cfg, 1, &bad) == SFV_ERR_INVALID);
}

TEST_CASE("EER through the C API") {
  const double genuine[3] = {0.9, 0.8, 0.4};
  const double impostor[3] = {0.6, 0.3, 0.2};
  double eer = 0.0, threshold = 0.0;
  REQUIRE(sfv_compute_eer(genuine, 3, impostor, 3, &eer, &threshold) == SFV_OK);
  CHECK(eer == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(sfv_compute_eer(genuine, 0, impostor, 3, &eer, &threshold) ==
        SFV_ERR_INVALID);
}

TEST_CASE("lr schedule through the C API") {
  sfv_train_config cfg;
  sfv_train_config_init(&cfg);
  CHECK(cfg.epochs == 300);
  CHECK(cfg.momentum == 0.91);
  CHECK(cfg.weight_decay == 1e-5);
  double lr = 0.0;
  REQUIRE(sfv_lr_schedule(0, &cfg, &lr) == SFV_OK);
  CHECK(lr == 1e-2);
  REQUIRE(sfv_lr_schedule(299, &cfg, &lr) == SFV_OK);
  CHECK(lr == 1e-8);
  CHECK(sfv_lr_schedule(300, &cfg, &lr) == SFV_ERR_INVALID);
}

TEST_CASE("NULL arguments are rejected, not dereferenced") {
  CHECK(sfv_store_create(4, nullptr) == SFV_ERR_INVALID);
  CHECK(sfv_store_write(nullptr, "x") == SFV_ERR_INVALID);
  CHECK(sfv_cosine(nullptr, nullptr, 2, nullptr) == SFV_ERR_INVALID);
  CHECK(sfv_mine(nullptr, nullptr, nullptr, 1, nullptr) == SFV_ERR_INVALID);
  CHECK(sfv_synth(nullptr, 0, nullptr) == SFV_ERR_INVALID);
  CHECK(sfv_evaluate(nullptr, nullptr, nullptr, nullptr, 10, 300, 300, 0, 1,
                     nullptr, nullptr) == SFV_ERR_INVALID);
}

TEST_CASE("synthetic pipeline stages through the C API") {
  const fs::path dir = fs::temp_directory_path() / "sfv_test_capi" / "pipe";
  fs::remove_all(dir);

  sfv_synth_spec spec;
  sfv_synth_spec_init(&spec);
  CHECK(spec.num_identities == 20);
  CHECK(spec.split_fraction == 0.5);
  spec.num_identities = 4;
  spec.images_per_identity = 6;
  spec.image_size = 16;
  REQUIRE(sfv_synth(&spec, 11, dir.string().c_str()) == SFV_OK);
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK(fs::exists(dir / "manifest_a.txt"));
  CHECK(fs::exists(dir / "labels.csv"));

  // Invalid spec surfaces as a status, message names the constraint.
  spec.num_identities = 1;
  CHECK(sfv_synth(&spec, 11, dir.string().c_str()) == SFV_ERR_INVALID);
  CHECK(std::string(sfv_last_error()).find("identities") != std::string::npos);

  const std::string trials = (dir / "trials.csv").string();
  REQUIRE(sfv_build_trials((dir / "manifest.txt").string().c_str(),
                           (dir / "labels.csv").string().c_str(), 3, 10, 10, 5,
                           trials.c_str()) == SFV_OK);
  CHECK(fs::exists(trials));

  const std::string split_a = (dir / "ext_a.txt").string();
  const std::string split_b = (dir / "ext_b.txt").string();
  REQUIRE(sfv_split_disjoint((dir / "manifest.txt").string().c_str(),
                             (dir / "labels.csv").string().c_str(), 0.5, 3,
                             split_a.c_str(), split_b.c_str()) == SFV_OK);
  CHECK(fs::exists(split_a));
  CHECK(fs::exists(split_b));
}
