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

#include <filesystem>
#include <fstream>
#include <set>

#include "dataio.hpp"
#include "doctest.h"
#include "error.hpp"
#include "image.hpp"
#include "io_util.hpp"
#include "pair_miner.hpp"
#include "rng.hpp"

using namespace sfv;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sfv_test_dataio" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Manifest labeled_fixture(const fs::path& dir, int identities,
                         int per_identity) {
  Manifest m;
  m.root = dir.string();
  Rng rng(4);
  int serial = 0;
  for (int i = 0; i < identities; ++i) {
    for (int j = 0; j < per_identity; ++j, ++serial) {
      Image img(6, 6);
      for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
      const std::string rel = "im" + std::to_string(serial) + ".png";
      write_png((dir / rel).string(), img);
      m.records.push_back(ManifestRecord{"im" + std::to_string(serial), rel,
                                         "person" + std::to_string(i)});
    }
  }
  return m;
}

}  // namespace

TEST_CASE("manifest round trip and validation") {
  const fs::path dir = fresh_dir("manifest");
  const Manifest m = labeled_fixture(dir, 2, 3);
  const std::string path = (dir / "manifest.txt").string();
  manifest_write(m, path);
  const Manifest back = manifest_load(path);
  REQUIRE(back.records.size() == 6);
  CHECK(back.fully_labeled());
  CHECK(back.records[0].id == "im0");
  CHECK(back.records[0].label == "person0");
}

TEST_CASE("empty manifest is valid") {
  const fs::path dir = fresh_dir("empty");
  const std::string path = (dir / "manifest.txt").string();
  std::ofstream(path) << "#manifest v1\n";
  const Manifest m = manifest_load(path);
  CHECK(m.records.empty());
  CHECK(!m.fully_labeled());
}

TEST_CASE("manifest failure modes") {
  const fs::path dir = fresh_dir("badmanifest");

  SUBCASE("duplicate ids name the offender") {
    Image img(4, 4);
    img.pixels.assign(img.pixels.size(), 0.5f);
    write_png((dir / "x.png").string(), img);
    const std::string path = (dir / "manifest.txt").string();
    std::ofstream(path) << "#manifest v1\ndup,x.png\ndup,x.png\n";
    CHECK_THROWS_WITH_AS(manifest_load(path), doctest::Contains("dup"), Error);
  }
  SUBCASE("missing header") {
    const std::string path = (dir / "noheader.txt").string();
    std::ofstream(path) << "id,path\n";
    CHECK_THROWS_AS(manifest_load(path), Error);
  }
  SUBCASE("unresolvable image path") {
    const std::string path = (dir / "ghost.txt").string();
    std::ofstream(path) << "#manifest v1\ng,ghost.png\n";
    CHECK_THROWS_WITH_AS(manifest_load(path), doctest::Contains("ghost.png"),
                         Error);
  }
  SUBCASE("undecodable image") {
    std::ofstream(dir / "fake.png") << "this is not a png";
    const std::string path = (dir / "fake_manifest.txt").string();
    std::ofstream(path) << "#manifest v1\nf,fake.png\n";
    const Manifest m = manifest_load(path);  // structure is fine
    CHECK_THROWS_AS(load_images(m, 8, 8), Error);  // decode is not
  }
}

TEST_CASE("split_disjoint partitions identities, never images") {
  const fs::path dir = fresh_dir("split");
  const Manifest m = labeled_fixture(dir, 100, 10);
  const auto [a, b] = split_disjoint(m, 0.5, 17);
  CHECK(a.records.size() == 500);
  CHECK(b.records.size() == 500);

  std::set<std::string> ids_a, labels_a, labels_b;
  std::unordered_map<std::string, std::string> truth;
  for (const auto& rec : m.records) truth[rec.id] = rec.label;
  for (const auto& rec : a.records) {
    CHECK(rec.label.empty());  // outputs are label-free
    ids_a.insert(rec.id);
    labels_a.insert(truth.at(rec.id));
  }
  for (const auto& rec : b.records) {
    CHECK(rec.label.empty());
    CHECK(ids_a.count(rec.id) == 0);
    labels_b.insert(truth.at(rec.id));
  }
  CHECK(labels_a.size() == 50);
  CHECK(labels_b.size() == 50);
  for (const auto& ident : labels_a) CHECK(labels_b.count(ident) == 0);
}

TEST_CASE("split_disjoint determinism and degenerate inputs") {
  const fs::path dir = fresh_dir("split2");
  const Manifest m = labeled_fixture(dir, 2, 3);

  const auto [a1, b1] = split_disjoint(m, 0.5, 3);
  const auto [a2, b2] = split_disjoint(m, 0.5, 3);
  REQUIRE(a1.records.size() == a2.records.size());
  for (size_t i = 0; i < a1.records.size(); ++i) {
    CHECK(a1.records[i].id == a2.records[i].id);
  }
  CHECK(a1.records.size() == 3);  // one identity per side
  CHECK(b1.records.size() == 3);

  Manifest unlabeled = m;
  for (auto& rec : unlabeled.records) rec.label.clear();
  CHECK_THROWS_AS(split_disjoint(unlabeled, 0.5, 3), Error);

  Manifest single = m;
  for (auto& rec : single.records) rec.label = "same";
  CHECK_THROWS_AS(split_disjoint(single, 0.5, 3), Error);

  CHECK_THROWS_AS(split_disjoint(m, 0.0, 3), Error);
  // Extreme fraction still leaves both sides nonempty.
  const auto [a3, b3] = split_disjoint(m, 0.99, 3);
  CHECK(!a3.records.empty());
  CHECK(!b3.records.empty());
}

TEST_CASE("decoded pixels stay in [0,1] and resizing matches the target") {
  const fs::path dir = fresh_dir("decode");
  const Manifest m = labeled_fixture(dir, 2, 2);
  const ImageSet set = load_images(m, 8, 8, /*threads=*/2);
  CHECK(set.size() == 4);
  CHECK(set.pixels.shape == std::vector<int>{4, 8, 8, 3});
  for (float v : set.pixels.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("PNG write/read round trip is exact at 8-bit resolution") {
  const fs::path dir = fresh_dir("png");
  Image img(5, 7);
  Rng rng(6);
  for (auto& p : img.pixels) {
    p = static_cast<float>(rng.below(256)) / 255.0f;  // already quantized
  }
  const std::string path = (dir / "rt.png").string();
  write_png(path, img);
  const Image back = read_image(path);
  REQUIRE(back.height == 5);
  REQUIRE(back.width == 7);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    CHECK(back.pixels[i] == img.pixels[i]);
  }
}

TEST_CASE("raw_embed basics") {
  const fs::path dir = fresh_dir("raw");
  Manifest m;
  m.root = dir.string();
  // Two identical images plus one different one.
  Image img(10, 10);
  Rng rng(7);
  for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
  write_png((dir / "a.png").string(), img);
  write_png((dir / "b.png").string(), img);
  Image other(10, 10);
  for (auto& p : other.pixels) p = static_cast<float>(rng.uniform());
  write_png((dir / "c.png").string(), other);
  m.records = {{"a", "a.png", ""}, {"b", "b.png", ""}, {"c", "c.png", ""}};

  CHECK(kRawThumbValues == 8 * 8 * 3);  // pre-projection dimension 192

  const EmbeddingStore store = raw_embed(m, 16, 21);
  REQUIRE(store.size() == 3);
  CHECK(store.dim() == 16);
  CHECK(cosine(store.at(0), store.at(1)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine(store.at(0), store.at(2)) < 0.9999);

  // Identical seeds produce identical bytes on disk.
  const std::string p1 = (dir / "s1.emb").string();
  const std::string p2 = (dir / "s2.emb").string();
  store_write(raw_embed(m, 16, 21), p1);
  store_write(raw_embed(m, 16, 21, /*threads=*/3), p2);
  CHECK(read_file_bytes(p1) == read_file_bytes(p2));
  CHECK(read_file_bytes(p1 + ".ids") == read_file_bytes(p2 + ".ids"));
}

TEST_CASE("synth_generate writes the dataset it promises") {
  const fs::path dir = fresh_dir("synth");
  SyntheticSpec spec;
  spec.num_identities = 5;
  spec.images_per_identity = 4;
  spec.image_size = 12;
  spec.seed = 33;
  synth_generate(spec, dir.string());

  const Manifest m = manifest_load((dir / "manifest.txt").string());
  CHECK(m.records.size() == 20);
  CHECK(!m.fully_labeled());  // labels only in the sidecar
  const auto labels = sidecar_load((dir / "labels.csv").string());
  CHECK(labels.size() == 20);
  std::set<std::string> identities;
  for (const auto& [id, ident] : labels) identities.insert(ident);
  CHECK(identities.size() == 5);

  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "images")) {
    ++files;
    (void)e;
  }
  CHECK(files == 20);
}

TEST_CASE("zero noise collapses each identity to a single image") {
  const fs::path dir = fresh_dir("zeronoise");
  SyntheticSpec spec;
  spec.num_identities = 2;
  spec.images_per_identity = 3;
  spec.image_size = 8;
  spec.noise = 0.0;
  spec.seed = 9;
  synth_generate(spec, dir.string());
  const Manifest m = manifest_load((dir / "manifest.txt").string());
  const ImageSet set = load_images(m, 8, 8);
  const int64_t row = 8 * 8 * 3;
  // Images 0..2 share identity 0; 3..5 share identity 1.
  for (int j = 1; j < 3; ++j) {
    for (int64_t p = 0; p < row; ++p) {
      CHECK(set.pixels.data[j * row + p] == set.pixels.data[p]);
    }
  }
  bool identities_differ = false;
  for (int64_t p = 0; p < row; ++p) {
    if (set.pixels.data[3 * row + p] != set.pixels.data[p]) {
      identities_differ = true;
      break;
    }
  }
  CHECK(identities_differ);
}

TEST_CASE("synth spec validation") {
  SyntheticSpec spec;
  spec.num_identities = 1;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.num_identities = 2;
  spec.separation = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.separation = 1.0;
  spec.noise = -0.1;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("well-separated synthetic clusters mine almost purely "
          "intra-identity positives") {
  // Monte Carlo over 10 seeds: separation/noise = 5, raw-pixel embeddings,
  // top-k positives checked against the withheld sidecar.
  int intra = 0, total = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const fs::path dir = fresh_dir("mc" + std::to_string(seed));
    SyntheticSpec spec;
    spec.num_identities = 8;
    spec.images_per_identity = 8;
    spec.image_size = 12;
    spec.separation = 1.0;
    spec.noise = 0.2;
    spec.seed = 1000 + seed;
    synth_generate(spec, dir.string());
    const Manifest m = manifest_load((dir / "manifest.txt").string());
    const auto labels = sidecar_load((dir / "labels.csv").string());
    const EmbeddingStore store = raw_embed(m, 32, 2000 + seed);

    MiningConfig cfg;
    cfg.k = 3;
    cfg.pos_threshold = -1.0;
    cfg.pos_mode = ThresholdMode::kAbove;
    for (const auto& p : mine_positives(store, cfg)) {
      ++total;
      intra += labels.at(p.anchor_id) == labels.at(p.partner_id) ? 1 : 0;
    }
  }
  CHECK(total == 10 * 8 * 8 * 3);
  CHECK(static_cast<double>(intra) / total >= 0.95);
}

TEST_CASE("sidecar parsing rejects malformed rows") {
  const fs::path dir = fresh_dir("sidecar");
  const std::string path = (dir / "labels.csv").string();
  std::ofstream(path) << "a,x\nb\n";
  CHECK_THROWS_AS(sidecar_load(path), Error);
  std::ofstream(path) << "a,x\na,y\n";
  CHECK_THROWS_AS(sidecar_load(path), Error);
}
