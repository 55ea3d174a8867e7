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

#ifndef SFV_DATAIO_HPP_
#define SFV_DATAIO_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "embeddings.hpp"
#include "tensor.hpp"

namespace sfv {

// Manifest text format: "#manifest v1" header, then one
// "id,relative_path[,label]" line per image. Paths resolve against `root`
// (the manifest file's directory). Identity labels are optional; the mining
// and training entry points only accept label-free manifests, so ground
// truth can never leak into the unsupervised path.
struct ManifestRecord {
  std::string id;
  std::string path;
  std::string label;  // empty when absent
};

struct Manifest {
  std::string root;
  std::vector<ManifestRecord> records;

  bool fully_labeled() const;
  std::string resolve(const ManifestRecord& rec) const;
};

Manifest manifest_load(const std::string& path);
void manifest_write(const Manifest& m, const std::string& path);

// Partitions identities (never images) into two manifests A and B with
// C_A and C_B disjoint by construction. Image counts balance to within one
// identity's worth of fraction * total. Labels are consumed here and
// stripped from both outputs.
std::pair<Manifest, Manifest> split_disjoint(const Manifest& labeled,
                                             double fraction, uint64_t seed);

// Decoded images resized to a fixed shape, addressable by id.
struct ImageSet {
  int height = 0;
  int width = 0;
  std::vector<std::string> ids;
  std::unordered_map<std::string, size_t> index;
  Tensor<float> pixels;  // [N, height, width, 3], values in [0, 1]

  size_t size() const { return ids.size(); }
  Tensor<float> gather(const std::vector<size_t>& rows) const;
};

ImageSet load_images(const Manifest& m, int height, int width,
                     unsigned threads = 1);

// Model-free embedding fallback: downsample to an 8x8 RGB thumbnail (192
// values), flatten, L2-normalize, then project to target_dim with a seeded
// Gaussian random projection. Deterministic under the seed.
EmbeddingStore raw_embed(const Manifest& m, int target_dim, uint64_t seed,
                         unsigned threads = 1);
constexpr int kRawThumbSide = 8;
constexpr int kRawThumbValues = kRawThumbSide * kRawThumbSide * 3;

// Synthetic identity clusters: one seeded template image per identity, each
// sample is template + seeded pixel noise, clamped to [0, 1]. With
// separation/noise > 1 the expected intra-identity raw-pixel cosine exceeds
// the inter-identity one. Identity labels go only to the sidecar.
struct SyntheticSpec {
  int num_identities = 20;
  int images_per_identity = 20;
  int image_size = 32;
  double separation = 1.0;
  double noise = 0.2;
  uint64_t seed = 0;

  void validate() const;
};

// Writes out_dir/images/*.png, out_dir/manifest.txt (label-free) and
// out_dir/labels.csv ("id,identity" lines).
void synth_generate(const SyntheticSpec& spec, const std::string& out_dir);

std::unordered_map<std::string, std::string> sidecar_load(
    const std::string& path);

}  // namespace sfv

#endif  // SFV_DATAIO_HPP_
