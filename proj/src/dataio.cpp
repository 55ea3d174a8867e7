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

#include "dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "error.hpp"
#include "image.hpp"
#include "io_util.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;

namespace sfv {

bool Manifest::fully_labeled() const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (r.label.empty()) return false;
  }
  return true;
}

std::string Manifest::resolve(const ManifestRecord& rec) const {
  return (fs::path(root) / rec.path).string();
}

Manifest manifest_load(const std::string& path) {
  std::ifstream is = open_in(path, /*binary=*/false);
  std::string line;
  if (!std::getline(is, line)) throw_format("manifest '" + path + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "#manifest v1") {
    throw_format("manifest '" + path + "': bad header");
  }

  Manifest m;
  m.root = fs::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";

  std::set<std::string> seen;
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw_format("manifest '" + path + "' line " + std::to_string(lineno) +
                   ": expected 2 or 3 fields");
    }
    ManifestRecord rec;
    rec.id = fields[0];
    rec.path = fields[1];
    if (fields.size() == 3) rec.label = fields[2];
    validate_id(rec.id, "manifest '" + path + "'");
    if (rec.path.empty()) {
      throw_format("manifest '" + path + "' line " + std::to_string(lineno) +
                   ": empty path");
    }
    if (fields.size() == 3 && rec.label.empty()) {
      throw_invalid("manifest '" + path + "' line " + std::to_string(lineno) +
                    ": empty label");
    }
    if (!seen.insert(rec.id).second) {
      throw_invalid("manifest '" + path + "': duplicate id '" + rec.id + "'");
    }
    const std::string full = m.resolve(rec);
    if (!fs::exists(full)) {
      throw_io("manifest '" + path + "': image path does not resolve: " + full);
    }
    m.records.push_back(std::move(rec));
  }
  return m;
}

void manifest_write(const Manifest& m, const std::string& path) {
  std::ofstream os = open_out(path, /*binary=*/false);
  os << "#manifest v1\n";
  for (const auto& r : m.records) {
    os << r.id << ',' << r.path;
    if (!r.label.empty()) os << ',' << r.label;
    os << '\n';
  }
  if (!os) throw_io("write failed: " + path);
}

std::pair<Manifest, Manifest> split_disjoint(const Manifest& labeled,
                                             double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw_invalid("split_disjoint: fraction must lie strictly in (0, 1)");
  }
  if (!labeled.fully_labeled()) {
    throw_invalid("split_disjoint: every record needs an identity label");
  }
  // Group records by identity; identities in canonical order before the
  // seeded shuffle so the split depends only on (content, seed).
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < labeled.records.size(); ++i) {
    groups[labeled.records[i].label].push_back(i);
  }
  if (groups.size() < 2) {
    throw_invalid("split_disjoint: need at least 2 identities, got " +
                  std::to_string(groups.size()));
  }
  std::vector<std::string> identities;
  identities.reserve(groups.size());
  for (const auto& [label, _] : groups) identities.push_back(label);
  Rng rng(derive_seed(seed, "split-disjoint"));
  rng.shuffle(identities);

  const double target = fraction * static_cast<double>(labeled.records.size());
  std::vector<std::string> side_a, side_b;
  size_t count_a = 0;
  for (const auto& identity : identities) {
    if (static_cast<double>(count_a) < target) {
      side_a.push_back(identity);
      count_a += groups[identity].size();
    } else {
      side_b.push_back(identity);
    }
  }
  // Extreme fractions with few identities can leave a side empty; keep both
  // sides populated by donating one identity.
  if (side_b.empty()) {
    side_b.push_back(side_a.back());
    side_a.pop_back();
  }
  if (side_a.empty()) {
    side_a.push_back(side_b.back());
    side_b.pop_back();
  }

  std::set<std::string> a_set(side_a.begin(), side_a.end());
  Manifest out_a, out_b;
  out_a.root = labeled.root;
  out_b.root = labeled.root;
  for (const auto& rec : labeled.records) {
    ManifestRecord stripped{rec.id, rec.path, ""};
    if (a_set.count(rec.label) != 0) {
      out_a.records.push_back(stripped);
    } else {
      out_b.records.push_back(stripped);
    }
  }
  return {std::move(out_a), std::move(out_b)};
}

Tensor<float> ImageSet::gather(const std::vector<size_t>& rows) const {
  Tensor<float> out(
      {static_cast<int>(rows.size()), height, width, 3});
  const int64_t row_len = static_cast<int64_t>(height) * width * 3;
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(pixels.data.begin() + static_cast<int64_t>(rows[i]) * row_len,
                row_len, out.data.begin() + static_cast<int64_t>(i) * row_len);
  }
  return out;
}

ImageSet load_images(const Manifest& m, int height, int width,
                     unsigned threads) {
  ImageSet set;
  set.height = height;
  set.width = width;
  set.ids.reserve(m.records.size());
  for (const auto& rec : m.records) set.ids.push_back(rec.id);
  for (size_t i = 0; i < set.ids.size(); ++i) set.index[set.ids[i]] = i;
  set.pixels =
      Tensor<float>({static_cast<int>(m.records.size()), height, width, 3});

  const int64_t row_len = static_cast<int64_t>(height) * width * 3;
  parallel_for(m.records.size(), threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      Image img = read_image(m.resolve(m.records[i]));
      img = resize_bilinear(img, height, width);
      std::copy_n(img.pixels.begin(), row_len,
                  set.pixels.data.begin() + static_cast<int64_t>(i) * row_len);
    }
  });
  return set;
}

EmbeddingStore raw_embed(const Manifest& m, int target_dim, uint64_t seed,
                         unsigned threads) {
  if (target_dim < 1) throw_invalid("raw_embed: target dim must be >= 1");

  // One fixed projection matrix for the whole store.
  Rng proj_rng(derive_seed(seed, "raw-projection"));
  std::vector<double> projection(static_cast<size_t>(kRawThumbValues) *
                                 target_dim);
  for (auto& v : projection) v = proj_rng.normal();

  std::vector<std::vector<float>> rows(m.records.size());
  parallel_for(m.records.size(), threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      Image img = read_image(m.resolve(m.records[i]));
      img = resize_bilinear(img, kRawThumbSide, kRawThumbSide);
      double sq = 0.0;
      for (float p : img.pixels) sq += static_cast<double>(p) * p;
      if (!(sq > 0.0)) {
        throw_invalid("raw_embed: image '" + m.records[i].id +
                      "' flattens to a zero vector");
      }
      const double inv_norm = 1.0 / std::sqrt(sq);
      std::vector<float> out(static_cast<size_t>(target_dim));
      for (int d = 0; d < target_dim; ++d) {
        double acc = 0.0;
        for (int j = 0; j < kRawThumbValues; ++j) {
          acc += static_cast<double>(img.pixels[j]) * inv_norm *
                 projection[static_cast<size_t>(j) * target_dim + d];
        }
        out[static_cast<size_t>(d)] = static_cast<float>(acc);
      }
      rows[i] = std::move(out);
    }
  });

  EmbeddingStore store(target_dim, EmbeddingSource::kRawPixel);
  for (size_t i = 0; i < rows.size(); ++i) {
    store.add(m.records[i].id, std::move(rows[i]));
  }
  return store;
}

void SyntheticSpec::validate() const {
  if (num_identities < 2) {
    throw_invalid("synthetic spec: need at least 2 identities");
  }
  if (images_per_identity < 1) {
    throw_invalid("synthetic spec: images_per_identity must be >= 1");
  }
  if (image_size < 1) throw_invalid("synthetic spec: image size must be >= 1");
  if (!(separation > 0.0)) {
    throw_invalid("synthetic spec: separation must be > 0");
  }
  if (noise < 0.0) throw_invalid("synthetic spec: noise must be >= 0");
}

void synth_generate(const SyntheticSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(fs::path(out_dir) / "images");

  Manifest manifest;
  manifest.root = out_dir;
  std::vector<std::pair<std::string, std::string>> sidecar;

  const int side = spec.image_size;
  // Identity templates are low-frequency: a coarse random grid upsampled to
  // full resolution. Per-pixel templates would mostly vanish under the
  // encoder's pooling chain; smooth blobs keep identity structure visible at
  // every scale.
  const int grid_side = std::max(2, side / 4);
  char buf[64];
  for (int ident = 0; ident < spec.num_identities; ++ident) {
    std::snprintf(buf, sizeof(buf), "id%04d", ident);
    const std::string identity = buf;

    Image grid(grid_side, grid_side);
    Rng trng(derive_seed(spec.seed, "synth-template",
                         static_cast<uint64_t>(ident)));
    for (auto& p : grid.pixels) {
      p = static_cast<float>(std::clamp(
          0.5 + 0.25 * spec.separation * trng.normal(), 0.0, 1.0));
    }
    const Image tmpl = resize_bilinear(grid, side, side);

    for (int j = 0; j < spec.images_per_identity; ++j) {
      const int64_t serial =
          static_cast<int64_t>(ident) * spec.images_per_identity + j;
      std::snprintf(buf, sizeof(buf), "img%05d", static_cast<int>(serial));
      const std::string id = buf;

      Image sample = tmpl;
      Rng srng(derive_seed(spec.seed, "synth-sample",
                           static_cast<uint64_t>(serial)));
      for (auto& p : sample.pixels) {
        p = static_cast<float>(
            std::clamp(static_cast<double>(p) + 0.25 * spec.noise * srng.normal(),
                       0.0, 1.0));
      }
      const std::string rel = "images/" + id + ".png";
      write_png((fs::path(out_dir) / rel).string(), sample);
      manifest.records.push_back(ManifestRecord{id, rel, ""});
      sidecar.emplace_back(id, identity);
    }
  }

  manifest_write(manifest, (fs::path(out_dir) / "manifest.txt").string());
  std::ofstream os =
      open_out((fs::path(out_dir) / "labels.csv").string(), /*binary=*/false);
  for (const auto& [id, identity] : sidecar) {
    os << id << ',' << identity << '\n';
  }
  if (!os) throw_io("write failed: " + out_dir + "/labels.csv");
}

std::unordered_map<std::string, std::string> sidecar_load(
    const std::string& path) {
  std::ifstream is = open_in(path, /*binary=*/false);
  std::unordered_map<std::string, std::string> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw_format("sidecar '" + path + "' line " + std::to_string(lineno) +
                   ": expected 'id,identity'");
    }
    if (!out.emplace(fields[0], fields[1]).second) {
      throw_invalid("sidecar '" + path + "': duplicate id '" + fields[0] + "'");
    }
  }
  return out;
}

}  // namespace sfv
