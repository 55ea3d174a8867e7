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

#include "embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "error.hpp"
#include "io_util.hpp"

namespace sfv {

namespace {
constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
}

EmbeddingVector::EmbeddingVector(std::string id_in,
                                 std::vector<float> values_in)
    : id(std::move(id_in)), values(std::move(values_in)) {
  validate_id(id, "embedding");
  if (values.empty()) throw_invalid("embedding '" + id + "': empty vector");
  double sq = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw_invalid("embedding '" + id + "': non-finite entry");
    }
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  norm = std::sqrt(sq);
  if (!(norm > 0.0)) {
    throw_invalid("embedding '" + id + "': zero-norm vector rejected");
  }
}

EmbeddingStore::EmbeddingStore(int dim, EmbeddingSource source)
    : dim_(dim), source_(source) {
  if (dim <= 0) throw_invalid("embedding store: dimension must be positive");
}

void EmbeddingStore::add(std::string id, std::vector<float> values) {
  if (static_cast<int>(values.size()) != dim_) {
    throw_dim("embedding '" + id + "': dimension " +
              std::to_string(values.size()) + " does not match store dim " +
              std::to_string(dim_));
  }
  EmbeddingVector vec(std::move(id), std::move(values));
  auto [it, inserted] = index_.emplace(vec.id, entries_.size());
  if (!inserted) throw_invalid("duplicate embedding id: " + vec.id);
  entries_.push_back(std::move(vec));
}

std::vector<size_t> EmbeddingStore::sorted_order() const {
  std::vector<size_t> order(entries_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [this](size_t a, size_t b) {
    return entries_[a].id < entries_[b].id;
  });
  return order;
}

void EmbeddingStore::sort_by_id() {
  std::sort(entries_.begin(), entries_.end(),
            [](const EmbeddingVector& a, const EmbeddingVector& b) {
              return a.id < b.id;
            });
  index_.clear();
  for (size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].id] = i;
}

double cosine(const float* a, const float* b, size_t dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < dim; ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw_invalid("cosine: zero-norm input");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size()) {
    throw_dim("cosine: dimension mismatch (" +
              std::to_string(a.values.size()) + " vs " +
              std::to_string(b.values.size()) + ")");
  }
  double dot = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    dot += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
  }
  return dot / (a.norm * b.norm);
}

void store_write(const EmbeddingStore& store, const std::string& path) {
  std::ofstream os = open_out(path);
  os.write(kMagic, 4);
  put_u32le(os, static_cast<uint32_t>(store.size()));
  put_u32le(os, static_cast<uint32_t>(store.dim()));
  for (size_t i = 0; i < store.size(); ++i) {
    for (float v : store.at(i).values) put_f32le(os, v);
  }
  if (!os) throw_io("write failed: " + path);
  os.close();

  std::ofstream ids = open_out(path + ".ids", /*binary=*/false);
  for (size_t i = 0; i < store.size(); ++i) {
    ids << store.at(i).id << '\n';
  }
  if (!ids) throw_io("write failed: " + path + ".ids");
}

EmbeddingStore store_read(const std::string& path) {
  std::ifstream is = open_in(path);
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw_format("embedding file '" + path + "': bad magic");
  }
  uint32_t count = 0, dim = 0;
  if (!get_u32le(is, &count) || !get_u32le(is, &dim)) {
    throw_format("embedding file '" + path + "': truncated header");
  }
  if (dim == 0) throw_format("embedding file '" + path + "': zero dimension");

  std::vector<std::string> ids;
  {
    std::ifstream idf = open_in(path + ".ids", /*binary=*/false);
    std::string line;
    while (std::getline(idf, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ids.push_back(line);
    }
  }
  if (ids.size() != count) {
    throw_format("embedding file '" + path + "': id count " +
                 std::to_string(ids.size()) + " does not match header count " +
                 std::to_string(count));
  }

  EmbeddingStore store(static_cast<int>(dim));
  std::vector<float> row(dim);
  for (uint32_t i = 0; i < count; ++i) {
    for (uint32_t j = 0; j < dim; ++j) {
      if (!get_f32le(is, &row[j])) {
        throw_format("embedding file '" + path + "': truncated payload at row " +
                     std::to_string(i));
      }
    }
    store.add(ids[i], row);
  }
  return store;
}

}  // namespace sfv
