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

#ifndef SFV_EMBEDDINGS_HPP_
#define SFV_EMBEDDINGS_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace sfv {

enum class EmbeddingSource { kEncoder, kRawPixel, kExternal };

// One embedded image. Construction enforces: finite entries, strictly
// positive Euclidean norm (a zero vector has no cosine direction and would
// silently corrupt top-k rankings), dimension > 0.
struct EmbeddingVector {
  std::string id;
  std::vector<float> values;
  double norm = 0.0;  // Euclidean norm, computed in double at construction

  EmbeddingVector(std::string id_in, std::vector<float> values_in);
};

// Immutable-after-load collection of embeddings with a fixed dimension and
// unique ids. Iteration follows insertion order; sort_by_id() re-sorts into
// the canonical order (ascending lexicographic by id) used by every
// deterministic downstream operation.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dim,
                          EmbeddingSource source = EmbeddingSource::kExternal);

  void add(std::string id, std::vector<float> values);

  int dim() const { return dim_; }
  size_t size() const { return entries_.size(); }
  const EmbeddingVector& at(size_t i) const { return entries_[i]; }
  const std::vector<EmbeddingVector>& entries() const { return entries_; }
  bool contains(const std::string& id) const {
    return index_.find(id) != index_.end();
  }
  EmbeddingSource source() const { return source_; }

  // Index permutation that visits entries in canonical id order.
  std::vector<size_t> sorted_order() const;
  void sort_by_id();

 private:
  int dim_;
  EmbeddingSource source_;
  std::vector<EmbeddingVector> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// Cosine similarity, computed in double precision regardless of storage
// precision so that top-k rankings are stable. Symmetric, in [-1, 1].
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Raw-buffer variant used by the C API; both inputs must have nonzero norm.
double cosine(const float* a, const float* b, size_t dim);

// Binary embedding file, little-endian: magic "EMB1", u32 count, u32 dim,
// then count*dim IEEE-754 float32 values row-major. Sidecar "<path>.ids"
// holds one UTF-8 id per line, in binary row order. Round trips are
// bit-exact for values and lossless for ids.
void store_write(const EmbeddingStore& store, const std::string& path);
EmbeddingStore store_read(const std::string& path);

}  // namespace sfv

#endif  // SFV_EMBEDDINGS_HPP_
