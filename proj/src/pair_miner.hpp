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

#ifndef SFV_PAIR_MINER_HPP_
#define SFV_PAIR_MINER_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "embeddings.hpp"

namespace sfv {

enum class ThresholdMode { kBelow, kAbove };

const char* threshold_mode_name(ThresholdMode mode);
ThresholdMode threshold_mode_from_name(const std::string& name);

// Free parameters of the pair selection procedure. The per-side threshold
// test keeps a candidate when score < threshold (kBelow) or
// score >= threshold (kAbove). kAbove with threshold -1 disables a side's
// filter entirely. Defaults follow the literal pseudocode reading ("<");
// the prose reading (keep the highest-scoring survivors) is the kAbove flip.
struct MiningConfig {
  int k = 10;
  double pos_threshold = 0.3;
  double neg_threshold = 0.1;
  ThresholdMode pos_mode = ThresholdMode::kBelow;
  ThresholdMode neg_mode = ThresholdMode::kBelow;
  bool bidirectional = false;

  void validate() const;
};

// One mined training sample. label 1 = positive (both ids from the same
// store), label 0 = negative (ids from different, identity-disjoint stores).
struct TrainingPair {
  std::string anchor_id;
  std::string partner_id;
  int label = 0;
  double score = 0.0;  // cosine similarity recorded at mining time
};

struct PairSetProvenance {
  std::string x_name;
  std::string y_name;
};

// Mining output in canonical order:
// (anchor id asc, label desc, score desc, partner id asc).
struct PairSet {
  std::vector<TrainingPair> pairs;
  MiningConfig config;
  PairSetProvenance provenance;
};

// Production top-k selection: bounded-heap partial selection of the k best
// candidates by (score desc, id asc). Returns indices into scores/ids,
// best first. The full-sort oracle this is checked against lives in the
// test suite.
std::vector<uint32_t> top_k_indices(const std::vector<double>& scores,
                                    const std::vector<const std::string*>& ids,
                                    size_t k);

// For each anchor x_i in X: score against every other member of X, take the
// k highest by cosine, keep those passing the positive threshold test, emit
// as label-1 pairs. Requires |X| >= 2 and k < |X| (self excluded).
std::vector<TrainingPair> mine_positives(const EmbeddingStore& x,
                                         const MiningConfig& cfg,
                                         unsigned threads = 1);

// For each anchor x_i in X: score against every y in Y, take the k highest,
// keep those passing the negative threshold test, emit as label-0 pairs.
// Identity-disjointness of X and Y is the caller's data contract and cannot
// be verified here; shared ids across the stores are rejected because they
// would make a pair its own partner. Requires k <= |Y|.
std::vector<TrainingPair> mine_negatives(const EmbeddingStore& x,
                                         const EmbeddingStore& y,
                                         const MiningConfig& cfg,
                                         unsigned threads = 1);

// Full procedure: positives within X plus negatives X -> Y; with
// cfg.bidirectional also positives within Y and negatives Y -> X. The result
// is canonically sorted and invariant to any permutation of store entries.
PairSet mine(const EmbeddingStore& x, const EmbeddingStore& y,
             const MiningConfig& cfg, unsigned threads = 1);

void canonical_pair_sort(std::vector<TrainingPair>& pairs);

// Pair-set text format: a "#pairset v1 ..." header echoing the config, then
// one "anchor_id,partner_id,label,score" line per pair, scores with 9
// significant digits.
void pairset_write(const PairSet& ps, std::ostream& os);
void pairset_write(const PairSet& ps, const std::string& path);
std::string pairset_to_string(const PairSet& ps);
PairSet pairset_read(std::istream& is, const std::string& origin);
PairSet pairset_read(const std::string& path);

}  // namespace sfv

#endif  // SFV_PAIR_MINER_HPP_
