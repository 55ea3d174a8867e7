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

#include "pair_miner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "error.hpp"
#include "io_util.hpp"
#include "parallel.hpp"

namespace sfv {

const char* threshold_mode_name(ThresholdMode mode) {
  return mode == ThresholdMode::kBelow ? "below" : "above";
}

ThresholdMode threshold_mode_from_name(const std::string& name) {
  if (name == "below") return ThresholdMode::kBelow;
  if (name == "above") return ThresholdMode::kAbove;
  throw_invalid("unknown threshold mode: " + name);
}

void MiningConfig::validate() const {
  if (k < 1) throw_invalid("mining config: k must be >= 1");
  if (pos_threshold < -1.0 || pos_threshold > 1.0) {
    throw_invalid("mining config: pos_threshold must lie in [-1, 1]");
  }
  if (neg_threshold < -1.0 || neg_threshold > 1.0) {
    throw_invalid("mining config: neg_threshold must lie in [-1, 1]");
  }
}

namespace {

bool passes(double score, double threshold, ThresholdMode mode) {
  return mode == ThresholdMode::kBelow ? score < threshold : score >= threshold;
}

// Heap comparator ordering candidate i before j when i is the better
// neighbor: higher score, ties broken by ascending id for determinism.
struct Better {
  const std::vector<double>& scores;
  const std::vector<const std::string*>& ids;
  bool operator()(uint32_t i, uint32_t j) const {
    if (scores[i] != scores[j]) return scores[i] > scores[j];
    return *ids[i] < *ids[j];
  }
};

// Cosine between raw float rows with precomputed norms.
double cosine_rows(const float* a, double norm_a, const float* b,
                   double norm_b, int dim) {
  double dot = 0.0;
  for (int i = 0; i < dim; ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return dot / (norm_a * norm_b);
}

}  // namespace

std::vector<uint32_t> top_k_indices(const std::vector<double>& scores,
                                    const std::vector<const std::string*>& ids,
                                    size_t k) {
  if (k > scores.size()) {
    throw_invalid("top-k: k exceeds candidate count");
  }
  Better better{scores, ids};
  // With `better` as the comparator the heap top is the worst of the kept k.
  std::priority_queue<uint32_t, std::vector<uint32_t>, Better> heap(better);
  for (uint32_t i = 0; i < scores.size(); ++i) {
    if (heap.size() < k) {
      heap.push(i);
    } else if (!heap.empty() && better(i, heap.top())) {
      heap.pop();
      heap.push(i);
    }
  }
  std::vector<uint32_t> out(heap.size());
  for (size_t pos = heap.size(); pos-- > 0;) {
    out[pos] = heap.top();
    heap.pop();
  }
  return out;
}

namespace {

// Shared scan: for each anchor of `anchors`, score all `candidates`
// (skipping the anchor itself when the stores are the same object), select
// top k, threshold-filter, emit pairs with the given label. Results land in
// per-anchor slots so the merge is deterministic for any thread count.
std::vector<TrainingPair> mine_side(const EmbeddingStore& anchors,
                                    const EmbeddingStore& candidates,
                                    bool same_store, int label, int k,
                                    double threshold, ThresholdMode mode,
                                    unsigned threads) {
  const size_t na = anchors.size();
  std::vector<std::vector<TrainingPair>> slots(na);

  parallel_for(na, threads, [&](size_t begin, size_t end) {
    std::vector<double> scores;
    std::vector<const std::string*> ids;
    for (size_t ai = begin; ai < end; ++ai) {
      const EmbeddingVector& anchor = anchors.at(ai);
      scores.clear();
      ids.clear();
      for (size_t ci = 0; ci < candidates.size(); ++ci) {
        if (same_store && ci == ai) continue;
        const EmbeddingVector& cand = candidates.at(ci);
        scores.push_back(cosine_rows(anchor.values.data(), anchor.norm,
                                     cand.values.data(), cand.norm,
                                     anchors.dim()));
        ids.push_back(&cand.id);
      }
      const std::vector<uint32_t> best =
          top_k_indices(scores, ids, static_cast<size_t>(k));
      auto& out = slots[ai];
      for (uint32_t idx : best) {
        if (!passes(scores[idx], threshold, mode)) continue;
        out.push_back(TrainingPair{anchor.id, *ids[idx], label, scores[idx]});
      }
    }
  });

  std::vector<TrainingPair> pairs;
  for (auto& slot : slots) {
    pairs.insert(pairs.end(), std::make_move_iterator(slot.begin()),
                 std::make_move_iterator(slot.end()));
  }
  return pairs;
}

void check_no_shared_ids(const EmbeddingStore& x, const EmbeddingStore& y) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (y.contains(x.at(i).id)) {
      throw_invalid("stores share id '" + x.at(i).id +
                    "'; cross-store pairs must not self-pair");
    }
  }
}

}  // namespace

std::vector<TrainingPair> mine_positives(const EmbeddingStore& x,
                                         const MiningConfig& cfg,
                                         unsigned threads) {
  cfg.validate();
  if (x.size() < 2) {
    throw_invalid("mine_positives: need at least 2 embeddings, got " +
                  std::to_string(x.size()));
  }
  if (static_cast<size_t>(cfg.k) >= x.size()) {
    throw_invalid("mine_positives: k=" + std::to_string(cfg.k) +
                  " must be smaller than |X|=" + std::to_string(x.size()));
  }
  return mine_side(x, x, /*same_store=*/true, /*label=*/1, cfg.k,
                   cfg.pos_threshold, cfg.pos_mode, threads);
}

std::vector<TrainingPair> mine_negatives(const EmbeddingStore& x,
                                         const EmbeddingStore& y,
                                         const MiningConfig& cfg,
                                         unsigned threads) {
  cfg.validate();
  if (x.size() == 0 || y.size() == 0) {
    throw_invalid("mine_negatives: both stores must be nonempty");
  }
  if (x.dim() != y.dim()) {
    throw_dim("mine_negatives: store dimensions differ (" +
              std::to_string(x.dim()) + " vs " + std::to_string(y.dim()) + ")");
  }
  if (static_cast<size_t>(cfg.k) > y.size()) {
    throw_invalid("mine_negatives: k=" + std::to_string(cfg.k) +
                  " exceeds |Y|=" + std::to_string(y.size()));
  }
  check_no_shared_ids(x, y);
  return mine_side(x, y, /*same_store=*/false, /*label=*/0, cfg.k,
                   cfg.neg_threshold, cfg.neg_mode, threads);
}

void canonical_pair_sort(std::vector<TrainingPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const TrainingPair& a, const TrainingPair& b) {
              if (a.anchor_id != b.anchor_id) return a.anchor_id < b.anchor_id;
              if (a.label != b.label) return a.label > b.label;
              if (a.score != b.score) return a.score > b.score;
              return a.partner_id < b.partner_id;
            });
}

PairSet mine(const EmbeddingStore& x, const EmbeddingStore& y,
             const MiningConfig& cfg, unsigned threads) {
  // Canonical copies make the output independent of insertion order.
  EmbeddingStore xs = x;
  EmbeddingStore ys = y;
  xs.sort_by_id();
  ys.sort_by_id();

  PairSet result;
  result.config = cfg;

  auto pos = mine_positives(xs, cfg, threads);
  auto neg = mine_negatives(xs, ys, cfg, threads);
  result.pairs.reserve(pos.size() + neg.size());
  std::move(pos.begin(), pos.end(), std::back_inserter(result.pairs));
  std::move(neg.begin(), neg.end(), std::back_inserter(result.pairs));
  if (cfg.bidirectional) {
    auto pos_y = mine_positives(ys, cfg, threads);
    auto neg_y = mine_negatives(ys, xs, cfg, threads);
    std::move(pos_y.begin(), pos_y.end(), std::back_inserter(result.pairs));
    std::move(neg_y.begin(), neg_y.end(), std::back_inserter(result.pairs));
  }
  canonical_pair_sort(result.pairs);
  return result;
}

void pairset_write(const PairSet& ps, std::ostream& os) {
  os << "#pairset v1 k=" << ps.config.k
     << " pos_t=" << format_score(ps.config.pos_threshold)
     << " neg_t=" << format_score(ps.config.neg_threshold)
     << " mode=" << threshold_mode_name(ps.config.pos_mode) << "/"
     << threshold_mode_name(ps.config.neg_mode)
     << " bidir=" << (ps.config.bidirectional ? 1 : 0) << "\n";
  for (const TrainingPair& p : ps.pairs) {
    os << p.anchor_id << ',' << p.partner_id << ',' << p.label << ','
       << format_score(p.score) << "\n";
  }
}

void pairset_write(const PairSet& ps, const std::string& path) {
  std::ofstream os = open_out(path, /*binary=*/false);
  pairset_write(ps, os);
  if (!os) throw_io("write failed: " + path);
}

std::string pairset_to_string(const PairSet& ps) {
  std::ostringstream os;
  pairset_write(ps, os);
  return os.str();
}

PairSet pairset_read(std::istream& is, const std::string& origin) {
  std::string header;
  if (!std::getline(is, header)) {
    throw_format("pair set '" + origin + "': missing header");
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header.rfind("#pairset v1 ", 0) != 0) {
    throw_format("pair set '" + origin + "': bad header");
  }

  PairSet ps;
  std::istringstream hs(header.substr(12));
  std::string field;
  while (hs >> field) {
    const size_t eq = field.find('=');
    if (eq == std::string::npos) {
      throw_format("pair set '" + origin + "': malformed header field '" +
                   field + "'");
    }
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "k") {
        ps.config.k = std::stoi(value);
      } else if (key == "pos_t") {
        ps.config.pos_threshold = std::stod(value);
      } else if (key == "neg_t") {
        ps.config.neg_threshold = std::stod(value);
      } else if (key == "mode") {
        const size_t slash = value.find('/');
        if (slash == std::string::npos) {
          throw_format("pair set '" + origin + "': malformed mode");
        }
        ps.config.pos_mode = threshold_mode_from_name(value.substr(0, slash));
        ps.config.neg_mode = threshold_mode_from_name(value.substr(slash + 1));
      } else if (key == "bidir") {
        ps.config.bidirectional = (value == "1");
      } else {
        throw_format("pair set '" + origin + "': unknown header key '" + key +
                     "'");
      }
    } catch (const std::invalid_argument&) {
      throw_format("pair set '" + origin + "': bad value for '" + key + "'");
    }
  }

  std::string line;
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) {
      throw_format("pair set '" + origin + "' line " + std::to_string(lineno) +
                   ": expected 4 fields");
    }
    TrainingPair p;
    p.anchor_id = fields[0];
    p.partner_id = fields[1];
    try {
      p.label = std::stoi(fields[2]);
      p.score = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw_format("pair set '" + origin + "' line " + std::to_string(lineno) +
                   ": bad numeric field");
    }
    if (p.label != 0 && p.label != 1) {
      throw_format("pair set '" + origin + "' line " + std::to_string(lineno) +
                   ": label must be 0 or 1");
    }
    if (p.anchor_id == p.partner_id) {
      throw_format("pair set '" + origin + "' line " + std::to_string(lineno) +
                   ": self-pair");
    }
    ps.pairs.push_back(std::move(p));
  }
  return ps;
}

PairSet pairset_read(const std::string& path) {
  std::ifstream is = open_in(path, /*binary=*/false);
  return pairset_read(is, path);
}

}  // namespace sfv
