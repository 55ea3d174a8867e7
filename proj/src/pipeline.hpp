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

#ifndef SFV_PIPELINE_HPP_
#define SFV_PIPELINE_HPP_

#include <cstdint>
#include <string>

#include "dataio.hpp"
#include "encoder.hpp"
#include "evaluator.hpp"
#include "pair_miner.hpp"
#include "trainer.hpp"

// File-to-file pipeline stages. Every stage is deterministic given its
// inputs and seed: rerunning any stage with identical arguments reproduces
// its output files byte for byte.

namespace sfv {

// Generates the dataset and, since every desk-scale run starts from an A/B
// partition, also writes manifest_a.txt / manifest_b.txt produced by
// split_disjoint at the given fraction.
void run_synth(const SyntheticSpec& spec, const std::string& out_dir,
               double split_fraction = 0.5);

// Identity-disjoint split of an external labeled dataset. Labels come from
// the manifest itself or, when sidecar_path is nonempty, from a sidecar.
void run_split(const std::string& manifest_path, const std::string& sidecar_path,
               double fraction, uint64_t seed, const std::string& out_a,
               const std::string& out_b);

struct EmbedOptions {
  enum class Source { kModel, kRandomInit, kRaw };
  Source source = Source::kRandomInit;
  std::string model_path;  // kModel: checkpoint to embed with
  EncoderConfig encoder;   // kRandomInit: architecture to instantiate
  HeadConfig head;
  int raw_dim = 300;  // kRaw: random-projection target dimension
  uint64_t seed = 0;
  unsigned threads = 1;
  int batch_size = 64;
};

// Embeds every manifest image and writes an EMB1 store (+ .ids sidecar).
void run_embed(const std::string& manifest_path, const EmbedOptions& opt,
               const std::string& out_path);

struct MineSummary {
  size_t positives = 0;
  size_t negatives = 0;
};

MineSummary run_mine(const std::string& x_store_path,
                     const std::string& y_store_path, const MiningConfig& cfg,
                     unsigned threads, const std::string& out_path);

struct TrainRunOptions {
  std::string pairs_path;
  std::string manifest_path;
  EncoderConfig encoder;
  HeadConfig head;
  TrainConfig train;
  bool baseline = false;
  std::string sidecar_path;  // identity labels for baseline mode
  bool init_only = false;    // write the seeded initial checkpoint, no training
  unsigned threads = 1;
};

// Writes checkpoint.snw, trainlog.csv and summary.txt under out_dir.
TrainLog run_train(const TrainRunOptions& opt, const std::string& out_dir);

struct EvalRunOptions {
  std::string checkpoint_path;
  std::string manifest_path;
  // Either a prebuilt trial file...
  std::string trials_path;
  // ...or a label sidecar plus protocol shape; the built trials are written
  // to out_dir/trials.csv for reproducibility.
  std::string sidecar_path;
  int folds = 10;
  int matched_per_fold = 300;
  int mismatched_per_fold = 300;
  uint64_t seed = 0;
  unsigned threads = 1;
  int batch_size = 64;
};

// Scores every trial with the symmetrized network output and writes
// report.txt, metrics.csv, roc.csv and scores.csv under out_dir.
EvalReport run_evaluate(const EvalRunOptions& opt, const std::string& out_dir);

}  // namespace sfv

#endif  // SFV_PIPELINE_HPP_
