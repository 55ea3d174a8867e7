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

#ifndef SFV_TRAINER_HPP_
#define SFV_TRAINER_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dataio.hpp"
#include "encoder.hpp"
#include "pair_miner.hpp"
#include "siamese.hpp"

namespace sfv {

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  int epochs = 300;
  int batch_size = 64;
  double momentum = 0.91;
  double weight_decay = 1e-5;
  double lr_start = 1e-2;
  double lr_end = 1e-8;
  int early_stop_patience = 10;  // 0 disables early stopping
  double validation_fraction = 0.1;
  Optimizer optimizer = Optimizer::kSgd;
  uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;
  int best_epoch = -1;
  std::string stop_reason;
};

// Machine-readable record stream ("epoch,lr,train_loss,val_loss" lines)
// followed by nothing; the human summary is separate.
void trainlog_write(const TrainLog& log, std::ostream& os);
void trainlog_write(const TrainLog& log, const std::string& path);
std::string trainlog_summary(const TrainLog& log);

// Logarithmic decay from lr_start at epoch 0 to lr_end at epochs-1.
// Endpoints are returned exactly; single-epoch runs return lr_start.
double lr_schedule(int epoch, const TrainConfig& cfg);

// SGD with momentum and coupled weight decay:
//   v <- momentum * v - lr * (g + weight_decay * w);  w <- w + v
// A non-finite gradient aborts with a diagnostic naming the tensor.
template <typename T>
void sgd_step(ModelParams<T>& params, const ModelParams<T>& grads,
              ModelParams<T>& velocity, double lr, const TrainConfig& cfg);

// Adam state: first/second moment estimates plus the step counter.
template <typename T>
struct AdamState {
  ModelParams<T> m, v;
  int64_t step = 0;
};

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads,
               AdamState<T>& state, double lr, const TrainConfig& cfg);

struct TrainResult {
  ModelParams<float> params;
  TrainLog log;
  // Baseline-only extras: the throwaway softmax classifier (evaluation uses
  // cosine over encoder embeddings, so this never reaches a checkpoint).
  Tensor<float> classifier_w, classifier_b;
  std::vector<std::string> class_names;
  double final_train_accuracy = -1.0;
};

// Trains the two-branch network on mined pairs with a seeded train/validation
// split; early-stops when validation loss stops improving and returns the
// best-validation-loss parameters.
TrainResult train_siamese(const PairSet& pairs, const ImageSet& images,
                          const EncoderConfig& enc_cfg,
                          const HeadConfig& head_cfg, const TrainConfig& cfg);

// Supervised comparison mode: the same encoder followed by a softmax
// classification layer over identities, cross-entropy loss. Labels map each
// image id to its identity.
TrainResult train_baseline(
    const ImageSet& images,
    const std::unordered_map<std::string, std::string>& labels,
    const EncoderConfig& enc_cfg, const HeadConfig& head_cfg,
    const TrainConfig& cfg);

}  // namespace sfv

#endif  // SFV_TRAINER_HPP_
