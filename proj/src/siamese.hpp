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

#ifndef SFV_SIAMESE_HPP_
#define SFV_SIAMESE_HPP_

#include <vector>

#include "encoder.hpp"

namespace sfv {

// Two-branch shared-weight composition. Both image batches pass through the
// SAME encoder parameters; the embeddings are concatenated in argument order
// and fed to the head, whose single output unit is the match logit.
template <typename T>
struct SiameseCache {
  EncoderCache<T> enc_a, enc_b;
  Tensor<T> emb_a, emb_b;
  Tensor<T> concat;               // [B, 2*embedding_dim]
  Tensor<T> head1_pre, head1_act;
  Tensor<T> logits;               // [B, 1]
};

template <typename T>
Tensor<T> siamese_logits(const ModelParams<T>& params, const Tensor<T>& a,
                         const Tensor<T>& b, SiameseCache<T>* cache = nullptr);

// Sigmoid of the logits: one score in (0,1) per pair. Note the concatenation
// is ordered, so forward(a,b) and forward(b,a) differ in general.
template <typename T>
std::vector<T> siamese_forward(const ModelParams<T>& params, const Tensor<T>& a,
                               const Tensor<T>& b);

// Reverse-mode of siamese_logits; accumulates into grads (zero it first).
template <typename T>
void siamese_backward(const ModelParams<T>& params, const SiameseCache<T>& cache,
                      const Tensor<T>& d_logits, ModelParams<T>& grads);

// Mean BCE of the full composition plus parameter gradients: the training
// step kernel. Internally works on logits (numerically stable); `grads` is
// zeroed before accumulation.
template <typename T>
T siamese_loss_and_grads(const ModelParams<T>& params, const Tensor<T>& a,
                         const Tensor<T>& b, const std::vector<T>& labels,
                         ModelParams<T>& grads);

// Mean binary cross-entropy over externally supplied scores. Scores are
// clamped to [1e-7, 1 - 1e-7] before the log.
double bce_loss(const std::vector<double>& scores,
                const std::vector<int>& labels);

// Evaluation score for an unordered trial: mean of both argument orders,
// exactly symmetric by construction.
template <typename T>
std::vector<T> verification_scores(const ModelParams<T>& params,
                                   const Tensor<T>& a, const Tensor<T>& b);

}  // namespace sfv

#endif  // SFV_SIAMESE_HPP_
