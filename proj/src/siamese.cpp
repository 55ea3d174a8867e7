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

#include "siamese.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace sfv {

template <typename T>
Tensor<T> siamese_logits(const ModelParams<T>& params, const Tensor<T>& a,
                         const Tensor<T>& b, SiameseCache<T>* cache) {
  if (a.shape != b.shape) {
    throw_dim("siamese: the two image batches must have identical shapes");
  }
  SiameseCache<T> local;
  SiameseCache<T>& cc = cache != nullptr ? *cache : local;

  cc.emb_a = encoder_forward(params, a, &cc.enc_a);
  cc.emb_b = encoder_forward(params, b, &cc.enc_b);

  const int batch = cc.emb_a.dim(0);
  const int emb = cc.emb_a.dim(1);
  cc.concat = Tensor<T>({batch, 2 * emb});
  for (int i = 0; i < batch; ++i) {
    std::copy_n(cc.emb_a.data.begin() + static_cast<int64_t>(i) * emb, emb,
                cc.concat.data.begin() + static_cast<int64_t>(i) * 2 * emb);
    std::copy_n(cc.emb_b.data.begin() + static_cast<int64_t>(i) * emb, emb,
                cc.concat.data.begin() + static_cast<int64_t>(i) * 2 * emb + emb);
  }

  fc_forward(cc.concat, params.head1_w, params.head1_b, cc.head1_pre);
  relu_forward(cc.head1_pre, cc.head1_act);
  fc_forward(cc.head1_act, params.head2_w, params.head2_b, cc.logits);
  return cc.logits;
}

template <typename T>
std::vector<T> siamese_forward(const ModelParams<T>& params, const Tensor<T>& a,
                               const Tensor<T>& b) {
  const Tensor<T> logits = siamese_logits(params, a, b);
  std::vector<T> scores(logits.data.size());
  for (size_t i = 0; i < scores.size(); ++i) scores[i] = sigmoid(logits.data[i]);
  return scores;
}

template <typename T>
void siamese_backward(const ModelParams<T>& params, const SiameseCache<T>& cache,
                      const Tensor<T>& d_logits, ModelParams<T>& grads) {
  Tensor<T> d_head1_act;
  fc_backward(cache.head1_act, params.head2_w, d_logits, grads.head2_w,
              grads.head2_b, &d_head1_act);
  Tensor<T> d_head1_pre;
  relu_backward(cache.head1_pre, d_head1_act, d_head1_pre);
  Tensor<T> d_concat;
  fc_backward(cache.concat, params.head1_w, d_head1_pre, grads.head1_w,
              grads.head1_b, &d_concat);

  const int batch = cache.emb_a.dim(0);
  const int emb = cache.emb_a.dim(1);
  Tensor<T> d_emb_a({batch, emb});
  Tensor<T> d_emb_b({batch, emb});
  for (int i = 0; i < batch; ++i) {
    std::copy_n(d_concat.data.begin() + static_cast<int64_t>(i) * 2 * emb, emb,
                d_emb_a.data.begin() + static_cast<int64_t>(i) * emb);
    std::copy_n(
        d_concat.data.begin() + static_cast<int64_t>(i) * 2 * emb + emb, emb,
        d_emb_b.data.begin() + static_cast<int64_t>(i) * emb);
  }
  encoder_backward(params, cache.enc_a, d_emb_a, grads);
  encoder_backward(params, cache.enc_b, d_emb_b, grads);
}

template <typename T>
T siamese_loss_and_grads(const ModelParams<T>& params, const Tensor<T>& a,
                         const Tensor<T>& b, const std::vector<T>& labels,
                         ModelParams<T>& grads) {
  SiameseCache<T> cache;
  const Tensor<T> logits = siamese_logits(params, a, b, &cache);
  if (labels.size() != static_cast<size_t>(logits.size())) {
    throw_dim("siamese loss: label count does not match batch size");
  }
  grads.for_each_tensor(
      [](const std::string&, Tensor<T>& t) { t.fill(T(0)); });
  Tensor<T> d_logits;
  const T loss = bce_with_logits(logits, labels, &d_logits);
  siamese_backward(params, cache, d_logits, grads);
  return loss;
}

double bce_loss(const std::vector<double>& scores,
                const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw_dim("bce_loss: score and label counts differ");
  }
  if (scores.empty()) throw_invalid("bce_loss: empty batch");
  constexpr double kEps = 1e-7;
  double total = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], kEps, 1.0 - kEps);
    const double y = static_cast<double>(labels[i]);
    total += -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
  }
  return total / static_cast<double>(scores.size());
}

template <typename T>
std::vector<T> verification_scores(const ModelParams<T>& params,
                                   const Tensor<T>& a, const Tensor<T>& b) {
  const std::vector<T> ab = siamese_forward(params, a, b);
  const std::vector<T> ba = siamese_forward(params, b, a);
  std::vector<T> out(ab.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = (ab[i] + ba[i]) / T(2);
  }
  return out;
}

template Tensor<float> siamese_logits<float>(const ModelParams<float>&,
                                             const Tensor<float>&,
                                             const Tensor<float>&,
                                             SiameseCache<float>*);
template Tensor<double> siamese_logits<double>(const ModelParams<double>&,
                                               const Tensor<double>&,
                                               const Tensor<double>&,
                                               SiameseCache<double>*);
template std::vector<float> siamese_forward<float>(const ModelParams<float>&,
                                                   const Tensor<float>&,
                                                   const Tensor<float>&);
template std::vector<double> siamese_forward<double>(const ModelParams<double>&,
                                                     const Tensor<double>&,
                                                     const Tensor<double>&);
template void siamese_backward<float>(const ModelParams<float>&,
                                      const SiameseCache<float>&,
                                      const Tensor<float>&, ModelParams<float>&);
template void siamese_backward<double>(const ModelParams<double>&,
                                       const SiameseCache<double>&,
                                       const Tensor<double>&,
                                       ModelParams<double>&);
template float siamese_loss_and_grads<float>(const ModelParams<float>&,
                                             const Tensor<float>&,
                                             const Tensor<float>&,
                                             const std::vector<float>&,
                                             ModelParams<float>&);
template double siamese_loss_and_grads<double>(const ModelParams<double>&,
                                               const Tensor<double>&,
                                               const Tensor<double>&,
                                               const std::vector<double>&,
                                               ModelParams<double>&);
template std::vector<float> verification_scores<float>(const ModelParams<float>&,
                                                       const Tensor<float>&,
                                                       const Tensor<float>&);
template std::vector<double> verification_scores<double>(
    const ModelParams<double>&, const Tensor<double>&, const Tensor<double>&);

}  // namespace sfv
