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

#ifndef SFV_ENCODER_HPP_
#define SFV_ENCODER_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "error.hpp"
#include "nn.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace sfv {

// VGG-style encoder: three blocks of (conv3x3 -> ReLU -> conv3x3 -> ReLU ->
// maxpool2x2), then flatten -> FC(fc1_units) -> ReLU -> FC(embedding_dim).
struct EncoderConfig {
  int input_height = 64;
  int input_width = 64;
  int input_channels = 3;
  std::array<int, 3> block_channels = {32, 64, 128};
  int fc1_units = 1024;
  int embedding_dim = 300;

  void validate() const;
  int flatten_units() const {
    return (input_height / 8) * (input_width / 8) * block_channels[2];
  }
  bool operator==(const EncoderConfig&) const = default;
};

// Verification head applied to the concatenated pair of embeddings:
// FC(2*embedding_dim -> hidden_units) -> ReLU -> FC(hidden_units -> 1).
struct HeadConfig {
  int hidden_units = 256;

  void validate() const;
  bool operator==(const HeadConfig&) const = default;
};

// All trainable tensors of encoder and head, in declared order. Conv weights
// are [3,3,in_c,out_c], FC weights [in,out], biases [out].
template <typename T>
struct ModelParams {
  EncoderConfig config;
  HeadConfig head;
  std::array<Tensor<T>, 6> conv_w;
  std::array<Tensor<T>, 6> conv_b;
  Tensor<T> fc1_w, fc1_b;
  Tensor<T> fc2_w, fc2_b;
  Tensor<T> head1_w, head1_b;
  Tensor<T> head2_w, head2_b;

  // Visits every tensor in declared order with (name, tensor).
  template <typename F>
  void for_each_tensor(F&& f) {
    static const char* conv_names[6] = {"conv1a", "conv1b", "conv2a",
                                        "conv2b", "conv3a", "conv3b"};
    for (int i = 0; i < 6; ++i) {
      f(std::string(conv_names[i]) + "_w", conv_w[i]);
      f(std::string(conv_names[i]) + "_b", conv_b[i]);
    }
    f("fc1_w", fc1_w);
    f("fc1_b", fc1_b);
    f("fc2_w", fc2_w);
    f("fc2_b", fc2_b);
    f("head1_w", head1_w);
    f("head1_b", head1_b);
    f("head2_w", head2_w);
    f("head2_b", head2_b);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](const std::string& name, Tensor<T>& t) {
          f(name, static_cast<const Tensor<T>&>(t));
        });
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for_each_tensor([&](const std::string&, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  // Returns the name of the first tensor with a non-finite entry, or "".
  std::string first_non_finite() const {
    std::string found;
    for_each_tensor([&](const std::string& name, const Tensor<T>& t) {
      if (found.empty() && !t.all_finite()) found = name;
    });
    return found;
  }

  static ModelParams shaped_like(const ModelParams& other) {
    ModelParams out = allocate(other.config, other.head);
    return out;
  }

  static ModelParams allocate(const EncoderConfig& cfg, const HeadConfig& hd);

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.config = config;
    out.head = head;
    for (int i = 0; i < 6; ++i) {
      out.conv_w[i] = conv_w[i].template cast<U>();
      out.conv_b[i] = conv_b[i].template cast<U>();
    }
    out.fc1_w = fc1_w.template cast<U>();
    out.fc1_b = fc1_b.template cast<U>();
    out.fc2_w = fc2_w.template cast<U>();
    out.fc2_b = fc2_b.template cast<U>();
    out.head1_w = head1_w.template cast<U>();
    out.head1_b = head1_b.template cast<U>();
    out.head2_w = head2_w.template cast<U>();
    out.head2_b = head2_b.template cast<U>();
    return out;
  }
};

// Deterministic seed-driven initialization: weights uniform in
// [-sqrt(6/fan_in), sqrt(6/fan_in)], biases zero. Values are drawn in double
// and cast, so float and double instantiations correspond.
template <typename T>
ModelParams<T> params_init(const EncoderConfig& cfg, const HeadConfig& head,
                           uint64_t seed);

// Intermediate activations kept for the backward pass.
template <typename T>
struct EncoderCache {
  int batch = 0;
  std::array<Tensor<T>, 6> col;       // im2col per conv layer
  std::array<Tensor<T>, 6> conv_pre;  // pre-activation conv outputs
  std::array<Tensor<T>, 6> conv_act;  // post-ReLU
  std::array<Tensor<T>, 3> pool_out;
  std::array<Tensor<int32_t>, 3> pool_argmax;
  Tensor<T> fc1_pre, fc1_act;
};

// images: [B, H, W, C] with pixel values in [0, 1]. Returns [B, emb_dim].
template <typename T>
Tensor<T> encoder_forward(const ModelParams<T>& params, const Tensor<T>& images,
                          EncoderCache<T>* cache = nullptr);

// Exact reverse-mode of encoder_forward. Gradients are accumulated into
// `grads` (zero it first; the two siamese branches both accumulate here).
template <typename T>
void encoder_backward(const ModelParams<T>& params, const EncoderCache<T>& cache,
                      const Tensor<T>& d_embedding, ModelParams<T>& grads);

// Parameter file: magic "SNW1", u32 version, config fields, then tensors in
// declared order as little-endian float32 with u32 shape prefixes.
void params_save(const ModelParams<float>& params, const std::string& path);
ModelParams<float> params_load(const std::string& path);
// Load-and-check variant: rejects a checkpoint whose stored config differs.
ModelParams<float> params_load(const std::string& path,
                               const EncoderConfig& expected,
                               const HeadConfig& expected_head);

}  // namespace sfv

#endif  // SFV_ENCODER_HPP_
