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

#include "encoder.hpp"

#include <cstring>
#include <fstream>

#include "io_util.hpp"

namespace sfv {

namespace {
constexpr char kMagic[4] = {'S', 'N', 'W', '1'};
constexpr uint32_t kVersion = 1;
}  // namespace

void EncoderConfig::validate() const {
  if (input_height <= 0 || input_width <= 0 || input_channels <= 0) {
    throw_invalid("encoder config: input dimensions must be positive");
  }
  if (input_height % 8 != 0 || input_width % 8 != 0) {
    throw_invalid(
        "encoder config: input height and width must be divisible by 8 "
        "(three 2x poolings)");
  }
  for (int bc : block_channels) {
    if (bc <= 0) throw_invalid("encoder config: block channels must be positive");
  }
  if (fc1_units < 1) throw_invalid("encoder config: fc1_units must be >= 1");
  if (embedding_dim < 1) {
    throw_invalid("encoder config: embedding_dim must be >= 1");
  }
}

void HeadConfig::validate() const {
  if (hidden_units < 1) throw_invalid("head config: hidden_units must be >= 1");
}

template <typename T>
ModelParams<T> ModelParams<T>::allocate(const EncoderConfig& cfg,
                                        const HeadConfig& hd) {
  cfg.validate();
  hd.validate();
  ModelParams<T> p;
  p.config = cfg;
  p.head = hd;
  const int chans[4] = {cfg.input_channels, cfg.block_channels[0],
                        cfg.block_channels[1], cfg.block_channels[2]};
  for (int layer = 0; layer < 6; ++layer) {
    const int block = layer / 2;
    const int in_c = (layer % 2 == 0) ? chans[block] : chans[block + 1];
    const int out_c = chans[block + 1];
    p.conv_w[layer] = Tensor<T>({3, 3, in_c, out_c});
    p.conv_b[layer] = Tensor<T>({out_c});
  }
  p.fc1_w = Tensor<T>({cfg.flatten_units(), cfg.fc1_units});
  p.fc1_b = Tensor<T>({cfg.fc1_units});
  p.fc2_w = Tensor<T>({cfg.fc1_units, cfg.embedding_dim});
  p.fc2_b = Tensor<T>({cfg.embedding_dim});
  p.head1_w = Tensor<T>({2 * cfg.embedding_dim, hd.hidden_units});
  p.head1_b = Tensor<T>({hd.hidden_units});
  p.head2_w = Tensor<T>({hd.hidden_units, 1});
  p.head2_b = Tensor<T>({1});
  return p;
}

template <typename T>
ModelParams<T> params_init(const EncoderConfig& cfg, const HeadConfig& head,
                           uint64_t seed) {
  ModelParams<T> p = ModelParams<T>::allocate(cfg, head);
  Rng rng(derive_seed(seed, "params-init"));
  p.for_each_tensor([&](const std::string& name, Tensor<T>& t) {
    if (name.size() >= 2 && name.compare(name.size() - 2, 2, "_b") == 0) {
      t.fill(T(0));
      return;
    }
    // fan-in: rows of an FC weight, 3*3*in_c of a conv weight.
    int64_t fan_in = 1;
    for (size_t d = 0; d + 1 < t.shape.size(); ++d) fan_in *= t.shape[d];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) {
      v = static_cast<T>(rng.uniform(-bound, bound));
    }
  });
  return p;
}

template <typename T>
Tensor<T> encoder_forward(const ModelParams<T>& params, const Tensor<T>& images,
                          EncoderCache<T>* cache) {
  const EncoderConfig& cfg = params.config;
  if (images.shape.size() != 4 || images.dim(1) != cfg.input_height ||
      images.dim(2) != cfg.input_width || images.dim(3) != cfg.input_channels) {
    throw_dim("encoder_forward: image batch shape does not match config");
  }
  EncoderCache<T> local;
  EncoderCache<T>& cc = cache != nullptr ? *cache : local;
  cc.batch = images.dim(0);

  const Tensor<T>* x = &images;
  for (int block = 0; block < 3; ++block) {
    const int la = 2 * block, lb = 2 * block + 1;
    conv3x3_forward(*x, params.conv_w[la], params.conv_b[la], cc.col[la],
                    cc.conv_pre[la]);
    relu_forward(cc.conv_pre[la], cc.conv_act[la]);
    conv3x3_forward(cc.conv_act[la], params.conv_w[lb], params.conv_b[lb],
                    cc.col[lb], cc.conv_pre[lb]);
    relu_forward(cc.conv_pre[lb], cc.conv_act[lb]);
    maxpool2x2_forward(cc.conv_act[lb], cc.pool_out[block],
                       cc.pool_argmax[block]);
    x = &cc.pool_out[block];
  }

  // NHWC is contiguous, so flattening is a shape change only.
  Tensor<T> flat = cc.pool_out[2];
  flat.shape = {cc.batch, cfg.flatten_units()};

  fc_forward(flat, params.fc1_w, params.fc1_b, cc.fc1_pre);
  relu_forward(cc.fc1_pre, cc.fc1_act);
  Tensor<T> embedding;
  fc_forward(cc.fc1_act, params.fc2_w, params.fc2_b, embedding);
  return embedding;
}

template <typename T>
void encoder_backward(const ModelParams<T>& params, const EncoderCache<T>& cache,
                      const Tensor<T>& d_embedding, ModelParams<T>& grads) {
  const EncoderConfig& cfg = params.config;
  const int b = cache.batch;

  Tensor<T> flat = cache.pool_out[2];
  flat.shape = {b, cfg.flatten_units()};

  Tensor<T> d_fc1_act;
  fc_backward(cache.fc1_act, params.fc2_w, d_embedding, grads.fc2_w,
              grads.fc2_b, &d_fc1_act);
  Tensor<T> d_fc1_pre;
  relu_backward(cache.fc1_pre, d_fc1_act, d_fc1_pre);
  Tensor<T> d_flat;
  fc_backward(flat, params.fc1_w, d_fc1_pre, grads.fc1_w, grads.fc1_b, &d_flat);

  Tensor<T> d_pool = d_flat;
  d_pool.shape = {b, cfg.input_height / 8, cfg.input_width / 8,
                  cfg.block_channels[2]};

  for (int block = 2; block >= 0; --block) {
    const int la = 2 * block, lb = 2 * block + 1;
    const int h = cfg.input_height >> block, w = cfg.input_width >> block;
    const int in_c_a =
        block == 0 ? cfg.input_channels : cfg.block_channels[block - 1];
    const int c = cfg.block_channels[block];

    Tensor<T> d_act_b;
    maxpool2x2_backward(d_pool, cache.pool_argmax[block], b, h, w, c, d_act_b);
    Tensor<T> d_pre_b;
    relu_backward(cache.conv_pre[lb], d_act_b, d_pre_b);
    Tensor<T> d_act_a;
    conv3x3_backward(cache.col[lb], params.conv_w[lb], d_pre_b,
                     grads.conv_w[lb], grads.conv_b[lb], &d_act_a, b, h, w, c);
    Tensor<T> d_pre_a;
    relu_backward(cache.conv_pre[la], d_act_a, d_pre_a);
    Tensor<T>* d_block_in = nullptr;
    Tensor<T> d_in;
    if (block > 0) d_block_in = &d_in;
    conv3x3_backward(cache.col[la], params.conv_w[la], d_pre_a,
                     grads.conv_w[la], grads.conv_b[la], d_block_in, b, h, w,
                     in_c_a);
    if (block > 0) d_pool = std::move(d_in);
  }
}

void params_save(const ModelParams<float>& params, const std::string& path) {
  std::ofstream os = open_out(path);
  os.write(kMagic, 4);
  put_u32le(os, kVersion);
  const EncoderConfig& c = params.config;
  put_u32le(os, static_cast<uint32_t>(c.input_height));
  put_u32le(os, static_cast<uint32_t>(c.input_width));
  put_u32le(os, static_cast<uint32_t>(c.input_channels));
  for (int bc : c.block_channels) put_u32le(os, static_cast<uint32_t>(bc));
  put_u32le(os, static_cast<uint32_t>(c.fc1_units));
  put_u32le(os, static_cast<uint32_t>(c.embedding_dim));
  put_u32le(os, static_cast<uint32_t>(params.head.hidden_units));
  params.for_each_tensor([&](const std::string&, const Tensor<float>& t) {
    put_u32le(os, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32le(os, static_cast<uint32_t>(d));
    for (float v : t.data) put_f32le(os, v);
  });
  if (!os) throw_io("write failed: " + path);
}

ModelParams<float> params_load(const std::string& path) {
  std::ifstream is = open_in(path);
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw_format("parameter file '" + path + "': bad magic");
  }
  uint32_t version = 0;
  if (!get_u32le(is, &version) || version != kVersion) {
    throw_format("parameter file '" + path + "': unsupported version");
  }
  uint32_t fields[9];
  for (auto& f : fields) {
    if (!get_u32le(is, &f)) {
      throw_format("parameter file '" + path + "': truncated header");
    }
  }
  EncoderConfig cfg;
  cfg.input_height = static_cast<int>(fields[0]);
  cfg.input_width = static_cast<int>(fields[1]);
  cfg.input_channels = static_cast<int>(fields[2]);
  cfg.block_channels = {static_cast<int>(fields[3]),
                        static_cast<int>(fields[4]),
                        static_cast<int>(fields[5])};
  cfg.fc1_units = static_cast<int>(fields[6]);
  cfg.embedding_dim = static_cast<int>(fields[7]);
  HeadConfig head;
  head.hidden_units = static_cast<int>(fields[8]);

  ModelParams<float> params = ModelParams<float>::allocate(cfg, head);
  params.for_each_tensor([&](const std::string& name, Tensor<float>& t) {
    uint32_t ndim = 0;
    if (!get_u32le(is, &ndim) || ndim != t.shape.size()) {
      throw_format("parameter file '" + path + "': tensor '" + name +
                   "' has unexpected rank");
    }
    for (size_t d = 0; d < t.shape.size(); ++d) {
      uint32_t dim = 0;
      if (!get_u32le(is, &dim) || static_cast<int>(dim) != t.shape[d]) {
        throw_format("parameter file '" + path + "': tensor '" + name +
                     "' has unexpected shape");
      }
    }
    for (auto& v : t.data) {
      if (!get_f32le(is, &v)) {
        throw_format("parameter file '" + path + "': truncated tensor '" +
                     name + "'");
      }
    }
  });
  return params;
}

ModelParams<float> params_load(const std::string& path,
                               const EncoderConfig& expected,
                               const HeadConfig& expected_head) {
  ModelParams<float> params = params_load(path);
  if (!(params.config == expected) || !(params.head == expected_head)) {
    throw_invalid("parameter file '" + path +
                  "': stored config does not match the expected config");
  }
  return params;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> params_init<float>(const EncoderConfig&,
                                               const HeadConfig&, uint64_t);
template ModelParams<double> params_init<double>(const EncoderConfig&,
                                                 const HeadConfig&, uint64_t);
template Tensor<float> encoder_forward<float>(const ModelParams<float>&,
                                              const Tensor<float>&,
                                              EncoderCache<float>*);
template Tensor<double> encoder_forward<double>(const ModelParams<double>&,
                                                const Tensor<double>&,
                                                EncoderCache<double>*);
template void encoder_backward<float>(const ModelParams<float>&,
                                      const EncoderCache<float>&,
                                      const Tensor<float>&,
                                      ModelParams<float>&);
template void encoder_backward<double>(const ModelParams<double>&,
                                       const EncoderCache<double>&,
                                       const Tensor<double>&,
                                       ModelParams<double>&);

}  // namespace sfv
