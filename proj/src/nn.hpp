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

#ifndef SFV_NN_HPP_
#define SFV_NN_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "tensor.hpp"

// Layer primitives for the encoder and head. Image tensors are NHWC.
// Convolutions are fixed 3x3, padding 1, stride 1 and run as im2col + GEMM;
// weights are stored [3, 3, in_c, out_c] so a patch row multiplies the
// weight matrix directly. Everything is templated on the scalar type:
// float for training, double for finite-difference verification.

namespace sfv {

template <typename T>
void im2col_3x3(const Tensor<T>& input, Tensor<T>& col) {
  const int b = input.dim(0), h = input.dim(1), w = input.dim(2),
            c = input.dim(3);
  col = Tensor<T>({b * h * w, 9 * c});
  T* dst = col.data.data();
  const T* src = input.data.data();
  for (int bi = 0; bi < b; ++bi) {
    const T* img = src + static_cast<int64_t>(bi) * h * w * c;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ky = -1; ky <= 1; ++ky) {
          const int sy = y + ky;
          for (int kx = -1; kx <= 1; ++kx) {
            const int sx = x + kx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
              for (int ch = 0; ch < c; ++ch) *dst++ = T(0);
            } else {
              const T* px = img + (static_cast<int64_t>(sy) * w + sx) * c;
              for (int ch = 0; ch < c; ++ch) *dst++ = px[ch];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_3x3(const Tensor<T>& d_col, int b, int h, int w, int c,
                Tensor<T>& d_input) {
  d_input = Tensor<T>({b, h, w, c});
  const T* src = d_col.data.data();
  T* dst = d_input.data.data();
  for (int bi = 0; bi < b; ++bi) {
    T* img = dst + static_cast<int64_t>(bi) * h * w * c;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ky = -1; ky <= 1; ++ky) {
          const int sy = y + ky;
          for (int kx = -1; kx <= 1; ++kx) {
            const int sx = x + kx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
              src += c;
            } else {
              T* px = img + (static_cast<int64_t>(sy) * w + sx) * c;
              for (int ch = 0; ch < c; ++ch) px[ch] += *src++;
            }
          }
        }
      }
    }
  }
}

// out[B,H,W,OC] = conv(input) + bias; fills `col` for reuse in backward.
template <typename T>
void conv3x3_forward(const Tensor<T>& input, const Tensor<T>& weight,
                     const Tensor<T>& bias, Tensor<T>& col, Tensor<T>& out) {
  const int b = input.dim(0), h = input.dim(1), w = input.dim(2),
            c = input.dim(3);
  const int oc = weight.dim(3);
  im2col_3x3(input, col);
  out = Tensor<T>({b, h, w, oc});
  gemm(col.data.data(), static_cast<int64_t>(b) * h * w, 9 * c,
       weight.data.data(), oc, out.data.data());
  T* o = out.data.data();
  const T* bv = bias.data.data();
  for (int64_t i = 0; i < static_cast<int64_t>(b) * h * w; ++i) {
    for (int ch = 0; ch < oc; ++ch) o[ch] += bv[ch];
    o += oc;
  }
}

// Parameter gradients accumulate (the siamese branches share weights);
// d_input, when requested, is assigned.
template <typename T>
void conv3x3_backward(const Tensor<T>& col, const Tensor<T>& weight,
                      const Tensor<T>& d_out, Tensor<T>& d_weight,
                      Tensor<T>& d_bias, Tensor<T>* d_input, int b, int h,
                      int w, int c) {
  const int oc = weight.dim(3);
  const int64_t rows = static_cast<int64_t>(b) * h * w;
  gemm_at_b(col.data.data(), rows, 9 * c, d_out.data.data(), oc,
            d_weight.data.data(), /*accumulate=*/true);
  const T* dsrc = d_out.data.data();
  T* db = d_bias.data.data();
  for (int64_t i = 0; i < rows; ++i) {
    for (int ch = 0; ch < oc; ++ch) db[ch] += dsrc[ch];
    dsrc += oc;
  }
  if (d_input != nullptr) {
    Tensor<T> d_col({static_cast<int>(rows), 9 * c});
    gemm_a_bt(d_out.data.data(), rows, oc, weight.data.data(), 9 * c,
              d_col.data.data());
    col2im_3x3(d_col, b, h, w, c, *d_input);
  }
}

template <typename T>
void relu_forward(const Tensor<T>& pre, Tensor<T>& act) {
  act = Tensor<T>(pre.shape);
  for (int64_t i = 0; i < pre.size(); ++i) {
    act.data[i] = pre.data[i] > T(0) ? pre.data[i] : T(0);
  }
}

template <typename T>
void relu_backward(const Tensor<T>& pre, const Tensor<T>& d_act,
                   Tensor<T>& d_pre) {
  d_pre = Tensor<T>(pre.shape);
  for (int64_t i = 0; i < pre.size(); ++i) {
    d_pre.data[i] = pre.data[i] > T(0) ? d_act.data[i] : T(0);
  }
}

// 2x2 max pooling, stride 2. Ties go to the first maximum in scan order so
// the subgradient is deterministic.
template <typename T>
void maxpool2x2_forward(const Tensor<T>& input, Tensor<T>& out,
                        Tensor<int32_t>& argmax) {
  const int b = input.dim(0), h = input.dim(1), w = input.dim(2),
            c = input.dim(3);
  const int oh = h / 2, ow = w / 2;
  out = Tensor<T>({b, oh, ow, c});
  argmax = Tensor<int32_t>({b, oh, ow, c});
  for (int bi = 0; bi < b; ++bi) {
    const T* img = input.data.data() + static_cast<int64_t>(bi) * h * w * c;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        for (int ch = 0; ch < c; ++ch) {
          T best = img[((2 * y) * w + 2 * x) * c + ch];
          int32_t best_off = 0;
          for (int off = 1; off < 4; ++off) {
            const int sy = 2 * y + off / 2, sx = 2 * x + off % 2;
            const T v = img[(static_cast<int64_t>(sy) * w + sx) * c + ch];
            if (v > best) {
              best = v;
              best_off = off;
            }
          }
          const int64_t oi =
              ((static_cast<int64_t>(bi) * oh + y) * ow + x) * c + ch;
          out.data[oi] = best;
          argmax.data[oi] = best_off;
        }
      }
    }
  }
}

template <typename T>
void maxpool2x2_backward(const Tensor<T>& d_out, const Tensor<int32_t>& argmax,
                         int b, int h, int w, int c, Tensor<T>& d_input) {
  d_input = Tensor<T>({b, h, w, c});
  const int oh = h / 2, ow = w / 2;
  for (int bi = 0; bi < b; ++bi) {
    T* img = d_input.data.data() + static_cast<int64_t>(bi) * h * w * c;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        for (int ch = 0; ch < c; ++ch) {
          const int64_t oi =
              ((static_cast<int64_t>(bi) * oh + y) * ow + x) * c + ch;
          const int32_t off = argmax.data[oi];
          const int sy = 2 * y + off / 2, sx = 2 * x + off % 2;
          img[(static_cast<int64_t>(sy) * w + sx) * c + ch] += d_out.data[oi];
        }
      }
    }
  }
}

// y[B,out] = x[B,in] * w[in,out] + bias
template <typename T>
void fc_forward(const Tensor<T>& x, const Tensor<T>& weight,
                const Tensor<T>& bias, Tensor<T>& y) {
  const int b = x.dim(0), in = x.dim(1), out = weight.dim(1);
  y = Tensor<T>({b, out});
  gemm(x.data.data(), b, in, weight.data.data(), out, y.data.data());
  T* o = y.data.data();
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < out; ++j) o[j] += bias.data[j];
    o += out;
  }
}

template <typename T>
void fc_backward(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& d_y, Tensor<T>& d_weight, Tensor<T>& d_bias,
                 Tensor<T>* d_x) {
  const int b = x.dim(0), in = x.dim(1), out = weight.dim(1);
  gemm_at_b(x.data.data(), b, in, d_y.data.data(), out, d_weight.data.data(),
            /*accumulate=*/true);
  const T* src = d_y.data.data();
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < out; ++j) d_bias.data[j] += src[j];
    src += out;
  }
  if (d_x != nullptr) {
    *d_x = Tensor<T>({b, in});
    gemm_a_bt(d_y.data.data(), b, out, weight.data.data(), in,
              d_x->data.data());
  }
}

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) {
    return T(1) / (T(1) + std::exp(-z));
  }
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Mean binary cross-entropy evaluated from pre-sigmoid logits:
// softplus(z) - z*y per sample, which never takes log of 0. Optionally
// produces d(loss)/d(logit) = (sigmoid(z) - y) / B.
template <typename T>
T bce_with_logits(const Tensor<T>& logits, const std::vector<T>& labels,
                  Tensor<T>* d_logits = nullptr) {
  const int64_t n = logits.size();
  if (d_logits != nullptr) *d_logits = Tensor<T>(logits.shape);
  T loss = T(0);
  for (int64_t i = 0; i < n; ++i) {
    const T z = logits.data[i];
    const T y = labels[static_cast<size_t>(i)];
    const T softplus =
        (z > T(0) ? z : T(0)) + std::log1p(std::exp(-std::abs(z)));
    loss += softplus - z * y;
    if (d_logits != nullptr) {
      d_logits->data[i] = (sigmoid(z) - y) / static_cast<T>(n);
    }
  }
  return loss / static_cast<T>(n);
}

}  // namespace sfv

#endif  // SFV_NN_HPP_
