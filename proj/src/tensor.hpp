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

#ifndef SFV_TENSOR_HPP_
#define SFV_TENSOR_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "error.hpp"

namespace sfv {

// Dense row-major tensor. Image batches are NHWC; FC weights are [in, out];
// conv weights are [kh, kw, in_c, out_c] so an im2col patch row multiplies
// the weight matrix directly.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), T(0));
  }

  static int64_t count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int dim(size_t i) const { return shape[i]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (size_t i = 0; i < data.size(); ++i) {
      out.data[i] = static_cast<U>(data[i]);
    }
    return out;
  }
};

template <typename T>
using MatMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// c = a * b, with a [m,k] and b [k,n], all row-major.
template <typename T>
void gemm(const T* a, int64_t m, int64_t k, const T* b, int64_t n, T* c,
          bool accumulate = false) {
  ConstMatMap<T> ma(a, m, k);
  ConstMatMap<T> mb(b, k, n);
  MatMap<T> mc(c, m, n);
  if (accumulate) {
    mc.noalias() += ma * mb;
  } else {
    mc.noalias() = ma * mb;
  }
}

// c = a^T * b, with a [k,m] and b [k,n].
template <typename T>
void gemm_at_b(const T* a, int64_t k, int64_t m, const T* b, int64_t n, T* c,
               bool accumulate = false) {
  ConstMatMap<T> ma(a, k, m);
  ConstMatMap<T> mb(b, k, n);
  MatMap<T> mc(c, m, n);
  if (accumulate) {
    mc.noalias() += ma.transpose() * mb;
  } else {
    mc.noalias() = ma.transpose() * mb;
  }
}

// c = a * b^T, with a [m,k] and b [n,k].
template <typename T>
void gemm_a_bt(const T* a, int64_t m, int64_t k, const T* b, int64_t n, T* c,
               bool accumulate = false) {
  ConstMatMap<T> ma(a, m, k);
  ConstMatMap<T> mb(b, n, k);
  MatMap<T> mc(c, m, n);
  if (accumulate) {
    mc.noalias() += ma * mb.transpose();
  } else {
    mc.noalias() = ma * mb.transpose();
  }
}

}  // namespace sfv

#endif  // SFV_TENSOR_HPP_
