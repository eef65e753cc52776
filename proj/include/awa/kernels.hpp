// Copyright 2026 The AWA Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AWA_KERNELS_HPP_
#define AWA_KERNELS_HPP_

#include <cstddef>
#include <span>

// Dense compute kernels behind the autodiff primitives. Each kernel has a
// textbook serial reference and an OpenMP version; both accumulate every
// output element in the same order, so their results are bit-identical and
// thread count never changes a trajectory.
namespace awa::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const {
    return (height + 2 * padding - kernel_h) / stride + 1;
  }
  std::size_t out_w() const {
    return (width + 2 * padding - kernel_w) / stride + 1;
  }
  std::size_t input_size() const {
    return batch * in_channels * height * width;
  }
  std::size_t weight_size() const {
    return out_channels * in_channels * kernel_h * kernel_w;
  }
  std::size_t output_size() const {
    return batch * out_channels * out_h() * out_w();
  }
};

namespace serial {

// c[m,n] = a[m,k] * b[k,n]
void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, std::size_t m, std::size_t k, std::size_t n);
// y[N,O,Ho,Wo] = conv(x[N,C,H,W], w[O,C,kh,kw])
void conv2d(const ConvGeometry& g, std::span<const double> x,
            std::span<const double> w, std::span<double> y);
// gx = d<y, gy>/dx
void conv2d_input_grad(const ConvGeometry& g, std::span<const double> gy,
                       std::span<const double> w, std::span<double> gx);
// gw = d<y, gy>/dw
void conv2d_weight_grad(const ConvGeometry& g, std::span<const double> x,
                        std::span<const double> gy, std::span<double> gw);

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, std::size_t m, std::size_t k, std::size_t n);
void conv2d(const ConvGeometry& g, std::span<const double> x,
            std::span<const double> w, std::span<double> y);
void conv2d_input_grad(const ConvGeometry& g, std::span<const double> gy,
                       std::span<const double> w, std::span<double> gx);
void conv2d_weight_grad(const ConvGeometry& g, std::span<const double> x,
                        std::span<const double> gy, std::span<double> gw);

}  // namespace parallel

using parallel::conv2d;
using parallel::conv2d_input_grad;
using parallel::conv2d_weight_grad;
using parallel::matmul;

}  // namespace awa::kernels

#endif  // AWA_KERNELS_HPP_
