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

#ifndef AWA_METRICS_HPP_
#define AWA_METRICS_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "awa/tensor.hpp"

namespace awa {

// Images are [C, H, W] tensors with values in [0, 1]. Reconstructions are
// clamped to [0, 1] before scoring; ground truth is used as given.

inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kSsimRange = 1.0;

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

Tensor clamp_unit(const Tensor& image);

double mse(const Tensor& truth, const Tensor& recon);
// 10 log10(max(truth)^2 / mse); +inf when mse < 1e-12; MetricError when the
// ground truth is all zero.
double psnr(const Tensor& truth, const Tensor& recon);
double psnr_from_mse(double max_value, double mse_value);
// Global-statistics SSIM per channel, averaged over channels.
double ssim(const Tensor& truth, const Tensor& recon);

struct ImageMetrics {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

ImageMetrics score(const Tensor& truth, const Tensor& recon);

struct MatchResult {
  std::vector<std::size_t> permutation;  // truth i <-> recon permutation[i]
  std::vector<ImageMetrics> per_image;   // indexed by truth
  ImageMetrics mean;
  double total_mse = 0.0;
};

inline constexpr std::size_t kMaxMatchBatch = 16;

// Assignment of reconstructions to ground truth minimizing total MSE.
MatchResult match_batches(const std::vector<Tensor>& truth,
                          const std::vector<Tensor>& recon);

// Splits an [N, C, H, W] batch into N images.
std::vector<Tensor> split_batch(const Tensor& batch);

}  // namespace awa

#endif  // AWA_METRICS_HPP_
