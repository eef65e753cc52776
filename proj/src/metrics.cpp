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

#include "awa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "awa/assignment.hpp"

namespace awa {

namespace {

void require_match(const char* what, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " differ");
  }
  if (a.numel() == 0) throw ShapeError(std::string(what) + ": empty image");
}

}  // namespace

Tensor clamp_unit(const Tensor& image) {
  Tensor out = image;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double mse(const Tensor& truth, const Tensor& recon) {
  require_match("mse", truth, recon);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.numel(); ++i) {
    const double d = truth[i] - std::clamp(recon[i], 0.0, 1.0);
    s += d * d;
  }
  return s / static_cast<double>(truth.numel());
}

double psnr_from_mse(double max_value, double mse_value) {
  if (!(max_value > 0.0)) {
    throw MetricError("psnr undefined: ground truth is all zero");
  }
  if (mse_value < 1e-12) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / mse_value);
}

double psnr(const Tensor& truth, const Tensor& recon) {
  const double m = mse(truth, recon);
  const double max_value = *std::max_element(truth.data().begin(), truth.data().end());
  return psnr_from_mse(max_value, m);
}

double ssim(const Tensor& truth, const Tensor& recon) {
  require_match("ssim", truth, recon);
  std::size_t channels = 1;
  if (truth.rank() == 3) channels = truth.dim(0);
  const std::size_t per = truth.numel() / channels;
  const double c1 = (kSsimK1 * kSsimRange) * (kSsimK1 * kSsimRange);
  const double c2 = (kSsimK2 * kSsimRange) * (kSsimK2 * kSsimRange);
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* d = truth.data().data() + c * per;
    const double* r = recon.data().data() + c * per;
    double mu_d = 0.0, mu_r = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      mu_d += d[i];
      mu_r += std::clamp(r[i], 0.0, 1.0);
    }
    mu_d /= static_cast<double>(per);
    mu_r /= static_cast<double>(per);
    double vd = 0.0, vr = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      const double a = d[i] - mu_d;
      const double b = std::clamp(r[i], 0.0, 1.0) - mu_r;
      vd += a * a;
      vr += b * b;
      cov += a * b;
    }
    vd /= static_cast<double>(per);
    vr /= static_cast<double>(per);
    cov /= static_cast<double>(per);
    const double s = ((2 * mu_d * mu_r + c1) * (2 * cov + c2)) /
                     ((mu_d * mu_d + mu_r * mu_r + c1) * (vd + vr + c2));
    total += s;
  }
  return total / static_cast<double>(channels);
}

ImageMetrics score(const Tensor& truth, const Tensor& recon) {
  return {mse(truth, recon), psnr(truth, recon), ssim(truth, recon)};
}

MatchResult match_batches(const std::vector<Tensor>& truth,
                          const std::vector<Tensor>& recon) {
  const std::size_t n = truth.size();
  if (recon.size() != n) {
    throw std::invalid_argument("match_batches: " + std::to_string(n) +
                                " ground-truth images but " +
                                std::to_string(recon.size()) + " reconstructions");
  }
  if (n == 0 || n > kMaxMatchBatch) {
    throw std::invalid_argument("match_batches: batch size must be 1..16");
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = mse(truth[i], recon[j]);
  MatchResult r;
  r.permutation = solve_assignment(cost, n);
  for (std::size_t i = 0; i < n; ++i) {
    const ImageMetrics m = score(truth[i], recon[r.permutation[i]]);
    r.per_image.push_back(m);
    r.total_mse += m.mse;
    r.mean.mse += m.mse / static_cast<double>(n);
    r.mean.psnr += m.psnr / static_cast<double>(n);
    r.mean.ssim += m.ssim / static_cast<double>(n);
  }
  return r;
}

std::vector<Tensor> split_batch(const Tensor& batch) {
  if (batch.rank() != 4) {
    throw ShapeError("split_batch: expected [N,C,H,W], got " +
                     shape_string(batch.shape()));
  }
  const Shape image{batch.dim(1), batch.dim(2), batch.dim(3)};
  const std::size_t per = shape_numel(image);
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < batch.dim(0); ++i) {
    out.emplace_back(image, std::vector<double>(batch.data().begin() + i * per,
                                                batch.data().begin() + (i + 1) * per));
  }
  return out;
}

}  // namespace awa
