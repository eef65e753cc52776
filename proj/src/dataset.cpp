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

#include "awa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "awa/image_io.hpp"
#include "awa/rng.hpp"

namespace awa {

namespace {

std::vector<int> seeded_labels(std::size_t n, std::size_t classes,
                               std::uint64_t seed) {
  if (classes == 0) throw std::invalid_argument("dataset: classes must be > 0");
  Rng rng(derive_seed(seed, "labels"));
  std::vector<int> labels(n);
  for (int& l : labels) l = static_cast<int>(rng.below(classes));
  return labels;
}

}  // namespace

Dataset make_synthetic_dataset(ImageShape shape, std::size_t n,
                               std::size_t classes, std::uint64_t seed) {
  if (n == 0 || shape.numel() == 0) {
    throw std::invalid_argument("synthetic dataset needs N > 0 and a non-empty shape");
  }
  Dataset d;
  d.classes = classes;
  d.images = Tensor(Shape{n, shape.channels, shape.height, shape.width});
  Rng rng(derive_seed(seed, "data"));
  const double H = static_cast<double>(shape.height);
  const double W = static_cast<double>(shape.width);
  const std::size_t plane = shape.height * shape.width;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < shape.channels; ++c) {
      double* px = d.images.data().data() + (i * shape.channels + c) * plane;
      std::fill(px, px + plane, 0.0);
      for (int b = 0; b < 3; ++b) {
        const double cy = rng.uniform(0.0, H), cx = rng.uniform(0.0, W);
        const double sigma = rng.uniform(0.15, 0.5) * std::max(H, W);
        const double amp = rng.uniform(0.3, 1.0);
        for (std::size_t y = 0; y < shape.height; ++y)
          for (std::size_t x = 0; x < shape.width; ++x) {
            const double dy = (static_cast<double>(y) + 0.5 - cy) / sigma;
            const double dx = (static_cast<double>(x) + 0.5 - cx) / sigma;
            px[y * shape.width + x] += amp * std::exp(-0.5 * (dx * dx + dy * dy));
          }
      }
      const auto [lo, hi] = std::minmax_element(px, px + plane);
      const double a = *lo, span = *hi - *lo;
      for (std::size_t k = 0; k < plane; ++k)
        px[k] = span > 0.0 ? (px[k] - a) / span : 0.5;
    }
  }
  d.labels = seeded_labels(n, classes, seed);
  return d;
}

Dataset load_image_directory(const std::filesystem::path& dir,
                             ImageShape shape, std::size_t n,
                             std::size_t classes, std::uint64_t seed) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw ImageIoError("image directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < n) {
    throw ImageIoError("image directory " + dir.string() + " has " +
                       std::to_string(files.size()) + " PPM/PGM files, need " +
                       std::to_string(n));
  }
  Dataset d;
  d.classes = classes;
  d.images = Tensor(Shape{n, shape.channels, shape.height, shape.width});
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor img = read_pnm(files[i]);
    const Shape want{shape.channels, shape.height, shape.width};
    if (img.shape() != want) {
      throw ImageIoError(files[i].string() + " has shape " +
                         shape_string(img.shape()) + ", expected " +
                         shape_string(want));
    }
    std::copy(img.data().begin(), img.data().end(),
              d.images.data().begin() + i * img.numel());
  }
  d.labels = seeded_labels(n, classes, seed);
  return d;
}

}  // namespace awa
