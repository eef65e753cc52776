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

#ifndef AWA_IMAGE_IO_HPP_
#define AWA_IMAGE_IO_HPP_

#include <filesystem>
#include <stdexcept>

#include "awa/tensor.hpp"

namespace awa {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// [C, H, W] in [0, 1] to binary 8-bit PNM: P6 for C = 3, P5 for C = 1.
// Values are clamped and mapped linearly, v -> round(255 v).
void write_pnm(const std::filesystem::path& path, const Tensor& image);

// Reads P5/P6 (maxval <= 255) into [C, H, W] scaled by 1/maxval.
Tensor read_pnm(const std::filesystem::path& path);

// Side-by-side mosaic of an [N, C, H, W] batch with a 1-pixel white gutter.
Tensor mosaic(const Tensor& batch);

}  // namespace awa

#endif  // AWA_IMAGE_IO_HPP_
