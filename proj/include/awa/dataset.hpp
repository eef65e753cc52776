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

#ifndef AWA_DATASET_HPP_
#define AWA_DATASET_HPP_

#include <cstdint>
#include <filesystem>

#include "awa/fedavg.hpp"
#include "awa/model.hpp"

namespace awa {

// N seeded images, each channel a sum of 3 Gaussian blobs min-max normalized
// to [0, 1], with seeded labels in [0, classes).
Dataset make_synthetic_dataset(ImageShape shape, std::size_t n,
                               std::size_t classes, std::uint64_t seed);

// The first N PPM/PGM files of `dir` in lexicographic order; every file must
// have the configured shape. Labels are seeded as in synthetic mode.
Dataset load_image_directory(const std::filesystem::path& dir,
                             ImageShape shape, std::size_t n,
                             std::size_t classes, std::uint64_t seed);

}  // namespace awa

#endif  // AWA_DATASET_HPP_
