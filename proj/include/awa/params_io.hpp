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

#ifndef AWA_PARAMS_IO_HPP_
#define AWA_PARAMS_IO_HPP_

#include <filesystem>
#include <iosfwd>

#include "awa/model.hpp"

namespace awa {

// Binary layout, little-endian:
//   "AWAPARAM" | u32 version=1 | u32 name_len | name bytes | u32 L
//   per layer:  u8 kind | u32 tensor_count | per tensor: u32 rank | u64 dims
//   payload:    float64 values, layer order, row-major
void write_params(std::ostream& out, const ModelParams& params);
ModelParams read_params(std::istream& in);

void save_params(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace awa

#endif  // AWA_PARAMS_IO_HPP_
