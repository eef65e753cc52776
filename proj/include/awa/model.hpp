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

#ifndef AWA_MODEL_HPP_
#define AWA_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "awa/autodiff.hpp"
#include "awa/tensor.hpp"

namespace awa {

enum class LayerKind { kConv, kBatchNorm, kFullyConnected };

const char* layer_kind_name(LayerKind kind);

struct ImageShape {
  std::size_t channels = 3;
  std::size_t height = 8;
  std::size_t width = 8;

  std::size_t numel() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kFullyConnected;
  std::size_t in = 0;   // input features / channels
  std::size_t out = 0;  // output features / channels
  std::size_t kernel = 0, stride = 1, padding = 0;  // conv only
  bool relu_after = false;
  // weight + bias for conv/fc, scale + shift for batch norm
  std::vector<Shape> param_shapes;
};

struct Architecture {
  std::string name;
  ImageShape input;
  std::size_t classes = 10;
  std::vector<LayerSpec> layers;

  std::size_t num_layers() const { return layers.size(); }
};

// Parameters of one layer; the layer owns every tensor it lists.
struct LayerParams {
  LayerKind kind = LayerKind::kFullyConnected;
  std::vector<Tensor> tensors;

  std::size_t numel() const;
  bool operator==(const LayerParams&) const = default;
};

// Layer-ordered parameter collection. Also the representation of a model
// update (a layer-aligned difference of two parameter sets).
struct ModelParams {
  std::string arch;
  std::vector<LayerParams> layers;

  std::size_t num_layers() const { return layers.size(); }
  std::size_t parameter_count() const;
  // All values in layer order.
  std::vector<double> flatten() const;
  bool operator==(const ModelParams&) const = default;
};
using ModelUpdate = ModelParams;

// Same architecture name, layer kinds and tensor shapes.
bool same_layout(const ModelParams& a, const ModelParams& b);
void require_same_layout(const char* what, const ModelParams& a,
                         const ModelParams& b);

ModelParams params_sub(const ModelParams& a, const ModelParams& b);
ModelParams params_add(const ModelParams& a, const ModelParams& b);
ModelParams params_scale(const ModelParams& a, double s);
ModelParams params_zeros_like(const ModelParams& a);
double params_max_abs_diff(const ModelParams& a, const ModelParams& b);

// mlp_small, cnn_small, or linear (single fc layer with bias).
Architecture make_architecture(std::string_view name, ImageShape input,
                               std::size_t classes);

// Uniform on [-a, a], a = 1/sqrt(fan_in) for conv and fc tensors; batch-norm
// scale starts at 1 and shift at 0.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

struct BuiltModel {
  Architecture arch;
  ModelParams params;
};
BuiltModel build_model(std::string_view name, ImageShape input,
                       std::size_t classes, std::uint64_t seed);

// Positions of each layer kind, in forward order (0-based layer indices).
struct LayerPartition {
  std::vector<std::size_t> conv;
  std::vector<std::size_t> batch_norm;
  std::vector<std::size_t> fully_connected;
};
LayerPartition layer_partition(const Architecture& arch);

// Tape-side parameters: one Var per parameter tensor, grouped by layer.
using ParamVars = std::vector<std::vector<ad::Var>>;

ParamVars params_to_vars(ad::Tape& tape, const ModelParams& params,
                         bool requires_grad);
ModelParams vars_to_params(const std::string& arch, const ModelParams& layout,
                           const ParamVars& vars);

// x: [M, C, H, W]; returns logits [M, classes].
ad::Var forward_logits(const Architecture& arch, const ParamVars& params,
                       ad::Var x);

// Mean softmax cross-entropy of the batch. targets: [M, classes] rows of
// class probabilities.
ad::Var forward_loss(const Architecture& arch, const ParamVars& params,
                     ad::Var x, ad::Var targets);

// One-hot rows; throws std::out_of_range for labels outside [0, classes).
Tensor one_hot(std::span<const int> labels, std::size_t classes);

}  // namespace awa

#endif  // AWA_MODEL_HPP_
