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

#include "awa/model.hpp"

#include <cmath>
#include <stdexcept>

#include "awa/rng.hpp"

namespace awa {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kBatchNorm: return "batch_norm";
    case LayerKind::kFullyConnected: return "fully_connected";
  }
  return "unknown";
}

std::size_t LayerParams::numel() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.numel();
  return n;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const LayerParams& l : layers) n += l.numel();
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const LayerParams& l : layers)
    for (const Tensor& t : l.tensors)
      out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

bool same_layout(const ModelParams& a, const ModelParams& b) {
  if (a.arch != b.arch || a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const LayerParams& la = a.layers[l];
    const LayerParams& lb = b.layers[l];
    if (la.kind != lb.kind || la.tensors.size() != lb.tensors.size())
      return false;
    for (std::size_t k = 0; k < la.tensors.size(); ++k) {
      if (la.tensors[k].shape() != lb.tensors[k].shape()) return false;
    }
  }
  return true;
}

void require_same_layout(const char* what, const ModelParams& a,
                         const ModelParams& b) {
  if (!same_layout(a, b)) {
    throw std::invalid_argument(std::string(what) +
                                ": architecture mismatch (" + a.arch + ", " +
                                std::to_string(a.layers.size()) +
                                " layers vs " + b.arch + ", " +
                                std::to_string(b.layers.size()) + " layers)");
  }
}

namespace {

template <typename F>
ModelParams zip(const char* what, const ModelParams& a, const ModelParams& b,
                F f) {
  require_same_layout(what, a, b);
  ModelParams out = a;
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    for (std::size_t k = 0; k < a.layers[l].tensors.size(); ++k) {
      Tensor& t = out.layers[l].tensors[k];
      const Tensor& tb = b.layers[l].tensors[k];
      for (std::size_t i = 0; i < t.numel(); ++i) t[i] = f(t[i], tb[i]);
    }
  return out;
}

}  // namespace

ModelParams params_sub(const ModelParams& a, const ModelParams& b) {
  return zip("params_sub", a, b, [](double x, double y) { return x - y; });
}

ModelParams params_add(const ModelParams& a, const ModelParams& b) {
  return zip("params_add", a, b, [](double x, double y) { return x + y; });
}

ModelParams params_scale(const ModelParams& a, double s) {
  ModelParams out = a;
  for (LayerParams& l : out.layers)
    for (Tensor& t : l.tensors)
      for (double& v : t.data()) v *= s;
  return out;
}

ModelParams params_zeros_like(const ModelParams& a) {
  return params_scale(a, 0.0);
}

double params_max_abs_diff(const ModelParams& a, const ModelParams& b) {
  require_same_layout("params_max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    for (std::size_t k = 0; k < a.layers[l].tensors.size(); ++k)
      m = std::max(m, max_abs_diff(a.layers[l].tensors[k],
                                   b.layers[l].tensors[k]));
  return m;
}

namespace {

LayerSpec fc_layer(std::size_t in, std::size_t out, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::kFullyConnected;
  s.in = in;
  s.out = out;
  s.relu_after = relu;
  s.param_shapes = {Shape{out, in}, Shape{out}};
  return s;
}

LayerSpec conv_layer(std::size_t in, std::size_t out, std::size_t k) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.in = in;
  s.out = out;
  s.kernel = k;
  s.stride = 1;
  s.padding = k / 2;
  s.param_shapes = {Shape{out, in, k, k}, Shape{out}};
  return s;
}

LayerSpec bn_layer(std::size_t channels, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::kBatchNorm;
  s.in = channels;
  s.out = channels;
  s.relu_after = relu;
  s.param_shapes = {Shape{channels}, Shape{channels}};
  return s;
}

}  // namespace

Architecture make_architecture(std::string_view name, ImageShape input,
                               std::size_t classes) {
  if (input.numel() == 0 || classes < 2) {
    throw std::invalid_argument("make_architecture: empty input or < 2 classes");
  }
  Architecture a;
  a.name = std::string(name);
  a.input = input;
  a.classes = classes;
  const std::size_t d = input.numel();
  if (name == "mlp_small") {
    a.layers = {fc_layer(d, 32, true), fc_layer(32, classes, false)};
  } else if (name == "cnn_small") {
    constexpr std::size_t kWidth = 8;
    a.layers = {conv_layer(input.channels, kWidth, 3), bn_layer(kWidth, true),
                conv_layer(kWidth, kWidth, 3), bn_layer(kWidth, true),
                fc_layer(kWidth * input.height * input.width, classes, false)};
  } else if (name == "linear") {
    a.layers = {fc_layer(d, classes, false)};
  } else {
    throw std::invalid_argument("unknown architecture '" + std::string(name) +
                                "' (expected mlp_small, cnn_small or linear)");
  }
  return a;
}

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "model-init"));
  ModelParams p;
  p.arch = arch.name;
  for (const LayerSpec& spec : arch.layers) {
    LayerParams lp;
    lp.kind = spec.kind;
    if (spec.kind == LayerKind::kBatchNorm) {
      lp.tensors = {Tensor(spec.param_shapes[0], 1.0),
                    Tensor(spec.param_shapes[1], 0.0)};
    } else {
      const std::size_t fan_in =
          spec.kind == LayerKind::kConv ? spec.in * spec.kernel * spec.kernel
                                        : spec.in;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (const Shape& s : spec.param_shapes) {
        Tensor t(s);
        for (double& v : t.data()) v = rng.uniform(-bound, bound);
        lp.tensors.push_back(std::move(t));
      }
    }
    p.layers.push_back(std::move(lp));
  }
  return p;
}

BuiltModel build_model(std::string_view name, ImageShape input,
                       std::size_t classes, std::uint64_t seed) {
  Architecture arch = make_architecture(name, input, classes);
  ModelParams params = init_params(arch, seed);
  return {std::move(arch), std::move(params)};
}

LayerPartition layer_partition(const Architecture& arch) {
  LayerPartition p;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    switch (arch.layers[l].kind) {
      case LayerKind::kConv: p.conv.push_back(l); break;
      case LayerKind::kBatchNorm: p.batch_norm.push_back(l); break;
      case LayerKind::kFullyConnected: p.fully_connected.push_back(l); break;
    }
  }
  return p;
}

ParamVars params_to_vars(ad::Tape& tape, const ModelParams& params,
                         bool requires_grad) {
  ParamVars vars;
  vars.reserve(params.layers.size());
  for (const LayerParams& l : params.layers) {
    std::vector<ad::Var> lv;
    for (const Tensor& t : l.tensors) {
      lv.push_back(requires_grad ? tape.variable(t) : tape.constant(t));
    }
    vars.push_back(std::move(lv));
  }
  return vars;
}

ModelParams vars_to_params(const std::string& arch, const ModelParams& layout,
                           const ParamVars& vars) {
  ModelParams p;
  p.arch = arch;
  for (std::size_t l = 0; l < vars.size(); ++l) {
    LayerParams lp;
    lp.kind = layout.layers.at(l).kind;
    for (const ad::Var& v : vars[l]) lp.tensors.push_back(v.value());
    p.layers.push_back(std::move(lp));
  }
  return p;
}

ad::Var forward_logits(const Architecture& arch, const ParamVars& params,
                       ad::Var x) {
  if (params.size() != arch.layers.size()) {
    throw std::invalid_argument("forward: " + std::to_string(params.size()) +
                                " parameter layers for a " +
                                std::to_string(arch.layers.size()) +
                                "-layer architecture");
  }
  const Shape xs = x.shape();
  const ImageShape& in = arch.input;
  if (xs.size() != 4 || xs[1] != in.channels || xs[2] != in.height ||
      xs[3] != in.width) {
    throw ShapeError("forward: expected input [M," +
                     std::to_string(in.channels) + "," +
                     std::to_string(in.height) + "," +
                     std::to_string(in.width) + "], got " + shape_string(xs));
  }
  const std::size_t batch = xs[0];
  ad::Var h = x;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const LayerSpec& spec = arch.layers[l];
    const auto& p = params[l];
    switch (spec.kind) {
      case LayerKind::kConv: {
        h = ad::conv2d(h, p[0], spec.stride, spec.padding);
        const Shape hs = h.shape();
        h = ad::add(h, ad::channel_broadcast(p[1], hs[0], hs[2] * hs[3], hs));
        break;
      }
      case LayerKind::kBatchNorm:
        h = ad::batch_norm_train(h, p[0], p[1]);
        break;
      case LayerKind::kFullyConnected: {
        if (h.value().rank() != 2) {
          h = ad::reshape(h, Shape{batch, h.numel() / batch});
        }
        h = ad::matmul(h, ad::transpose(p[0]));
        h = ad::add(h, ad::channel_broadcast(p[1], batch, 1,
                                             Shape{batch, spec.out}));
        break;
      }
    }
    if (spec.relu_after) h = ad::relu(h);
  }
  return h;
}

ad::Var forward_loss(const Architecture& arch, const ParamVars& params,
                     ad::Var x, ad::Var targets) {
  return ad::softmax_cross_entropy(forward_logits(arch, params, x), targets);
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor t(Shape{labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::out_of_range("label " + std::to_string(labels[i]) +
                              " outside [0, " + std::to_string(classes) + ")");
    }
    t[i * classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return t;
}

}  // namespace awa
