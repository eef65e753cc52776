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

#ifndef AWA_ADAM_HPP_
#define AWA_ADAM_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace awa {

struct AdamOptions {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias-corrected moments over one flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamOptions options);

  void step(std::span<double> params, std::span<const double> grad);

  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return opt_; }

 private:
  AdamOptions opt_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace awa

#endif  // AWA_ADAM_HPP_
