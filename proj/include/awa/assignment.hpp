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

#ifndef AWA_ASSIGNMENT_HPP_
#define AWA_ASSIGNMENT_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace awa {

// Minimum-cost perfect matching of an n x n row-major cost matrix
// (Hungarian method, O(n^3)). Returns col[i], the column given to row i.
std::vector<std::size_t> solve_assignment(std::span<const double> cost,
                                          std::size_t n);

// Exhaustive search over all n! permutations; small n only.
std::vector<std::size_t> brute_force_assignment(std::span<const double> cost,
                                                std::size_t n);

double assignment_cost(std::span<const double> cost, std::size_t n,
                       std::span<const std::size_t> col);

}  // namespace awa

#endif  // AWA_ASSIGNMENT_HPP_
