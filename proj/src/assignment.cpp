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

#include "awa/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace awa {

namespace {

void check(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) {
    throw std::invalid_argument("assignment: cost has " +
                                std::to_string(cost.size()) + " entries, need " +
                                std::to_string(n * n));
  }
}

}  // namespace

// Potentials u (rows) and v (columns); way[j] remembers the previous column
// on the augmenting path. Index 0 is a sentinel column.
std::vector<std::size_t> solve_assignment(std::span<const double> cost,
                                          std::size_t n) {
  check(cost, n);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col(n);
  for (std::size_t j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
  return col;
}

std::vector<std::size_t> brute_force_assignment(std::span<const double> cost,
                                                std::size_t n) {
  check(cost, n);
  if (n > 10) throw std::invalid_argument("brute force assignment limited to n <= 10");
  std::vector<std::size_t> perm(n), best(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  best = perm;
  double best_cost = assignment_cost(cost, n, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = assignment_cost(cost, n, perm);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  }
  return best;
}

double assignment_cost(std::span<const double> cost, std::size_t n,
                       std::span<const std::size_t> col) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += cost[i * n + col[i]];
  return s;
}

}  // namespace awa
