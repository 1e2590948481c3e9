/*
 * Copyright 2026 The Semistatic Mapping Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace semistatic {

/// Minimum-cost one-to-one assignment (Kuhn-Munkres with potentials, O(n^3)).
/// Infinite entries are infeasible: the result is a maximum-cardinality
/// matching over finite entries of minimum total cost. Rectangular matrices
/// are padded internally. Pairs are returned as (row, col), sorted by row.
inline std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return {};

  // A finite stand-in for infinity keeps the potential updates well defined.
  // It dominates any achievable finite total, so infeasible pairs are only
  // chosen when a row cannot be matched at all; those are stripped below.
  double max_finite = 1.0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (std::isfinite(cost(i, j))) max_finite = std::max(max_finite, std::abs(cost(i, j)));
    }
  }
  const int n = std::max(rows, cols);
  const double big = (max_finite + 1.0) * (n + 1) * 1e3;

  const auto a = [&](int i, int j) -> double {
    if (i < rows && j < cols && std::isfinite(cost(i, j))) return cost(i, j);
    return big;
  };

  // Potentials-based shortest augmenting path, 1-indexed.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<std::pair<int, int>> result;
  for (int j = 1; j <= n; ++j) {
    const int i = match[j];
    if (i == 0) continue;
    const int row = i - 1, col = j - 1;
    if (row < rows && col < cols && std::isfinite(cost(row, col))) {
      result.emplace_back(row, col);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace semistatic
