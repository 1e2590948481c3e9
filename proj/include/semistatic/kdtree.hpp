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

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Core>

namespace semistatic {

// Static 3-d tree over a borrowed point array. Ties are broken on the point
// index so builds are reproducible.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Eigen::Vector3d>& pts) : pts_(pts) {
    if (pts_.empty()) return;
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(pts_.size());
    root_ = build(0, static_cast<int>(pts_.size()), 0);
  }

  int nearest(const Eigen::Vector3d& q, double* dist_sq_out = nullptr) const {
    int best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    nearest_rec(root_, q, &best, &best_sq);
    if (dist_sq_out) *dist_sq_out = best_sq;
    return best;
  }

  /// Indices of the k nearest points, closest first.
  std::vector<int> knn(const Eigen::Vector3d& q, int k) const {
    // max-heap of (dist_sq, idx)
    std::priority_queue<std::pair<double, int>> heap;
    knn_rec(root_, q, k, &heap);
    std::vector<int> out(heap.size());
    for (int i = static_cast<int>(heap.size()) - 1; i >= 0; --i) {
      out[i] = heap.top().second;
      heap.pop();
    }
    return out;
  }

  std::vector<int> radius(const Eigen::Vector3d& q, double r) const {
    std::vector<int> out;
    radius_rec(root_, q, r * r, &out);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool empty() const { return pts_.empty(); }

 private:
  struct Node {
    int idx = -1;
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       const double pa = pts_[a][axis], pb = pts_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{order_[mid], axis, -1, -1});
    const int left = build(lo, mid, depth + 1);
    const int right = build(mid + 1, hi, depth + 1);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
  }

  void nearest_rec(int node_id, const Eigen::Vector3d& q, int* best, double* best_sq) const {
    if (node_id < 0) return;
    const Node& n = nodes_[node_id];
    const double d_sq = (pts_[n.idx] - q).squaredNorm();
    if (d_sq < *best_sq || (d_sq == *best_sq && (*best < 0 || n.idx < *best))) {
      *best_sq = d_sq;
      *best = n.idx;
    }
    const double diff = q[n.axis] - pts_[n.idx][n.axis];
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    nearest_rec(near, q, best, best_sq);
    if (diff * diff <= *best_sq) nearest_rec(far, q, best, best_sq);
  }

  void knn_rec(int node_id, const Eigen::Vector3d& q, int k,
               std::priority_queue<std::pair<double, int>>* heap) const {
    if (node_id < 0) return;
    const Node& n = nodes_[node_id];
    const double d_sq = (pts_[n.idx] - q).squaredNorm();
    if (static_cast<int>(heap->size()) < k) {
      heap->emplace(d_sq, n.idx);
    } else if (d_sq < heap->top().first) {
      heap->pop();
      heap->emplace(d_sq, n.idx);
    }
    const double diff = q[n.axis] - pts_[n.idx][n.axis];
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    knn_rec(near, q, k, heap);
    if (static_cast<int>(heap->size()) < k || diff * diff <= heap->top().first) {
      knn_rec(far, q, k, heap);
    }
  }

  void radius_rec(int node_id, const Eigen::Vector3d& q, double r_sq,
                  std::vector<int>* out) const {
    if (node_id < 0) return;
    const Node& n = nodes_[node_id];
    if ((pts_[n.idx] - q).squaredNorm() <= r_sq) out->push_back(n.idx);
    const double diff = q[n.axis] - pts_[n.idx][n.axis];
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    radius_rec(near, q, r_sq, out);
    if (diff * diff <= r_sq) radius_rec(far, q, r_sq, out);
  }

  const std::vector<Eigen::Vector3d>& pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace semistatic
