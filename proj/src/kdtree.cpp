#include "nsm/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nsm/error.hpp"

namespace nsm {

KdTree::KdTree(const Points& points) : points_(points) {
    const int n = static_cast<int>(points_.cols());
    if (n == 0) return;
    nodes_.reserve(n);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    root_ = build(idx, 0, n);
}

int KdTree::build(std::vector<int>& idx, int lo, int hi) {
    if (lo >= hi) return -1;

    Vec3 mn = points_.col(idx[lo]);
    Vec3 mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
        mn = mn.cwiseMin(points_.col(idx[i]));
        mx = mx.cwiseMax(points_.col(idx[i]));
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);

    const int mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](int a, int b) { return points_(axis, a) < points_(axis, b); });

    Node node;
    node.point = idx[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(idx, lo, mid);
    nodes_[self].right = build(idx, mid + 1, hi);
    return self;
}

std::pair<int, double> KdTree::nearest(const Vec3& query) const {
    if (empty()) throw InputError("KdTree::nearest: empty tree");
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    search_nearest(root_, query, best, best_d2);
    return {best, best_d2};
}

void KdTree::search_nearest(int node, const Vec3& q, int& best, double& best_d2) const {
    if (node < 0) return;
    const Node& nd = nodes_[node];
    const double d2 = (points_.col(nd.point) - q).squaredNorm();
    if (d2 < best_d2) {
        best_d2 = d2;
        best = nd.point;
    }
    const double delta = q[nd.axis] - points_(nd.axis, nd.point);
    const int near = delta < 0.0 ? nd.left : nd.right;
    const int far = delta < 0.0 ? nd.right : nd.left;
    search_nearest(near, q, best, best_d2);
    if (delta * delta < best_d2) search_nearest(far, q, best, best_d2);
}

std::vector<int> KdTree::knn(const Vec3& query, int k) const {
    k = std::min(k, size());
    std::vector<int> out;
    if (k <= 0) return out;
    std::vector<std::pair<double, int>> heap;  // max-heap on distance
    heap.reserve(static_cast<size_t>(k) + 1);
    search_knn(root_, query, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    out.reserve(heap.size());
    for (const auto& [d2, i] : heap) out.push_back(i);
    return out;
}

void KdTree::search_knn(int node, const Vec3& q, int k,
                        std::vector<std::pair<double, int>>& heap) const {
    if (node < 0) return;
    const Node& nd = nodes_[node];
    const double d2 = (points_.col(nd.point) - q).squaredNorm();
    if (static_cast<int>(heap.size()) < k) {
        heap.emplace_back(d2, nd.point);
        std::push_heap(heap.begin(), heap.end());
    } else if (d2 < heap.front().first) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = {d2, nd.point};
        std::push_heap(heap.begin(), heap.end());
    }
    const double delta = q[nd.axis] - points_(nd.axis, nd.point);
    const int near = delta < 0.0 ? nd.left : nd.right;
    const int far = delta < 0.0 ? nd.right : nd.left;
    search_knn(near, q, k, heap);
    const double worst = static_cast<int>(heap.size()) < k
                             ? std::numeric_limits<double>::infinity()
                             : heap.front().first;
    if (delta * delta < worst) search_knn(far, q, k, heap);
}

bool KdTree::any_within(const Vec3& query, double radius) const {
    if (empty()) return false;
    return search_within(root_, query, radius * radius);
}

bool KdTree::search_within(int node, const Vec3& q, double r2) const {
    if (node < 0) return false;
    const Node& nd = nodes_[node];
    if ((points_.col(nd.point) - q).squaredNorm() <= r2) return true;
    const double delta = q[nd.axis] - points_(nd.axis, nd.point);
    const int near = delta < 0.0 ? nd.left : nd.right;
    const int far = delta < 0.0 ? nd.right : nd.left;
    if (search_within(near, q, r2)) return true;
    if (delta * delta <= r2) return search_within(far, q, r2);
    return false;
}

}  // namespace nsm
