#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "nsm/geometry.hpp"

namespace nsm {

// Static kd-tree over a 3xN point matrix; exact nearest-neighbor queries.
// Build is O(n log n), queries O(log n) on typical clouds.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(const Points& points);

    int size() const { return static_cast<int>(points_.cols()); }
    bool empty() const { return size() == 0; }

    // Returns (point index, squared distance). Tree must be nonempty.
    std::pair<int, double> nearest(const Vec3& query) const;
    double nearest_sq_dist(const Vec3& query) const { return nearest(query).second; }

    // k nearest point indices, ascending by distance. k is clamped to size().
    std::vector<int> knn(const Vec3& query, int k) const;

    // True if any point lies within `radius` of the query.
    bool any_within(const Vec3& query, double radius) const;

private:
    struct Node {
        int point = -1;
        int left = -1;
        int right = -1;
        int axis = 0;
    };

    int build(std::vector<int>& idx, int lo, int hi);
    void search_nearest(int node, const Vec3& q, int& best, double& best_d2) const;
    void search_knn(int node, const Vec3& q, int k,
                    std::vector<std::pair<double, int>>& heap) const;
    bool search_within(int node, const Vec3& q, double r2) const;

    Points points_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace nsm
