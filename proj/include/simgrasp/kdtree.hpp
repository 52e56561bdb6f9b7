#pragma once

#include "simgrasp/core.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace simgrasp {

/// Static 3-d kd-tree over a point list. Immutable after construction and
/// safe to query from multiple threads.
///
/// Nearest-neighbor ties are broken toward the lower point index so results
/// are fully deterministic.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(const std::vector<Vec3>& points) { build(points); }

    void build(const std::vector<Vec3>& points);

    std::size_t size() const { return points_.size(); }

    /// Indices of the k nearest points, nearest first. Returns fewer than k
    /// only when the tree holds fewer points.
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

    /// knn with squared distances.
    std::vector<std::pair<std::size_t, double>> knn_sq(const Vec3& query, std::size_t k) const;

    /// All indices within `radius` of the query, sorted by (distance, index).
    std::vector<std::size_t> radius(const Vec3& query, double radius) const;

    /// Nearest point index and squared distance. Tree must be non-empty.
    std::pair<std::size_t, double> nearest_sq(const Vec3& query) const;

private:
    struct Node {
        int axis = -1;         // -1 marks a leaf
        double split = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t begin = 0;  // leaf range in order_
        std::uint32_t end = 0;
    };

    std::int32_t build_node(std::uint32_t begin, std::uint32_t end);

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;

    static constexpr std::uint32_t kLeafSize = 16;
};

}  // namespace simgrasp
