#include "simgrasp/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace simgrasp {

void KdTree::build(const std::vector<Vec3>& points) {
    points_ = points;
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.clear();
    nodes_.reserve(points.size() / kLeafSize * 2 + 4);
    root_ = points.empty() ? -1 : build_node(0, static_cast<std::uint32_t>(points.size()));
}

std::int32_t KdTree::build_node(std::uint32_t begin, std::uint32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }
    // Split along the widest extent.
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int32_t left = build_node(begin, mid);
    const std::int32_t right = build_node(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

namespace {

struct HeapEntry {
    double dist_sq;
    std::size_t index;
    bool operator<(const HeapEntry& o) const {
        // Max-heap on (dist, index) so the worst candidate pops first.
        if (dist_sq != o.dist_sq) return dist_sq < o.dist_sq;
        return index < o.index;
    }
};

}  // namespace

std::vector<std::pair<std::size_t, double>> KdTree::knn_sq(const Vec3& query, std::size_t k) const {
    std::vector<std::pair<std::size_t, double>> result;
    if (root_ < 0 || k == 0) return result;
    k = std::min(k, points_.size());

    std::priority_queue<HeapEntry> heap;
    auto consider = [&](std::size_t idx) {
        const double d = (points_[idx] - query).squaredNorm();
        if (heap.size() < k) {
            heap.push({d, idx});
        } else if (d < heap.top().dist_sq ||
                   (d == heap.top().dist_sq && idx < heap.top().index)) {
            heap.pop();
            heap.push({d, idx});
        }
    };

    // Iterative depth-first descent with pruning.
    std::vector<std::int32_t> stack{root_};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (node.axis < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) consider(order_[i]);
            continue;
        }
        const double delta = query[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        if (heap.size() < k || delta * delta <= heap.top().dist_sq) {
            stack.push_back(far);
        }
        stack.push_back(near);
    }

    result.resize(heap.size());
    for (std::size_t i = result.size(); i-- > 0;) {
        result[i] = {heap.top().index, heap.top().dist_sq};
        heap.pop();
    }
    return result;
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k) const {
    auto pairs = knn_sq(query, k);
    std::vector<std::size_t> out(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = pairs[i].first;
    return out;
}

std::vector<std::size_t> KdTree::radius(const Vec3& query, double radius) const {
    std::vector<std::pair<double, std::size_t>> found;
    if (root_ < 0 || radius < 0.0) return {};
    const double r_sq = radius * radius;
    std::vector<std::int32_t> stack{root_};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (node.axis < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const double d = (points_[idx] - query).squaredNorm();
                if (d <= r_sq) found.emplace_back(d, idx);
            }
            continue;
        }
        const double delta = query[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        if (delta * delta <= r_sq) stack.push_back(far);
        stack.push_back(near);
    }
    std::sort(found.begin(), found.end());
    std::vector<std::size_t> out(found.size());
    for (std::size_t i = 0; i < found.size(); ++i) out[i] = found[i].second;
    return out;
}

std::pair<std::size_t, double> KdTree::nearest_sq(const Vec3& query) const {
    auto pairs = knn_sq(query, 1);
    if (pairs.empty()) throw InvalidInput("nearest_sq on empty kd-tree");
    return pairs.front();
}

}  // namespace simgrasp
