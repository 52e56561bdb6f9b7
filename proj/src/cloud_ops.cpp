#include "simgrasp/cloud_ops.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace simgrasp {

namespace {

Mat3 covariance_of(const std::vector<Vec3>& points, const Vec3& mean) {
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : points) {
        const Vec3 d = p - mean;
        cov.noalias() += d * d.transpose();
    }
    return cov / static_cast<double>(points.size());
}

PcaTriple eigen_descending(const Mat3& cov) {
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    PcaTriple out;
    // Eigen returns ascending order; flip to descending.
    for (int i = 0; i < 3; ++i) {
        out.singular_values[i] = std::max(0.0, solver.eigenvalues()[2 - i]);
        out.axes.col(i) = solver.eigenvectors().col(2 - i);
    }
    return out;
}

}  // namespace

PcaTriple pca3(const std::vector<Vec3>& points) {
    if (points.size() < 3) {
        throw InsufficientPoints("pca3 requires at least 3 points");
    }
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    return eigen_descending(covariance_of(points, mean));
}

PointCloud estimate_normals(const PointCloud& cloud, double radius, const Vec3& viewpoint) {
    if (cloud.empty()) throw InvalidInput("estimate_normals: empty cloud");
    if (radius <= 0.0) throw InvalidInput("estimate_normals: radius must be positive");

    // Global fallback normal for degenerate neighborhoods.
    Vec3 global_normal = Vec3::UnitZ();
    if (cloud.size() >= 3) {
        Vec3 mean = Vec3::Zero();
        for (const Vec3& p : cloud.points) mean += p;
        mean /= static_cast<double>(cloud.size());
        global_normal = eigen_descending(covariance_of(cloud.points, mean)).axes.col(2);
    }

    KdTree tree(cloud.points);
    PointCloud out;
    out.points = cloud.points;
    out.normals.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nbr = tree.radius(cloud.points[i], radius);
        Vec3 normal = global_normal;
        if (nbr.size() >= 3) {
            std::vector<Vec3> local;
            local.reserve(nbr.size());
            for (std::size_t j : nbr) local.push_back(cloud.points[j]);
            Vec3 mean = Vec3::Zero();
            for (const Vec3& p : local) mean += p;
            mean /= static_cast<double>(local.size());
            const PcaTriple pca = eigen_descending(covariance_of(local, mean));
            // A rank-1 neighborhood has no well-defined plane; keep the fallback.
            if (pca.singular_values[1] > 1e-12 * std::max(pca.singular_values[0], 1e-30)) {
                normal = pca.axes.col(2);
            }
        }
        if (normal.dot(viewpoint - cloud.points[i]) < 0.0) normal = -normal;
        out.normals[i] = normal.normalized();
    }
    return out;
}

namespace {

struct VoxelKey {
    std::int64_t x, y, z;
    bool operator==(const VoxelKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

VoxelKey key_of(const Vec3& p, double voxel) {
    return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
            static_cast<std::int64_t>(std::floor(p.y() / voxel)),
            static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

}  // namespace

std::vector<std::size_t> voxel_downsample_indices(const PointCloud& cloud, double voxel) {
    if (voxel <= 0.0) throw InvalidInput("voxel_downsample: voxel must be positive");

    struct Cell {
        Vec3 sum = Vec3::Zero();
        std::vector<std::size_t> members;
    };
    std::unordered_map<VoxelKey, Cell, VoxelKeyHash> grid;
    std::vector<VoxelKey> order;  // first-seen order of occupied voxels
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const VoxelKey key = key_of(cloud.points[i], voxel);
        auto [it, inserted] = grid.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.sum += cloud.points[i];
        it->second.members.push_back(i);
    }

    std::vector<std::size_t> out;
    out.reserve(order.size());
    // Two-point voxels make both members exactly equidistant from the
    // centroid; a tolerance keeps the lower-index tie-break in charge instead
    // of rounding noise.
    const double tie_tol = 1e-9 * voxel * voxel;
    for (const VoxelKey& key : order) {
        const Cell& cell = grid.at(key);
        const Vec3 centroid = cell.sum / static_cast<double>(cell.members.size());
        std::size_t best = cell.members.front();  // members are in ascending order
        double best_d = (cloud.points[best] - centroid).squaredNorm();
        for (std::size_t idx : cell.members) {
            const double d = (cloud.points[idx] - centroid).squaredNorm();
            if (d < best_d - tie_tol) {
                best = idx;
                best_d = d;
            }
        }
        out.push_back(best);
    }
    return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
    return cloud.select(voxel_downsample_indices(cloud, voxel));
}

std::vector<bool> detect_boundary(const PointCloud& cloud, double radius, double max_gap_deg) {
    if (!cloud.has_normals()) throw InvalidInput("detect_boundary: normals required");
    const double max_gap = deg2rad(max_gap_deg);

    KdTree tree(cloud.points);
    std::vector<bool> mask(cloud.size(), false);
    std::vector<double> angles;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& n = cloud.normals[i];
        const Vec3 t1 = any_orthogonal(n);
        const Vec3 t2 = n.cross(t1);
        angles.clear();
        for (std::size_t j : tree.radius(cloud.points[i], radius)) {
            if (j == i) continue;
            const Vec3 d = cloud.points[j] - cloud.points[i];
            const double u = d.dot(t1);
            const double v = d.dot(t2);
            if (u * u + v * v < 1e-24) continue;  // projects onto the point itself
            angles.push_back(std::atan2(v, u));
        }
        if (angles.size() < 2) {
            mask[i] = true;  // nothing around: the full circle is a gap
            continue;
        }
        std::sort(angles.begin(), angles.end());
        double gap = angles.front() + 2.0 * kPi - angles.back();
        for (std::size_t k = 1; k < angles.size(); ++k) {
            gap = std::max(gap, angles[k] - angles[k - 1]);
        }
        mask[i] = gap > max_gap;
    }
    return mask;
}

std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k) {
    if (k == 0) throw InvalidInput("knn: k must be >= 1");
    KdTree tree(cloud.points);
    return tree.knn(query, k);
}

}  // namespace simgrasp
