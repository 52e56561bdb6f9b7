#pragma once

#include "simgrasp/kdtree.hpp"
#include "simgrasp/point_cloud.hpp"

#include <vector>

namespace simgrasp {

/// Principal components of a point set: covariance eigenvalues in descending
/// order with the matching orthonormal axes as columns.
struct PcaTriple {
    Vec3 singular_values = Vec3::Zero();  // sigma1 >= sigma2 >= sigma3 >= 0
    Mat3 axes = Mat3::Identity();         // columns match singular_values
};

/// PCA of the mean-centered covariance (population normalization, 1/N).
/// Throws InsufficientPoints for fewer than 3 points.
PcaTriple pca3(const std::vector<Vec3>& points);

/// Per-point unit normals from PCA of each radius neighborhood, oriented
/// toward the viewpoint. Neighborhoods with fewer than 3 points (or a
/// degenerate spread) fall back to the global PCA normal of the whole cloud.
PointCloud estimate_normals(const PointCloud& cloud, double radius, const Vec3& viewpoint);

/// Indices of the voxel representatives: one point per occupied voxel, the
/// input point nearest the voxel centroid. Order follows the first point
/// seen in each voxel, so output is deterministic.
std::vector<std::size_t> voxel_downsample_indices(const PointCloud& cloud, double voxel);

/// Voxel-grid downsampling that keeps real input points (centroids would
/// detach normals from the sampled surface).
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

/// Marks points whose radius neighbors, projected into the tangent plane and
/// sorted by angle, leave a gap greater than `max_gap_deg`. Normals required.
std::vector<bool> detect_boundary(const PointCloud& cloud, double radius,
                                  double max_gap_deg = 90.0);

/// k nearest points to the query, nearest first, ties toward lower index.
std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k);

}  // namespace simgrasp
