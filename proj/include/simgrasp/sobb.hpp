#pragma once

#include "simgrasp/point_cloud.hpp"

namespace simgrasp {

/// Oriented box with one axis pinned to the support normal.
/// axes columns are (n, u, v); extents are full edge lengths along them.
struct Sobb {
    Vec3 center = Vec3::Zero();
    Mat3 axes = Mat3::Identity();
    Vec3 extents = Vec3::Zero();

    bool contains(const Vec3& p, double slack = 1e-9) const;
};

/// Three box extents in descending order, meters.
struct SortedExtents {
    Vec3 values = Vec3::Zero();  // v1 >= v2 >= v3 > 0

    SortedExtents() = default;
    /// Sorts the given lengths descending; rejects non-positive entries.
    explicit SortedExtents(const Vec3& lengths);
};

struct SobbParams {
    double projection_grid = 0.005;  // uniform-density grid for the 2-d PCA
};

/// Mean contact-region normal of the supporting surface under an object.
/// Support points are those within d_max of the object cloud; normals more
/// than 30 degrees from the running mean are treated as outliers.
/// Throws NoContactRegion when no support point is close enough.
Vec3 support_normal_nonflat(const PointCloud& object, const PointCloud& support,
                            double d_max = 0.02, double outlier_angle_deg = 30.0);

/// Box aligned to the support normal: points are projected onto the plane
/// through the origin perpendicular to the normal, grid-thinned to uniform
/// density, and 2-d PCA of the projections fixes the in-plane axes.
/// Throws DegenerateProjection when the projections are collinear.
Sobb build_sobb(const PointCloud& cloud, const Vec3& support_normal,
                const SobbParams& params = SobbParams());

/// Size similarity: Euclidean distance of descending-sorted extent triples.
double ss(const SortedExtents& observed, const SortedExtents& model);

/// True iff ss(observed, model) < ss_max.
bool dimensional_match(const SortedExtents& observed, const SortedExtents& model,
                       double ss_max = 0.1);

}  // namespace simgrasp
