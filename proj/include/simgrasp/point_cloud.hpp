#pragma once

#include "simgrasp/core.hpp"

#include <vector>

namespace simgrasp {

/// Point positions in meters with optional per-point unit normals.
/// Normals, when present, are parallel to the point list.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    /// Throws InvalidInput if the normal list is present but inconsistent.
    void check() const;

    /// Returns the subcloud at the given indices (normals carried along).
    PointCloud select(const std::vector<std::size_t>& indices) const;

    /// Applies a rigid transform to points and (rotation only) to normals.
    PointCloud transformed(const Transform& t) const;

    Vec3 centroid() const;
};

}  // namespace simgrasp
