#include "simgrasp/point_cloud.hpp"

namespace simgrasp {

void PointCloud::check() const {
    if (has_normals() && normals.size() != points.size()) {
        throw InvalidInput("normal count does not match point count");
    }
    for (const Vec3& n : normals) {
        if (std::abs(n.norm() - 1.0) > 1e-6) {
            throw InvalidInput("normals must be unit length");
        }
    }
}

PointCloud PointCloud::select(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    if (has_normals()) out.normals.reserve(indices.size());
    for (std::size_t i : indices) {
        out.points.push_back(points[i]);
        if (has_normals()) out.normals.push_back(normals[i]);
    }
    return out;
}

PointCloud PointCloud::transformed(const Transform& t) const {
    PointCloud out;
    out.points.reserve(points.size());
    out.normals.reserve(normals.size());
    for (const Vec3& p : points) out.points.push_back(t * p);
    for (const Vec3& n : normals) out.normals.push_back(t.linear() * n);
    return out;
}

Vec3 PointCloud::centroid() const {
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : points) sum += p;
    return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

}  // namespace simgrasp
