#pragma once

#include "simgrasp/point_cloud.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace simgrasp {

/// Triangle mesh with outward-facing winding (counter-clockwise from outside).
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    bool watertight = false;

    /// Validates indices and rejects degenerate triangles.
    void check() const;

    Vec3 face_normal(std::size_t tri) const;
    double face_area(std::size_t tri) const;
    double surface_area() const;

    Mesh transformed(const Transform& t) const;

    /// FNV-1a over vertex coordinates and triangle indices; used to derive
    /// deterministic sampler seeds from content.
    std::uint64_t content_hash() const;
};

// Procedural primitives, centered at the origin in canonical (axis-aligned)
// pose. Dimensions in meters.
Mesh make_box(double sx, double sy, double sz);
Mesh make_cylinder(double radius, double height, int segments = 48);
Mesh make_sphere(double radius, int subdivisions = 3);
/// Open-top bowl: hemispheric outer shell, inner shell, rim ring.
Mesh make_bowl(double outer_radius, double thickness, int segments = 48, int rings = 12);
/// L-shaped bracket: two boxes joined along one edge.
Mesh make_l_bracket(double leg_a, double leg_b, double width, double thickness);
/// Box with one long top edge chamfered at `bevel_deg` from the side face.
/// The bevel cuts `bevel_depth` into the +x/+z edge, running along y.
Mesh make_beveled_block(double sx, double sy, double sz, double bevel_depth,
                        double bevel_deg);

Mesh read_obj(const std::string& path);
void write_obj(const Mesh& mesh, const std::string& path);

/// Uniform area sampling of the surface at roughly one point per
/// spacing^2 of area, with face normals attached. Deterministic per seed.
PointCloud sample_surface(const Mesh& mesh, double spacing, std::uint64_t seed);

}  // namespace simgrasp
