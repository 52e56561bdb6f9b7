#pragma once

#include "simgrasp/mesh.hpp"
#include "simgrasp/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace simgrasp {

/// Pinhole camera. The pose maps camera coordinates to world coordinates;
/// the camera looks along +z with x right and y down.
struct VirtualCamera {
    Transform pose = Transform::Identity();
    double fx = 400.0, fy = 400.0;
    double cx = 160.0, cy = 120.0;
    int width = 320, height = 240;

    void validate() const;

    /// Camera placed at `eye` looking at `target` with approximately-up `up`.
    static VirtualCamera look_at(const Vec3& eye, const Vec3& target,
                                 const Vec3& up = Vec3::UnitZ());

    /// Camera-frame ray direction through pixel center (u, v), z = 1.
    Vec3 pixel_ray(int u, int v) const;
};

/// Depth image in camera z (meters); 0 marks invalid pixels.
struct DepthImage {
    int width = 0, height = 0;
    std::vector<double> depth;      // camera z per pixel, 0 = invalid
    std::vector<std::int32_t> face; // source triangle id, -1 = none/occluder
    std::vector<std::uint8_t> object_mask;  // pixel belongs to the target object

    double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
    double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
    std::size_t valid_count() const;
    std::size_t object_count() const;
};

struct NoiseModel {
    enum class Kind { None, GaussianDepth, Smoothed, HoleFilled };
    Kind kind = Kind::None;
    double sigma = 0.0;     // meters, gaussian
    int kernel = 3;         // pixels, smoothed
    double hole_rate = 0.1; // fraction of valid pixels zeroed before refill

    void validate() const;
};

/// Axis-aligned box in camera coordinates used to emulate occluding clutter.
struct CameraSpaceBox {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
};

/// Z-buffer rasterization of the mesh (world coordinates) into a depth image.
/// Backfaces are culled; per-pixel source triangles give exact normals.
/// Throws EmptyRender when nothing lands in the frustum.
DepthImage render_depth(const Mesh& mesh, const VirtualCamera& camera);

/// Applies the chosen sensing-noise model; deterministic per seed.
DepthImage apply_noise(const DepthImage& image, const NoiseModel& model,
                       std::uint64_t seed);

/// Overwrites pixels whose rays hit an occluder box nearer than the surface.
/// Occluded pixels leave the object mask.
DepthImage occlude(const DepthImage& image, const VirtualCamera& camera,
                   const std::vector<CameraSpaceBox>& occluders);

/// Back-projects masked object pixels to a world-frame cloud with source-face
/// normals attached.
PointCloud backproject(const DepthImage& image, const VirtualCamera& camera,
                       const Mesh& world_mesh);

}  // namespace simgrasp
