#pragma once

#include "simgrasp/render.hpp"
#include "simgrasp/semantic.hpp"

#include <optional>
#include <string>

namespace simgrasp {

/// Ground truth recorded by the generator for scoring.
struct SceneTruth {
    std::string model_id;
    Transform object_pose = Transform::Identity();
    std::size_t unoccluded_pixels = 0;
    std::size_t visible_pixels = 0;

    double occlusion_ratio() const {
        return unoccluded_pixels == 0
                   ? 0.0
                   : 1.0 - static_cast<double>(visible_pixels) / unoccluded_pixels;
    }
};

/// Single-view observation of one object: segmented partial cloud, support
/// plane, optional detected category, and generator ground truth.
struct ObservedScene {
    PointCloud cloud;
    Vec3 support_point = Vec3::Zero();
    Vec3 support_normal = Vec3::UnitZ();
    std::optional<Category> category;
    SceneTruth truth;
    VirtualCamera camera;
    // Generation metadata kept for exact replay.
    NoiseModel noise;
    std::uint64_t seed = 0;
    std::vector<CameraSpaceBox> occluders;
};

struct SceneSpec {
    Transform object_pose = Transform::Identity();
    VirtualCamera camera;
    NoiseModel noise;
    std::vector<CameraSpaceBox> occluders;
    std::uint64_t seed = 0;
    bool withhold_category = false;
    bool reestimate_normals = false;  // re-estimate instead of using face normals
    double normal_radius = 0.01;
};

/// Renders a mesh to a segmented partial cloud: rasterize, occlude, apply
/// noise, back-project the object mask. Deterministic per spec.
ObservedScene make_scene(const Mesh& mesh, const std::string& model_id,
                         const std::optional<Category>& category, const SceneSpec& spec);

/// Camera on a sphere around the target, looking diagonally downward.
/// Azimuth in degrees around z; elevation in degrees above the horizon.
VirtualCamera diagonal_camera(const Vec3& target, double distance, double azimuth_deg,
                              double elevation_deg, int width = 320, int height = 240,
                              double focal = 420.0);

/// Pose that rests the mesh on the z=0 plane with the given yaw and offset.
Transform resting_pose(const Mesh& mesh, double yaw_deg = 0.0,
                       const Vec3& xy_offset = Vec3::Zero());

/// JSON replay document (camera, pose, noise, seed) plus a PLY sidecar.
void save_scene(const ObservedScene& scene, const std::string& json_path);
ObservedScene load_scene(const std::string& json_path);

}  // namespace simgrasp
