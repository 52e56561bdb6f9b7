#pragma once

#include "simgrasp/point_cloud.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace simgrasp {

/// Planar segment found by region growing.
struct PlaneSegment {
    Vec3 centroid = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 in_plane_axes[2] = {Vec3::UnitX(), Vec3::UnitY()};
    double area = 0.0;  // convex-hull area of the inliers, m^2
    std::vector<std::size_t> inlier_indices;
};

struct PlaneDetectParams {
    double dist_tol = 0.005;
    int min_inliers = 30;
    double normal_max_deg = 20.0;
    double growth_radius = 0.012;
    double curvature_radius = 0.01;
};

/// Result of aligning an observed cloud onto a model cloud. `transform` maps
/// observed-cloud coordinates into model coordinates.
struct RegistrationResult {
    Transform transform = Transform::Identity();
    double fitness = 0.0;      // fraction of observed points with a close correspondent
    double inlier_rmse = 0.0;  // meters over those correspondents
    std::string method;        // "pdm-icp" or "ransac-icp"
};

struct RegistrationParams {
    double reg_voxel = 0.005;        // internal working resolution
    double corr_dist = 0.02;         // ICP correspondence rejection distance
    int icp_max_iter = 50;
    double pdm_step_deg = 10.0;      // rotation sweep granularity
    std::size_t pdm_score_samples = 400;
    int ransac_iterations = 10000;
    double ransac_inlier_dist = 0.02;
    std::uint64_t ransac_seed = 7;
    double fpfh_radius = 0.012;
    std::size_t ransac_source_cap = 600;
    PlaneDetectParams planes;
};

/// Region-growing plane segmentation: seeds start at the lowest-curvature
/// point, growth accepts neighbors within dist_tol of the refitted plane and
/// within normal_max_deg of its normal. Segments come back area-descending.
std::vector<PlaneSegment> detect_planes(const PointCloud& cloud,
                                        const PlaneDetectParams& params = PlaneDetectParams());

/// Plane-overlap coarse alignment: picks the model plane with the area
/// closest to the observed one, overlaps the two plane frames, and sweeps
/// rotations about the shared normal (both normal polarities), returning the
/// pose with the smallest mean nearest-neighbor distance observed -> model.
Transform pdm_coarse(const PointCloud& observed, const PlaneSegment& observed_plane,
                     const PointCloud& model, const std::vector<PlaneSegment>& model_planes,
                     const RegistrationParams& params = RegistrationParams());

/// Point-to-point ICP with correspondence rejection beyond corr_dist.
/// Keeps the best pose seen, so fitness never drops below the init pose's.
RegistrationResult icp(const PointCloud& observed, const PointCloud& model,
                       const Transform& init,
                       const RegistrationParams& params = RegistrationParams());

struct Correspondence {
    std::size_t observed_index;
    std::size_t model_index;
};

/// Nearest-neighbor matches in FPFH space, observed -> model.
std::vector<Correspondence> fpfh_correspondences(const PointCloud& observed,
                                                 const PointCloud& model,
                                                 const RegistrationParams& params);

/// Seeded 3-point RANSAC over the given correspondences; deterministic for a
/// fixed seed. Throws CoarseFailure with fewer than 3 correspondences.
Transform ransac_coarse(const PointCloud& observed, const PointCloud& model,
                        const std::vector<Correspondence>& correspondences,
                        const RegistrationParams& params = RegistrationParams());

/// Full registration: plane-based coarse alignment when the observed cloud
/// has a detectable plane (and the model too), RANSAC otherwise, then ICP.
RegistrationResult register_clouds(const PointCloud& observed, const PointCloud& model,
                                   const RegistrationParams& params = RegistrationParams());

/// Least-squares rigid transform mapping src points onto dst points.
Transform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

}  // namespace simgrasp
