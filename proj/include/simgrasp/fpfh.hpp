#pragma once

#include "simgrasp/kdtree.hpp"
#include "simgrasp/point_cloud.hpp"

#include <array>
#include <vector>

namespace simgrasp {

inline constexpr int kFpfhBinsPerAngle = 11;
inline constexpr int kFpfhBins = 3 * kFpfhBinsPerAngle;  // alpha | phi | theta

using FpfhHistogram = std::array<double, kFpfhBins>;

/// Darboux-frame angle features of a point pair. Returns false when the two
/// points coincide (no frame can be built).
bool pair_features(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2,
                   double& alpha, double& phi, double& theta);

/// FPFH histogram of one point: its simplified point-feature histogram plus
/// the inverse-distance-weighted average of the neighbors' histograms,
/// L1-normalized. All-zero when the point has no radius neighbors.
///
/// Bin layout: alpha in [-1,1] (bins 0-10), phi in [-1,1] (11-21),
/// theta in [-pi,pi] (22-32), uniform bins.
FpfhHistogram fpfh(const PointCloud& cloud, const KdTree& tree, std::size_t index,
                   double radius);

/// Convenience overload that builds its own kd-tree.
FpfhHistogram fpfh(const PointCloud& cloud, std::size_t index, double radius);

/// FPFH histograms for every point (shared neighbor tree).
std::vector<FpfhHistogram> fpfh_all(const PointCloud& cloud, double radius);

}  // namespace simgrasp
