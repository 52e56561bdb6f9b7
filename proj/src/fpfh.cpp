#include "simgrasp/fpfh.hpp"

#include <algorithm>
#include <cmath>

namespace simgrasp {

bool pair_features(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2,
                   double& alpha, double& phi, double& theta) {
    Vec3 dp = p2 - p1;
    const double d = dp.norm();
    if (d < 1e-12) return false;

    // The source of the Darboux frame is the point whose normal is closer to
    // the connecting line.
    Vec3 ns = n1, nt = n2;
    double angle1 = n1.dot(dp) / d;
    double angle2 = n2.dot(dp) / d;
    if (std::acos(std::clamp(std::abs(angle1), 0.0, 1.0)) >
        std::acos(std::clamp(std::abs(angle2), 0.0, 1.0))) {
        ns = n2;
        nt = n1;
        dp = -dp;
        phi = -angle2;
    } else {
        phi = angle1;
    }

    Vec3 v = dp.cross(ns);
    const double v_norm = v.norm();
    if (v_norm < 1e-12) return false;  // normal parallel to the line: no frame
    v /= v_norm;
    const Vec3 w = ns.cross(v);

    alpha = std::clamp(v.dot(nt), -1.0, 1.0);
    phi = std::clamp(phi, -1.0, 1.0);
    theta = std::atan2(w.dot(nt), ns.dot(nt));
    return true;
}

namespace {

inline int bin_unit(double value) {  // [-1, 1] -> [0, 10]
    const int b = static_cast<int>(std::floor((value + 1.0) * 0.5 * kFpfhBinsPerAngle));
    return std::clamp(b, 0, kFpfhBinsPerAngle - 1);
}

inline int bin_angle(double value) {  // [-pi, pi] -> [0, 10]
    const int b = static_cast<int>(std::floor((value + kPi) / (2.0 * kPi) * kFpfhBinsPerAngle));
    return std::clamp(b, 0, kFpfhBinsPerAngle - 1);
}

/// Simplified point feature histogram: pair features between one point and
/// each of its radius neighbors, normalized by pair count.
FpfhHistogram spfh(const PointCloud& cloud, const std::vector<std::size_t>& neighbors,
                   std::size_t index) {
    FpfhHistogram hist{};
    int pairs = 0;
    for (std::size_t j : neighbors) {
        if (j == index) continue;
        double alpha, phi, theta;
        if (!pair_features(cloud.points[index], cloud.normals[index],
                           cloud.points[j], cloud.normals[j], alpha, phi, theta)) {
            continue;
        }
        hist[bin_unit(alpha)] += 1.0;
        hist[kFpfhBinsPerAngle + bin_unit(phi)] += 1.0;
        hist[2 * kFpfhBinsPerAngle + bin_angle(theta)] += 1.0;
        ++pairs;
    }
    if (pairs > 0) {
        for (double& v : hist) v /= pairs;
    }
    return hist;
}

}  // namespace

FpfhHistogram fpfh(const PointCloud& cloud, const KdTree& tree, std::size_t index,
                   double radius) {
    if (!cloud.has_normals()) throw InvalidInput("fpfh: normals required");
    if (radius <= 0.0) throw InvalidInput("fpfh: radius must be positive");

    const auto neighbors = tree.radius(cloud.points[index], radius);
    std::vector<std::size_t> others;
    others.reserve(neighbors.size());
    for (std::size_t j : neighbors) {
        if (j != index) others.push_back(j);
    }

    FpfhHistogram acc = spfh(cloud, neighbors, index);
    if (others.empty()) return acc;  // all-zero histogram stays all-zero

    const double k = static_cast<double>(others.size());
    for (std::size_t j : others) {
        const double w = std::max((cloud.points[j] - cloud.points[index]).norm(), 1e-9);
        const auto nbr_hist = spfh(cloud, tree.radius(cloud.points[j], radius), j);
        for (int b = 0; b < kFpfhBins; ++b) acc[b] += nbr_hist[b] / (w * k);
    }

    double total = 0.0;
    for (double v : acc) total += v;
    if (total > 0.0) {
        for (double& v : acc) v /= total;
    }
    return acc;
}

FpfhHistogram fpfh(const PointCloud& cloud, std::size_t index, double radius) {
    KdTree tree(cloud.points);
    return fpfh(cloud, tree, index, radius);
}

std::vector<FpfhHistogram> fpfh_all(const PointCloud& cloud, double radius) {
    if (!cloud.has_normals()) throw InvalidInput("fpfh_all: normals required");
    KdTree tree(cloud.points);
    std::vector<FpfhHistogram> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out[i] = fpfh(cloud, tree, i, radius);
    }
    return out;
}

}  // namespace simgrasp
