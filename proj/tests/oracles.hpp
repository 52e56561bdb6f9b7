// Independent reference implementations used as test oracles. These stay
// deliberately naive (linear scans, brute-force pair loops, union-find) so a
// bug in the library's optimized paths cannot hide in a shared code path.
#pragma once

#include "simgrasp/cfpfh.hpp"
#include "simgrasp/point_cloud.hpp"
#include "simgrasp/sobb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

namespace oracles {

using simgrasp::Vec3;

/// k nearest by exhaustive scan, ties toward lower index.
inline std::vector<std::size_t> linear_knn(const std::vector<Vec3>& points, const Vec3& query,
                                           std::size_t k) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        scored.emplace_back((points[i] - query).squaredNorm(), i);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

/// Number of occupied voxels in a floor-quantized grid.
inline std::size_t occupied_voxel_count(const std::vector<Vec3>& points, double voxel) {
    std::set<std::array<long long, 3>> cells;
    for (const Vec3& p : points) {
        cells.insert({static_cast<long long>(std::floor(p.x() / voxel)),
                      static_cast<long long>(std::floor(p.y() / voxel)),
                      static_cast<long long>(std::floor(p.z() / voxel))});
    }
    return cells.size();
}

/// Boundary test for one point by exhaustive angular-gap computation.
inline bool boundary_gap_exceeds(const simgrasp::PointCloud& cloud, std::size_t index,
                                 double radius, double max_gap_deg) {
    const Vec3& n = cloud.normals[index];
    // Any orthogonal basis works; the gap is basis-independent.
    Vec3 t1 = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1).cross(n) : Vec3(1, 0, 0).cross(n);
    t1.normalize();
    const Vec3 t2 = n.cross(t1);
    std::vector<double> angles;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        if (j == index) continue;
        const Vec3 d = cloud.points[j] - cloud.points[index];
        if (d.norm() > radius) continue;
        const double u = d.dot(t1), v = d.dot(t2);
        if (u * u + v * v < 1e-24) continue;
        angles.push_back(std::atan2(v, u));
    }
    if (angles.size() < 2) return true;
    std::sort(angles.begin(), angles.end());
    double gap = angles.front() + 2 * M_PI - angles.back();
    for (std::size_t k = 1; k < angles.size(); ++k) gap = std::max(gap, angles[k] - angles[k - 1]);
    return gap > max_gap_deg * M_PI / 180.0;
}

// ---- Brute-force FPFH ------------------------------------------------------
// Mirrors the frozen bin layout (alpha | phi | theta, 11 bins each) with its
// own pair-feature math and no shared helpers.

inline bool pair_angles(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2,
                        double& alpha, double& phi, double& theta) {
    Vec3 d = p2 - p1;
    const double dist = d.norm();
    if (dist < 1e-12) return false;
    Vec3 ns = n1, nt = n2, dir = d;
    const double a1 = n1.dot(d) / dist;
    const double a2 = n2.dot(d) / dist;
    if (std::acos(std::min(1.0, std::abs(a1))) > std::acos(std::min(1.0, std::abs(a2)))) {
        ns = n2;
        nt = n1;
        dir = -d;
        phi = -a2;
    } else {
        phi = a1;
    }
    Vec3 v = dir.cross(ns);
    if (v.norm() < 1e-12) return false;
    v.normalize();
    const Vec3 w = ns.cross(v);
    alpha = std::clamp(v.dot(nt), -1.0, 1.0);
    phi = std::clamp(phi, -1.0, 1.0);
    theta = std::atan2(w.dot(nt), ns.dot(nt));
    return true;
}

inline std::array<double, 33> brute_spfh(const simgrasp::PointCloud& cloud, std::size_t index,
                                         double radius) {
    std::array<double, 33> hist{};
    int pairs = 0;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        if (j == index) continue;
        if ((cloud.points[j] - cloud.points[index]).norm() > radius) continue;
        double alpha, phi, theta;
        if (!pair_angles(cloud.points[index], cloud.normals[index], cloud.points[j],
                         cloud.normals[j], alpha, phi, theta)) {
            continue;
        }
        auto unit_bin = [](double x) {
            return std::clamp(static_cast<int>(std::floor((x + 1.0) / 2.0 * 11.0)), 0, 10);
        };
        const int theta_bin =
            std::clamp(static_cast<int>(std::floor((theta + M_PI) / (2 * M_PI) * 11.0)), 0, 10);
        hist[unit_bin(alpha)] += 1.0;
        hist[11 + unit_bin(phi)] += 1.0;
        hist[22 + theta_bin] += 1.0;
        ++pairs;
    }
    if (pairs > 0) {
        for (double& v : hist) v /= pairs;
    }
    return hist;
}

inline std::array<double, 33> brute_fpfh(const simgrasp::PointCloud& cloud, std::size_t index,
                                         double radius) {
    std::array<double, 33> acc = brute_spfh(cloud, index, radius);
    std::vector<std::size_t> neighbors;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
        if (j != index && (cloud.points[j] - cloud.points[index]).norm() <= radius) {
            neighbors.push_back(j);
        }
    }
    if (neighbors.empty()) return acc;
    for (std::size_t j : neighbors) {
        const double w = std::max((cloud.points[j] - cloud.points[index]).norm(), 1e-9);
        const auto h = brute_spfh(cloud, j, radius);
        for (int b = 0; b < 33; ++b) acc[b] += h[b] / (w * neighbors.size());
    }
    double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    if (total > 0) {
        for (double& v : acc) v /= total;
    }
    return acc;
}

// ---- Union-find clustering oracle ------------------------------------------

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

/// Partition of samples under the three cluster gates, as sorted member sets.
inline std::set<std::vector<std::size_t>> cluster_partition(
    const simgrasp::PointCloud& samples, const std::vector<simgrasp::FeaturePair>& pairs,
    double cluster_radius, double normal_angle_max_deg) {
    UnionFind uf(samples.size());
    const double angle_max = normal_angle_max_deg * M_PI / 180.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            if (!(pairs[i] == pairs[j])) continue;
            if ((samples.points[i] - samples.points[j]).norm() > cluster_radius) continue;
            double c = samples.normals[i].dot(samples.normals[j]);
            c = std::clamp(c, -1.0, 1.0);
            if (std::acos(c) > angle_max) continue;
            uf.unite(i, j);
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) groups[uf.find(i)].push_back(i);
    std::set<std::vector<std::size_t>> partition;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        partition.insert(members);
    }
    return partition;
}

// ---- Direct formula evaluations --------------------------------------------

inline double direct_qs(const std::map<std::pair<int, int>, int>& p,
                        const std::map<std::pair<int, int>, int>& c) {
    double num = 0, den = 0;
    for (const auto& [pair, pn] : p) {
        den += pn;
        auto it = c.find(pair);
        num += std::min(pn, it == c.end() ? 0 : it->second);
    }
    return den == 0 ? 0.0 : num / den;
}

inline double direct_ds(const Vec3& p_main, const std::vector<Vec3>& c_dists) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& d : c_dists) {
        best = std::min(best, std::sqrt((p_main.x() - d.x()) * (p_main.x() - d.x()) +
                                        (p_main.y() - d.y()) * (p_main.y() - d.y()) +
                                        (p_main.z() - d.z()) * (p_main.z() - d.z())));
    }
    return best;
}

inline double direct_ss(Vec3 a, Vec3 b) {
    std::sort(a.data(), a.data() + 3, std::greater<double>());
    std::sort(b.data(), b.data() + 3, std::greater<double>());
    return std::sqrt((a - b).squaredNorm());
}

}  // namespace oracles
