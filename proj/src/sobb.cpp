#include "simgrasp/sobb.hpp"

#include "simgrasp/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace simgrasp {

bool Sobb::contains(const Vec3& p, double slack) const {
    const Vec3 local = axes.transpose() * (p - center);
    for (int i = 0; i < 3; ++i) {
        if (std::abs(local[i]) > extents[i] * 0.5 + slack) return false;
    }
    return true;
}

SortedExtents::SortedExtents(const Vec3& lengths) {
    values = lengths;
    std::sort(values.data(), values.data() + 3, std::greater<double>());
    if (values[2] <= 0.0) throw InvalidInput("extents must be positive");
}

Vec3 support_normal_nonflat(const PointCloud& object, const PointCloud& support,
                            double d_max, double outlier_angle_deg) {
    if (!object.has_normals() || !support.has_normals()) {
        throw InvalidInput("support_normal_nonflat: both clouds need normals");
    }
    if (object.empty() || support.empty()) {
        throw InvalidInput("support_normal_nonflat: empty cloud");
    }

    KdTree object_tree(object.points);
    const double d_max_sq = d_max * d_max;
    std::vector<std::size_t> contact;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (object_tree.nearest_sq(support.points[i]).second < d_max_sq) {
            contact.push_back(i);
        }
    }
    if (contact.empty()) {
        throw NoContactRegion("no support point within distance threshold");
    }

    const double outlier_angle = deg2rad(outlier_angle_deg);
    Vec3 running = support.normals[contact.front()];
    for (std::size_t k = 1; k < contact.size(); ++k) {
        const Vec3& n = support.normals[contact[k]];
        if (vector_angle(n, running) > outlier_angle) continue;
        running += n;
    }
    return running.normalized();
}

namespace {

struct GridKey {
    std::int64_t u, v;
    bool operator==(const GridKey& o) const { return u == o.u && v == o.v; }
};

struct GridKeyHash {
    std::size_t operator()(const GridKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t x : {k.u, k.v}) {
            h ^= static_cast<std::uint64_t>(x);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

Sobb build_sobb(const PointCloud& cloud, const Vec3& support_normal,
                const SobbParams& params) {
    if (cloud.size() < 3) throw InsufficientPoints("build_sobb: need at least 3 points");
    if (std::abs(support_normal.norm() - 1.0) > 1e-6) {
        throw InvalidInput("build_sobb: support normal must be unit length");
    }

    const Vec3 n = support_normal;
    const Vec3 e1 = any_orthogonal(n);
    const Vec3 e2 = n.cross(e1);

    // Project onto the plane through the origin and thin to uniform density;
    // scan-line density bias would otherwise skew the 2-d PCA.
    std::unordered_map<GridKey, std::pair<Eigen::Vector2d, int>, GridKeyHash> grid;
    std::vector<GridKey> order;
    for (const Vec3& p : cloud.points) {
        const Vec3 q = p - n * p.dot(n);
        const Eigen::Vector2d uv(q.dot(e1), q.dot(e2));
        const GridKey key{static_cast<std::int64_t>(std::floor(uv.x() / params.projection_grid)),
                          static_cast<std::int64_t>(std::floor(uv.y() / params.projection_grid))};
        auto [it, inserted] = grid.try_emplace(key, std::make_pair(Eigen::Vector2d::Zero().eval(), 0));
        if (inserted) order.push_back(key);
        it->second.first += uv;
        it->second.second += 1;
    }

    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> thinned;
    thinned.reserve(order.size());
    for (const GridKey& key : order) {
        const auto& cell = grid.at(key);
        thinned.push_back(cell.first / cell.second);
        mean += thinned.back();
    }
    mean /= static_cast<double>(thinned.size());

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const Eigen::Vector2d& uv : thinned) {
        const Eigen::Vector2d d = uv - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(thinned.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
    const double lam1 = std::max(0.0, solver.eigenvalues()[1]);
    const double lam2 = std::max(0.0, solver.eigenvalues()[0]);
    if (lam1 < 1e-18) {
        throw DegenerateProjection("projections collapse to a point");
    }
    if (lam2 < 1e-12 * lam1) {
        throw DegenerateProjection("projections are collinear");
    }

    Vec3 u;
    if ((lam1 - lam2) <= 1e-9 * lam1) {
        // Near-isotropic projection: pin the in-plane axis toward world x
        // (or y when the normal is x itself) so the result is deterministic.
        Vec3 ref = Vec3::UnitX();
        if (std::abs(n.dot(ref)) > 0.9) ref = Vec3::UnitY();
        u = (ref - n * ref.dot(n)).normalized();
    } else {
        const Eigen::Vector2d major = solver.eigenvectors().col(1);
        u = (e1 * major.x() + e2 * major.y()).normalized();
    }
    const Vec3 v = n.cross(u);

    Mat3 axes;
    axes.col(0) = n;
    axes.col(1) = u;
    axes.col(2) = v;

    Vec3 lo = axes.transpose() * cloud.points.front();
    Vec3 hi = lo;
    for (const Vec3& p : cloud.points) {
        const Vec3 local = axes.transpose() * p;
        lo = lo.cwiseMin(local);
        hi = hi.cwiseMax(local);
    }

    Sobb box;
    box.axes = axes;
    box.center = axes * ((lo + hi) * 0.5);
    box.extents = (hi - lo).cwiseMax(1e-9);
    return box;
}

double ss(const SortedExtents& observed, const SortedExtents& model) {
    return (observed.values - model.values).norm();
}

bool dimensional_match(const SortedExtents& observed, const SortedExtents& model,
                       double ss_max) {
    return ss(observed, model) < ss_max;
}

}  // namespace simgrasp
