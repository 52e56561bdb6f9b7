#include "simgrasp/registration.hpp"

#include "simgrasp/cloud_ops.hpp"
#include "simgrasp/fpfh.hpp"
#include "simgrasp/kdtree.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace simgrasp {

namespace {

struct PlaneFit {
    Vec3 centroid = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 axes[2] = {Vec3::UnitX(), Vec3::UnitY()};
};

PlaneFit fit_plane(const PointCloud& cloud, const std::vector<std::size_t>& members) {
    PlaneFit fit;
    Vec3 mean = Vec3::Zero();
    for (std::size_t i : members) mean += cloud.points[i];
    mean /= static_cast<double>(members.size());
    Mat3 cov = Mat3::Zero();
    for (std::size_t i : members) {
        const Vec3 d = cloud.points[i] - mean;
        cov.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    fit.centroid = mean;
    fit.normal = solver.eigenvectors().col(0);
    fit.axes[0] = solver.eigenvectors().col(2);  // largest in-plane spread
    // Orient the normal with the majority of the member normals.
    double vote = 0.0;
    for (std::size_t i : members) vote += fit.normal.dot(cloud.normals[i]);
    if (vote < 0.0) fit.normal = -fit.normal;
    fit.axes[1] = fit.normal.cross(fit.axes[0]).normalized();
    fit.axes[0] = fit.axes[1].cross(fit.normal).normalized();
    return fit;
}

/// Convex-hull area of member points projected into the plane.
double hull_area(const PointCloud& cloud, const std::vector<std::size_t>& members,
                 const PlaneFit& fit) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(members.size());
    for (std::size_t i : members) {
        const Vec3 d = cloud.points[i] - fit.centroid;
        pts.emplace_back(d.dot(fit.axes[0]), d.dot(fit.axes[1]));
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return a == b; }),
              pts.end());
    if (pts.size() < 3) return 0.0;

    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                    const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {  // lower
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {  // upper
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k > 0 ? k - 1 : 0);
    double area = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        area += a.x() * b.y() - b.x() * a.y();
    }
    return std::abs(area) * 0.5;
}

}  // namespace

std::vector<PlaneSegment> detect_planes(const PointCloud& cloud,
                                        const PlaneDetectParams& params) {
    if (!cloud.has_normals()) throw InvalidInput("detect_planes: normals required");
    if (cloud.size() < static_cast<std::size_t>(params.min_inliers)) return {};

    KdTree tree(cloud.points);

    // Surface-variation curvature per point orders the seeds.
    std::vector<double> curvature(cloud.size(), 1.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nbr = tree.radius(cloud.points[i], params.curvature_radius);
        if (nbr.size() < 3) continue;
        Vec3 mean = Vec3::Zero();
        for (std::size_t j : nbr) mean += cloud.points[j];
        mean /= static_cast<double>(nbr.size());
        Mat3 cov = Mat3::Zero();
        for (std::size_t j : nbr) {
            const Vec3 d = cloud.points[j] - mean;
            cov.noalias() += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
        const double total = solver.eigenvalues().sum();
        curvature[i] = total > 0.0 ? solver.eigenvalues()[0] / total : 1.0;
    }
    std::vector<std::size_t> seeds(cloud.size());
    std::iota(seeds.begin(), seeds.end(), 0u);
    std::sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) {
        return curvature[a] < curvature[b] || (curvature[a] == curvature[b] && a < b);
    });

    const double normal_max = deg2rad(params.normal_max_deg);
    std::vector<bool> assigned(cloud.size(), false);
    std::vector<PlaneSegment> segments;

    for (std::size_t seed : seeds) {
        if (assigned[seed]) continue;

        std::vector<std::size_t> members{seed};
        std::vector<bool> in_region(cloud.size(), false);
        in_region[seed] = true;
        const Vec3 seed_normal = cloud.normals[seed];
        PlaneFit fit;
        fit.centroid = cloud.points[seed];
        fit.normal = seed_normal;

        std::vector<std::size_t> frontier{seed};
        while (!frontier.empty()) {
            std::vector<std::size_t> next;
            for (std::size_t cur : frontier) {
                for (std::size_t j : tree.radius(cloud.points[cur], params.growth_radius)) {
                    if (assigned[j] || in_region[j]) continue;
                    if (std::abs((cloud.points[j] - fit.centroid).dot(fit.normal)) >
                        params.dist_tol) continue;
                    if (vector_angle(cloud.normals[j], fit.normal) > normal_max) continue;
                    // The seed normal anchors the region: without it the refit
                    // plane crawls around curved surfaces and fakes planes.
                    if (vector_angle(cloud.normals[j], seed_normal) > normal_max) continue;
                    in_region[j] = true;
                    members.push_back(j);
                    next.push_back(j);
                }
            }
            if (members.size() >= 3) fit = fit_plane(cloud, members);
            frontier = std::move(next);
        }

        if (members.size() < static_cast<std::size_t>(params.min_inliers)) continue;
        for (std::size_t i : members) assigned[i] = true;

        PlaneSegment segment;
        const PlaneFit final_fit = fit_plane(cloud, members);
        segment.centroid = final_fit.centroid;
        segment.normal = final_fit.normal;
        segment.in_plane_axes[0] = final_fit.axes[0];
        segment.in_plane_axes[1] = final_fit.axes[1];
        std::sort(members.begin(), members.end());
        segment.inlier_indices = members;
        segment.area = hull_area(cloud, members, final_fit);
        if (segment.area <= 0.0) continue;
        segments.push_back(std::move(segment));
    }

    std::stable_sort(segments.begin(), segments.end(),
                     [](const PlaneSegment& a, const PlaneSegment& b) { return a.area > b.area; });
    return segments;
}

Transform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
    if (src.size() != dst.size() || src.size() < 3) {
        throw InvalidInput("kabsch: need >= 3 matched points");
    }
    Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        src_mean += src[i];
        dst_mean += dst[i];
    }
    src_mean /= static_cast<double>(src.size());
    dst_mean /= static_cast<double>(dst.size());

    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        h.noalias() += (src[i] - src_mean) * (dst[i] - dst_mean).transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 rot = svd.matrixV() * svd.matrixU().transpose();
    if (rot.determinant() < 0.0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1.0;
        rot = svd.matrixV() * flip * svd.matrixU().transpose();
    }
    Transform t = Transform::Identity();
    t.linear() = rot;
    t.translation() = dst_mean - rot * src_mean;
    return t;
}

namespace {

/// Deterministic subsample: evenly strided indices, at most cap of them.
std::vector<std::size_t> strided_indices(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> out;
    if (n == 0) return out;
    const std::size_t count = std::min(n, cap);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(i * n / count);
    }
    return out;
}

double mean_nn_distance(const std::vector<Vec3>& probe, const Transform& t,
                        const KdTree& target) {
    double sum = 0.0;
    for (const Vec3& p : probe) {
        sum += std::sqrt(target.nearest_sq(t * p).second);
    }
    return sum / static_cast<double>(probe.size());
}

Mat3 plane_frame(const PlaneSegment& plane, bool flip) {
    Mat3 frame;
    const Vec3 n = flip ? Vec3(-plane.normal) : plane.normal;
    const Vec3 a = plane.in_plane_axes[0];
    frame.col(0) = a;
    frame.col(1) = n.cross(a).normalized();
    frame.col(2) = n;
    return frame;
}

}  // namespace

Transform pdm_coarse(const PointCloud& observed, const PlaneSegment& observed_plane,
                     const PointCloud& model, const std::vector<PlaneSegment>& model_planes,
                     const RegistrationParams& params) {
    if (model_planes.empty()) throw CoarseFailure("pdm_coarse: no model planes");

    // Model plane with the area closest to the observed plane; ties within 5%
    // go to the plane nearest the model centroid.
    const Vec3 model_center = model.centroid();
    std::size_t best = 0;
    double best_gap = std::abs(model_planes[0].area - observed_plane.area);
    for (std::size_t i = 1; i < model_planes.size(); ++i) {
        const double gap = std::abs(model_planes[i].area - observed_plane.area);
        const double tie_band = 0.05 * std::max(observed_plane.area, 1e-12);
        if (gap < best_gap - tie_band) {
            best = i;
            best_gap = gap;
        } else if (std::abs(gap - best_gap) <= tie_band) {
            const double d_new = (model_planes[i].centroid - model_center).norm();
            const double d_best = (model_planes[best].centroid - model_center).norm();
            if (d_new < d_best) {
                best = i;
                best_gap = std::min(best_gap, gap);
            }
        }
    }
    const PlaneSegment& model_plane = model_planes[best];

    KdTree model_tree(model.points);
    std::vector<Vec3> probe;
    for (std::size_t i : strided_indices(observed.size(), params.pdm_score_samples)) {
        probe.push_back(observed.points[i]);
    }

    const int steps = std::max(1, static_cast<int>(std::lround(360.0 / params.pdm_step_deg)));
    const Mat3 obs_frame = plane_frame(observed_plane, false);
    Transform best_pose = Transform::Identity();
    double best_score = std::numeric_limits<double>::infinity();
    for (int flip = 0; flip < 2; ++flip) {
        const Mat3 model_frame = plane_frame(model_plane, flip == 1);
        for (int k = 0; k < steps; ++k) {
            const double angle = deg2rad(params.pdm_step_deg * k);
            const Mat3 spin = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
            Transform pose = Transform::Identity();
            pose.linear() = model_frame * spin * obs_frame.transpose();
            pose.translation() =
                model_plane.centroid - pose.linear() * observed_plane.centroid;
            const double score = mean_nn_distance(probe, pose, model_tree);
            if (score < best_score) {
                best_score = score;
                best_pose = pose;
            }
        }
    }
    return best_pose;
}

RegistrationResult icp(const PointCloud& observed, const PointCloud& model,
                       const Transform& init, const RegistrationParams& params) {
    if (observed.empty() || model.empty()) throw InvalidInput("icp: empty cloud");

    KdTree model_tree(model.points);
    const double corr_sq = params.corr_dist * params.corr_dist;

    auto evaluate = [&](const Transform& t, std::vector<Vec3>* src, std::vector<Vec3>* dst,
                        double* rmse) {
        std::size_t inliers = 0;
        double sq_sum = 0.0;
        for (const Vec3& p : observed.points) {
            const Vec3 moved = t * p;
            const auto [idx, d_sq] = model_tree.nearest_sq(moved);
            if (d_sq > corr_sq) continue;
            ++inliers;
            sq_sum += d_sq;
            if (src) {
                src->push_back(p);
                dst->push_back(model.points[idx]);
            }
        }
        if (rmse) *rmse = inliers ? std::sqrt(sq_sum / inliers) : 0.0;
        return static_cast<double>(inliers) / static_cast<double>(observed.size());
    };

    RegistrationResult best;
    best.transform = init;
    best.fitness = evaluate(init, nullptr, nullptr, &best.inlier_rmse);
    if (best.fitness == 0.0) return best;  // nothing to refine against

    Transform current = init;
    double prev_rmse = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < params.icp_max_iter; ++iter) {
        std::vector<Vec3> src, dst;
        double rmse = 0.0;
        const double fitness = evaluate(current, &src, &dst, &rmse);
        if (src.size() < 3) break;
        if (fitness > best.fitness ||
            (fitness == best.fitness && rmse < best.inlier_rmse)) {
            best.transform = current;
            best.fitness = fitness;
            best.inlier_rmse = rmse;
        }
        if (std::abs(prev_rmse - rmse) < 1e-6 * std::max(rmse, 1e-12)) break;
        prev_rmse = rmse;
        current = kabsch(src, dst);
    }

    // Score the final pose too; keep whichever aligned best.
    double final_rmse = 0.0;
    const double final_fitness = evaluate(current, nullptr, nullptr, &final_rmse);
    if (final_fitness > best.fitness ||
        (final_fitness == best.fitness && final_rmse < best.inlier_rmse)) {
        best.transform = current;
        best.fitness = final_fitness;
        best.inlier_rmse = final_rmse;
    }
    return best;
}

std::vector<Correspondence> fpfh_correspondences(const PointCloud& observed,
                                                 const PointCloud& model,
                                                 const RegistrationParams& params) {
    const auto model_features = fpfh_all(model, params.fpfh_radius);

    KdTree observed_tree(observed.points);
    const auto sources = strided_indices(observed.size(), params.ransac_source_cap);
    std::vector<FpfhHistogram> observed_features(sources.size());
    for (std::size_t k = 0; k < sources.size(); ++k) {
        observed_features[k] = fpfh(observed, observed_tree, sources[k], params.fpfh_radius);
    }

    auto feature_dist_sq = [](const FpfhHistogram& a, const FpfhHistogram& b, double cutoff) {
        double d = 0.0;
        for (int bin = 0; bin < kFpfhBins; ++bin) {
            const double diff = a[bin] - b[bin];
            d += diff * diff;
            if (d >= cutoff) break;
        }
        return d;
    };

    // Mutual nearest neighbors only: ambiguous features (repeated flat
    // patches) otherwise flood RANSAC with wrong matches.
    std::vector<Correspondence> out;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        double best_d = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < model_features.size(); ++j) {
            const double d = feature_dist_sq(observed_features[k], model_features[j], best_d);
            if (d < best_d) {
                best_d = d;
                best_j = j;
            }
        }
        double reverse_best = std::numeric_limits<double>::infinity();
        std::size_t reverse_k = 0;
        for (std::size_t k2 = 0; k2 < sources.size(); ++k2) {
            const double d =
                feature_dist_sq(model_features[best_j], observed_features[k2], reverse_best);
            if (d < reverse_best) {
                reverse_best = d;
                reverse_k = k2;
            }
        }
        if (reverse_k == k) out.push_back({sources[k], best_j});
    }
    // Too few mutual pairs: fall back to plain nearest so RANSAC can still try.
    if (out.size() < 3) {
        out.clear();
        for (std::size_t k = 0; k < sources.size(); ++k) {
            double best_d = std::numeric_limits<double>::infinity();
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < model_features.size(); ++j) {
                const double d = feature_dist_sq(observed_features[k], model_features[j], best_d);
                if (d < best_d) {
                    best_d = d;
                    best_j = j;
                }
            }
            out.push_back({sources[k], best_j});
        }
    }
    return out;
}

Transform ransac_coarse(const PointCloud& observed, const PointCloud& model,
                        const std::vector<Correspondence>& correspondences,
                        const RegistrationParams& params) {
    if (correspondences.size() < 3) {
        throw CoarseFailure("ransac_coarse: fewer than 3 correspondences");
    }

    Rng rng(params.ransac_seed);
    const double inlier_sq = params.ransac_inlier_dist * params.ransac_inlier_dist;

    Transform best_pose = Transform::Identity();
    std::size_t best_inliers = 0;
    bool found = false;
    std::vector<Vec3> src(3), dst(3);
    for (int iter = 0; iter < params.ransac_iterations; ++iter) {
        std::size_t a = rng.next_below(correspondences.size());
        std::size_t b = rng.next_below(correspondences.size());
        std::size_t c = rng.next_below(correspondences.size());
        if (a == b || b == c || a == c) continue;
        for (std::size_t k = 0; k < 3; ++k) {
            const Correspondence& corr = correspondences[k == 0 ? a : k == 1 ? b : c];
            src[k] = observed.points[corr.observed_index];
            dst[k] = model.points[corr.model_index];
        }
        // Degenerate (collinear) samples give unstable transforms.
        if ((src[1] - src[0]).cross(src[2] - src[0]).norm() < 1e-10) continue;
        Transform pose;
        try {
            pose = kabsch(src, dst);
        } catch (const InvalidInput&) {
            continue;
        }
        std::size_t inliers = 0;
        for (const Correspondence& corr : correspondences) {
            const Vec3 moved = pose * observed.points[corr.observed_index];
            if ((moved - model.points[corr.model_index]).squaredNorm() <= inlier_sq) {
                ++inliers;
            }
        }
        if (inliers > best_inliers) {
            best_inliers = inliers;
            best_pose = pose;
            found = true;
        }
    }
    if (!found || best_inliers < 3) {
        throw CoarseFailure("ransac_coarse: no consensus transform");
    }

    // Refit on the winning inlier set.
    std::vector<Vec3> src_in, dst_in;
    for (const Correspondence& corr : correspondences) {
        const Vec3 moved = best_pose * observed.points[corr.observed_index];
        if ((moved - model.points[corr.model_index]).squaredNorm() <= inlier_sq) {
            src_in.push_back(observed.points[corr.observed_index]);
            dst_in.push_back(model.points[corr.model_index]);
        }
    }
    if (src_in.size() >= 3) best_pose = kabsch(src_in, dst_in);
    return best_pose;
}

RegistrationResult register_clouds(const PointCloud& observed, const PointCloud& model,
                                   const RegistrationParams& params) {
    if (!observed.has_normals() || !model.has_normals()) {
        throw InvalidInput("register_clouds: both clouds need normals");
    }
    const PointCloud obs = voxel_downsample(observed, params.reg_voxel);
    const PointCloud mod = voxel_downsample(model, params.reg_voxel);

    const auto observed_planes = detect_planes(obs, params.planes);
    Transform coarse = Transform::Identity();
    std::string method = "pdm-icp";
    bool have_coarse = false;
    if (!observed_planes.empty()) {
        const auto model_planes = detect_planes(mod, params.planes);
        if (!model_planes.empty()) {
            coarse = pdm_coarse(obs, observed_planes.front(), mod, model_planes, params);
            have_coarse = true;
        }
    }
    if (!have_coarse) {
        method = "ransac-icp";
        const auto correspondences = fpfh_correspondences(obs, mod, params);
        try {
            coarse = ransac_coarse(obs, mod, correspondences, params);
        } catch (const CoarseFailure& e) {
            throw RegistrationFailed(std::string("both coarse paths failed: ") + e.what());
        }
    }

    RegistrationResult result = icp(obs, mod, coarse, params);
    result.method = method;
    return result;
}

}  // namespace simgrasp
