#include "simgrasp/grasp.hpp"

#include "simgrasp/cloud_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace simgrasp {

std::vector<GripperBox> GripperModel::body_boxes(double width) const {
    const double w = std::min(width, max_opening);
    std::vector<GripperBox> boxes(3);
    // Fingers flank the closure region.
    boxes[0].center = Vec3(w / 2 + finger_thickness / 2, 0, -finger_length / 2);
    boxes[0].half = Vec3(finger_thickness / 2, finger_width / 2, finger_length / 2);
    boxes[1] = boxes[0];
    boxes[1].center.x() = -boxes[0].center.x();
    // Palm sits behind the fingers.
    boxes[2].center = Vec3(0, 0, -finger_length - palm_depth / 2);
    boxes[2].half = Vec3(max_opening / 2 + finger_thickness, palm_half_width / 2, palm_depth / 2);
    return boxes;
}

GripperBox GripperModel::closure_box(double width) const {
    const double w = std::min(width, max_opening);
    GripperBox box;
    box.center = Vec3(0, 0, -finger_length / 2);
    box.half = Vec3(w / 2, finger_width / 2, finger_length / 2);
    return box;
}

std::pair<Vec3, Vec3> GripperModel::stick(double width) const {
    const double w = std::min(width, max_opening);
    return {Vec3(-w / 2, 0, 0), Vec3(w / 2, 0, 0)};
}

void FineTuneParams::validate() const {
    if (stable_deg <= 0 || discard_deg <= 0 || flat_deg <= 0 || k1 <= 0 || k2 <= 0) {
        throw InvalidInput("fine-tune parameters must be positive");
    }
    if (stable_deg >= discard_deg) {
        throw InvalidInput("stable_deg must be below discard_deg");
    }
}

const char* verdict_name(GraspVerdict v) {
    switch (v) {
        case GraspVerdict::Stable: return "stable";
        case GraspVerdict::Tunable: return "tunable";
        case GraspVerdict::Unstable: return "unstable";
        case GraspVerdict::Potential: return "potential";
    }
    return "unstable";
}

namespace {

bool point_in_box(const Vec3& local, const GripperBox& box) {
    const Vec3 d = local - box.center;
    return std::abs(d.x()) <= box.half.x() && std::abs(d.y()) <= box.half.y() &&
           std::abs(d.z()) <= box.half.z();
}

/// Count of cloud points inside a gripper-frame box at the grasp pose;
/// early-outs after `limit` hits.
std::size_t points_in_box(const Grasp& grasp, const PointCloud& cloud, const KdTree& tree,
                          const GripperBox& box, std::size_t limit) {
    // Query the bounding sphere of the box, then test exactly.
    const Vec3 center_world = grasp.pose * box.center;
    const double radius = box.half.norm();
    const Transform to_local = grasp.pose.inverse();
    std::size_t hits = 0;
    for (std::size_t idx : tree.radius(center_world, radius)) {
        if (point_in_box(to_local * cloud.points[idx], box)) {
            if (++hits >= limit) break;
        }
    }
    return hits;
}

}  // namespace

std::vector<Grasp> sample_antipodal_grasps(const PointCloud& model_cloud,
                                           const GripperModel& gripper,
                                           const AntipodalParams& params) {
    if (!model_cloud.has_normals()) {
        throw InvalidInput("sample_antipodal_grasps: normals required");
    }
    if (model_cloud.size() < 2) throw NoGraspFound("model cloud too small");

    KdTree tree(model_cloud.points);
    Rng rng(params.seed);
    const double antipodal_min = deg2rad(params.antipodal_min_deg);
    const double line_max = deg2rad(params.line_max_deg);
    const double dedup_angle = deg2rad(params.dedup_angle_deg);
    const int approach_steps =
        std::max(1, static_cast<int>(std::lround(360.0 / params.approach_step_deg)));

    std::vector<Grasp> accepted;
    auto is_duplicate = [&](const Grasp& g) {
        for (const Grasp& k : accepted) {
            if ((k.center() - g.center()).norm() > params.dedup_translation) continue;
            if (acute_angle(k.closing_axis(), g.closing_axis()) > dedup_angle) continue;
            if (vector_angle(k.approach_axis(), g.approach_axis()) > dedup_angle) continue;
            return true;
        }
        return false;
    };

    for (std::size_t attempt = 0;
         attempt < params.max_attempts && accepted.size() < params.target_count; ++attempt) {
        const std::size_t i = rng.next_below(model_cloud.size());
        const std::size_t j = rng.next_below(model_cloud.size());
        if (i == j) continue;
        const Vec3& pi = model_cloud.points[i];
        const Vec3& pj = model_cloud.points[j];
        const double dist = (pj - pi).norm();
        if (dist < 1e-4 || dist > gripper.max_opening - params.width_margin) continue;
        const Vec3 dir = (pj - pi) / dist;
        const Vec3& ni = model_cloud.normals[i];
        const Vec3& nj = model_cloud.normals[j];
        if (vector_angle(ni, nj) < antipodal_min) continue;
        // Each normal must oppose the jaw that presses on it.
        if (vector_angle(ni, -dir) > line_max) continue;
        if (vector_angle(nj, dir) > line_max) continue;

        const Vec3 center = (pi + pj) / 2;
        const double width = std::min(dist + params.width_margin, gripper.max_opening);
        // The jaws close against the contact normals, so the closing axis is
        // their bisector rather than the (possibly slanted) connecting line.
        Vec3 closing = nj - ni;
        closing = closing.norm() > 1e-9 ? Vec3(closing.normalized()) : dir;
        const Vec3 ref = any_orthogonal(closing);
        for (int step = 0; step < approach_steps; ++step) {
            const double angle = deg2rad(params.approach_step_deg * step);
            const Vec3 approach =
                (Eigen::AngleAxisd(angle, closing).toRotationMatrix() * ref).normalized();
            Grasp grasp;
            grasp.width = width;
            Mat3 rot;
            rot.col(0) = closing;
            rot.col(2) = approach;
            rot.col(1) = approach.cross(closing).normalized();
            grasp.pose.linear() = rot;
            // Fingertips reach a little past the contact line.
            grasp.pose.translation() = center + approach * (gripper.finger_length * 0.25);

            bool collides = false;
            for (const GripperBox& box : gripper.body_boxes(width)) {
                if (points_in_box(grasp, model_cloud, tree, box, 1) > 0) {
                    collides = true;
                    break;
                }
            }
            if (collides || is_duplicate(grasp)) continue;
            accepted.push_back(grasp);
            break;  // one approach per contact pair keeps grasps diverse
        }
    }
    if (accepted.empty()) throw NoGraspFound("no antipodal grasp satisfies the gates");
    return accepted;
}

std::vector<Grasp> transfer_grasps(const std::vector<Grasp>& model_grasps,
                                   const RegistrationResult& registration) {
    const Transform model_to_world = registration.transform.inverse();
    std::vector<Grasp> out;
    out.reserve(model_grasps.size());
    for (const Grasp& g : model_grasps) {
        Grasp moved = g;
        moved.pose = model_to_world * g.pose;
        out.push_back(moved);
    }
    return out;
}

ReachabilityPredicate workspace_box_reachability(const Vec3& min_corner,
                                                 const Vec3& max_corner) {
    return [min_corner, max_corner](const Grasp& g) {
        const Vec3 c = g.center();
        for (int i = 0; i < 3; ++i) {
            if (c[i] < min_corner[i] || c[i] > max_corner[i]) return false;
        }
        return true;
    };
}

std::vector<Grasp> filter_feasible(const std::vector<Grasp>& grasps, const PointCloud& cloud,
                                   const SupportPlane& support, const GripperModel& gripper,
                                   const ReachabilityPredicate& reachable) {
    if (cloud.empty()) throw InvalidInput("filter_feasible: empty cloud");
    KdTree tree(cloud.points);

    std::vector<Grasp> kept;
    for (const Grasp& g : grasps) {
        // (a) the closure region must actually contain observed surface
        if (points_in_box(g, cloud, tree, gripper.closure_box(g.width), 1) == 0) continue;
        // (b) no body box may clip the observed cloud
        bool collides = false;
        const auto boxes = gripper.body_boxes(g.width);
        for (const GripperBox& box : boxes) {
            if (points_in_box(g, cloud, tree, box, 1) > 0) {
                collides = true;
                break;
            }
        }
        if (collides) continue;
        // (c) the gripper must stay above the support plane
        bool below = false;
        for (const GripperBox& box : boxes) {
            for (int corner = 0; corner < 8 && !below; ++corner) {
                const Vec3 offset(((corner & 1) ? box.half.x() : -box.half.x()),
                                  ((corner & 2) ? box.half.y() : -box.half.y()),
                                  ((corner & 4) ? box.half.z() : -box.half.z()));
                const Vec3 world = g.pose * (box.center + offset);
                if ((world - support.point).dot(support.normal) < -1e-6) below = true;
            }
            if (below) break;
        }
        if (below) continue;
        // (d) reachability stand-in
        if (reachable && !reachable(g)) continue;
        kept.push_back(g);
    }
    return kept;
}

std::vector<std::size_t> stick_contacts(const Grasp& grasp, const PointCloud& cloud,
                                        const KdTree& tree, double contact_radius) {
    // Stick endpoints scale with the grasp's own jaw opening.
    const Vec3 a = grasp.pose * Vec3(-grasp.width / 2, 0, 0);
    const Vec3 b = grasp.pose * Vec3(grasp.width / 2, 0, 0);
    const Vec3 axis = b - a;
    const double len = axis.norm();
    if (len < 1e-12) return {};
    const Vec3 dir = axis / len;

    // Candidates from a sphere around the stick midpoint.
    const Vec3 mid = (a + b) / 2;
    std::vector<std::pair<double, std::size_t>> hits;  // (projection, index)
    for (std::size_t idx : tree.radius(mid, len / 2 + contact_radius)) {
        const Vec3 d = cloud.points[idx] - a;
        const double t = std::clamp(d.dot(dir), 0.0, len);
        const double dist = (d - t * dir).norm();
        if (dist <= contact_radius) hits.emplace_back(t, idx);
    }
    if (hits.empty()) return {};
    std::sort(hits.begin(), hits.end());
    if (hits.size() == 1) return {hits.front().second};
    return {hits.front().second, hits.back().second};
}

std::vector<std::size_t> stick_contacts(const Grasp& grasp, const PointCloud& cloud,
                                        double contact_radius) {
    KdTree tree(cloud.points);
    return stick_contacts(grasp, cloud, tree, contact_radius);
}

GraspVerdict classify(const std::vector<std::size_t>& contacts, const PointCloud& cloud,
                      const Grasp& grasp, const FineTuneParams& params) {
    params.validate();
    if (contacts.empty()) return GraspVerdict::Potential;
    const Vec3 axis = grasp.closing_axis();
    bool all_stable = true;
    for (std::size_t idx : contacts) {
        const double theta = rad2deg(acute_angle(cloud.normals[idx], axis));
        if (theta > params.discard_deg) return GraspVerdict::Unstable;
        if (theta >= params.stable_deg) all_stable = false;
    }
    return all_stable ? GraspVerdict::Stable : GraspVerdict::Tunable;
}

std::optional<FineTuneOutcome> finetune_position(const Grasp& grasp, std::size_t contact,
                                                 const PointCloud& cloud,
                                                 const FineTuneParams& params,
                                                 const GripperModel& gripper) {
    params.validate();
    const Vec3 axis = grasp.closing_axis();
    KdTree tree(cloud.points);

    const Vec3& p0 = cloud.points[contact];
    const auto neighbors = tree.knn(p0, static_cast<std::size_t>(params.k1) + 1);
    for (std::size_t candidate : neighbors) {
        if (candidate == contact) continue;
        const double theta = rad2deg(acute_angle(cloud.normals[candidate], axis));
        if (theta >= params.stable_deg) continue;
        // Flatness gate: the candidate's immediate neighborhood must agree.
        bool flat = true;
        for (std::size_t nb : tree.knn(cloud.points[candidate],
                                       static_cast<std::size_t>(params.k2) + 1)) {
            if (nb == candidate) continue;
            if (rad2deg(vector_angle(cloud.normals[nb], cloud.normals[candidate])) >=
                params.flat_deg) {
                flat = false;
                break;
            }
        }
        if (!flat) continue;

        FineTuneOutcome outcome;
        outcome.grasp = grasp;
        outcome.grasp.pose.translation() += cloud.points[candidate] - p0;
        outcome.contacts = stick_contacts(outcome.grasp, cloud, tree, gripper.contact_radius);
        outcome.verdict = classify(outcome.contacts, cloud, outcome.grasp, params);
        return outcome;
    }
    return std::nullopt;
}

std::optional<std::pair<double, double>> stick_box_intersection(const Grasp& grasp,
                                                                const Sobb& box) {
    const Vec3 a = grasp.pose * Vec3(-grasp.width / 2, 0, 0);
    const Vec3 b = grasp.pose * Vec3(grasp.width / 2, 0, 0);
    const Vec3 local_a = box.axes.transpose() * (a - box.center);
    const Vec3 local_dir = box.axes.transpose() * (b - a);
    const double len = (b - a).norm();

    double t_enter = 0.0, t_exit = 1.0;
    for (int axis = 0; axis < 3; ++axis) {
        const double half = box.extents[axis] / 2;
        const double d = local_dir[axis];
        if (std::abs(d) < 1e-15) {
            if (std::abs(local_a[axis]) > half) return std::nullopt;
            continue;
        }
        double t0 = (-half - local_a[axis]) / d;
        double t1 = (half - local_a[axis]) / d;
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
        if (t_enter > t_exit) return std::nullopt;
    }
    return std::make_pair(t_enter * len, t_exit * len);
}

Grasp finetune_center(const Grasp& grasp, const Sobb& box,
                      const std::vector<std::size_t>& contacts, const PointCloud* cloud) {
    const Vec3 a = grasp.pose * Vec3(-grasp.width / 2, 0, 0);
    const Vec3 b = grasp.pose * Vec3(grasp.width / 2, 0, 0);
    const Vec3 dir = (b - a).normalized();

    Vec3 target;
    if (contacts.size() == 2 && cloud) {
        target = (cloud->points[contacts[0]] + cloud->points[contacts[1]]) / 2;
    } else {
        const auto chord = stick_box_intersection(grasp, box);
        if (!chord) return grasp;  // stick misses the box: nothing to center on
        target = a + dir * ((chord->first + chord->second) / 2);
    }

    const Vec3 current = (a + b) / 2;
    Grasp adjusted = grasp;
    adjusted.pose.translation() += target - current;
    return adjusted;
}

}  // namespace simgrasp
