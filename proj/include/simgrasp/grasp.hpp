#pragma once

#include "simgrasp/kdtree.hpp"
#include "simgrasp/point_cloud.hpp"
#include "simgrasp/registration.hpp"
#include "simgrasp/sobb.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace simgrasp {

/// Parallel-jaw grasp. The gripper frame has the closing axis along x and the
/// approach direction along +z; the pose maps gripper frame to world.
struct Grasp {
    Transform pose = Transform::Identity();
    double width = 0.0;  // jaw opening, meters
    std::string source_model;

    Vec3 center() const { return pose.translation(); }
    Vec3 closing_axis() const { return pose.linear().col(0); }
    Vec3 approach_axis() const { return pose.linear().col(2); }
};

/// Axis-aligned box in the gripper frame.
struct GripperBox {
    Vec3 center = Vec3::Zero();
    Vec3 half = Vec3::Zero();
};

/// Two-finger gripper geometry. Fingertips sit at z = 0 with the fingers
/// extending toward -z and the palm behind them.
struct GripperModel {
    double max_opening = 0.14;
    double finger_length = 0.045;
    double finger_thickness = 0.015;
    double finger_width = 0.03;
    double palm_depth = 0.04;
    double palm_half_width = 0.09;
    double contact_radius = 0.005;

    /// Finger and palm boxes at the given jaw opening (collision bodies).
    std::vector<GripperBox> body_boxes(double width) const;
    /// Box spanning the jaw closure region.
    GripperBox closure_box(double width) const;
    /// Stick segment connecting the two fingertip centers, gripper frame.
    std::pair<Vec3, Vec3> stick(double width) const;
};

struct FineTuneParams {
    double stable_deg = 20.0;
    double discard_deg = 40.0;
    double flat_deg = 10.0;
    int k1 = 100;
    int k2 = 5;

    void validate() const;
};

enum class GraspVerdict { Stable, Tunable, Unstable, Potential };

const char* verdict_name(GraspVerdict v);

struct AntipodalParams {
    std::size_t target_count = 200;
    double antipodal_min_deg = 160.0;  // minimum angle between the two normals
    double line_max_deg = 20.0;        // normals vs the connecting line
    double approach_step_deg = 30.0;
    double dedup_translation = 0.005;
    double dedup_angle_deg = 15.0;
    double width_margin = 0.01;
    std::size_t max_attempts = 60000;
    std::uint64_t seed = 1;
};

/// Samples antipodal surface-pair grasps on a complete model cloud in
/// canonical pose, rejecting gripper/cloud collisions and near-duplicates.
/// Throws NoGraspFound when no valid pair exists.
std::vector<Grasp> sample_antipodal_grasps(const PointCloud& model_cloud,
                                           const GripperModel& gripper,
                                           const AntipodalParams& params = AntipodalParams());

/// Maps model-frame grasps into the observed/world frame through the inverse
/// registration transform. Widths are unchanged.
std::vector<Grasp> transfer_grasps(const std::vector<Grasp>& model_grasps,
                                   const RegistrationResult& registration);

struct SupportPlane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
};

using ReachabilityPredicate = std::function<bool(const Grasp&)>;

/// Axis-aligned workspace box containment of the grasp center; the default
/// inverse-kinematics stand-in.
ReachabilityPredicate workspace_box_reachability(const Vec3& min_corner,
                                                 const Vec3& max_corner);

/// Keeps grasps that close on the observed cloud, avoid body collisions with
/// it, keep the gripper above the support plane, and pass the reachability
/// predicate. Pass nullptr to skip reachability.
std::vector<Grasp> filter_feasible(const std::vector<Grasp>& grasps, const PointCloud& cloud,
                                   const SupportPlane& support, const GripperModel& gripper,
                                   const ReachabilityPredicate& reachable = nullptr);

/// Cloud points intersected by the fingertip stick: none (unseen region), one,
/// or the two with extreme projections along the stick. Returns point indices.
std::vector<std::size_t> stick_contacts(const Grasp& grasp, const PointCloud& cloud,
                                        const KdTree& tree, double contact_radius);
std::vector<std::size_t> stick_contacts(const Grasp& grasp, const PointCloud& cloud,
                                        double contact_radius);

/// Contact-angle classification. theta is the acute angle between the contact
/// normal and the stick axis: below stable_deg everywhere -> Stable, above
/// discard_deg anywhere -> Unstable, otherwise Tunable; no contacts -> Potential.
GraspVerdict classify(const std::vector<std::size_t>& contacts, const PointCloud& cloud,
                      const Grasp& grasp, const FineTuneParams& params = FineTuneParams());

struct FineTuneOutcome {
    Grasp grasp;
    GraspVerdict verdict = GraspVerdict::Unstable;
    std::vector<std::size_t> contacts;
};

/// Position stage: walks the k1 nearest neighbors of the reference contact
/// for a point whose normal is within stable_deg of the stick axis and whose
/// k2-neighborhood is flat (normal spread < flat_deg), then translates the
/// grasp onto it and re-classifies. Empty when no neighbor qualifies.
std::optional<FineTuneOutcome> finetune_position(const Grasp& grasp, std::size_t contact,
                                                 const PointCloud& cloud,
                                                 const FineTuneParams& params = FineTuneParams(),
                                                 const GripperModel& gripper = GripperModel());

/// Center stage: translates the grasp so its center bisects the stick's
/// chord through the box (or the two physical contacts when both exist).
/// Leaves the grasp unchanged when the stick misses the box.
Grasp finetune_center(const Grasp& grasp, const Sobb& box,
                      const std::vector<std::size_t>& contacts = {},
                      const PointCloud* cloud = nullptr);

/// Chord of the stick segment through the box, as distances along the stick
/// from its first endpoint; empty when the segment misses the box.
std::optional<std::pair<double, double>> stick_box_intersection(const Grasp& grasp,
                                                                const Sobb& box);

}  // namespace simgrasp
