#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"

#include "simgrasp/grasp.hpp"
#include "simgrasp/pipeline.hpp"

using namespace simgrasp;

namespace {

/// Two parallel vertical walls at x = +-half_gap whose normals are tilted by
/// tilt_deg away from the x axis (in the xz plane). Closing across x gives
/// contacts with theta = tilt_deg.
PointCloud wall_pair(double half_gap, double tilt_deg, double size = 0.06,
                     double step = 0.0025) {
    PointCloud cloud;
    const double t = deg2rad(tilt_deg);
    for (double y = -size / 2; y <= size / 2; y += step) {
        for (double z = -size / 2; z <= size / 2; z += step) {
            cloud.points.emplace_back(half_gap, y, z);
            cloud.normals.push_back(Vec3(std::cos(t), 0, std::sin(t)));
            cloud.points.emplace_back(-half_gap, y, z);
            cloud.normals.push_back(Vec3(-std::cos(t), 0, std::sin(t)));
        }
    }
    return cloud;
}

Grasp grasp_at(const Vec3& center, double width, const Vec3& closing = Vec3::UnitX(),
               const Vec3& approach = Vec3::UnitZ()) {
    Grasp g;
    g.width = width;
    Mat3 rot;
    rot.col(0) = closing.normalized();
    rot.col(2) = approach.normalized();
    rot.col(1) = rot.col(2).cross(rot.col(0)).normalized();
    g.pose.linear() = rot;
    g.pose.translation() = center;
    return g;
}

const GripperModel kGripper;

bool on_object(const Grasp& g, const PointCloud& cloud) {
    const GripperBox box = kGripper.closure_box(g.width);
    const Transform inv = g.pose.inverse();
    for (const Vec3& p : cloud.points) {
        const Vec3 local = inv * p - box.center;
        if (std::abs(local.x()) <= box.half.x() && std::abs(local.y()) <= box.half.y() &&
            std::abs(local.z()) <= box.half.z()) {
            return true;
        }
    }
    return false;
}

bool collides(const Grasp& g, const PointCloud& cloud) {
    const Transform inv = g.pose.inverse();
    for (const GripperBox& box : kGripper.body_boxes(g.width)) {
        for (const Vec3& p : cloud.points) {
            const Vec3 local = inv * p - box.center;
            if (std::abs(local.x()) <= box.half.x() && std::abs(local.y()) <= box.half.y() &&
                std::abs(local.z()) <= box.half.z()) {
                return true;
            }
        }
    }
    return false;
}

SupportPlane far_support() {
    SupportPlane s;
    s.point = Vec3(0, 0, -10.0);
    return s;
}

}  // namespace

TEST_CASE("antipodal sampling on a cube grips opposing faces") {
    const Mesh cube = make_box(0.05, 0.05, 0.05);
    const PointCloud cloud = sample_surface(cube, 0.004, 3);
    AntipodalParams params;
    params.target_count = 120;
    const auto grasps = sample_antipodal_grasps(cloud, kGripper, params);
    REQUIRE(!grasps.empty());

    std::set<int> axes_seen;
    for (const Grasp& g : grasps) {
        // Exhaustive check: the closing axis must align with a face normal.
        const Vec3 axis = g.closing_axis();
        double best = 90.0;
        int best_axis = -1;
        for (int a = 0; a < 3; ++a) {
            Vec3 n = Vec3::Zero();
            n[a] = 1.0;
            const double angle = rad2deg(acute_angle(axis, n));
            if (angle < best) {
                best = angle;
                best_axis = a;
            }
        }
        CHECK(best < 10.0);
        axes_seen.insert(best_axis);
        CHECK(g.width <= kGripper.max_opening);
        CHECK(g.width > 0.0);
    }
    CHECK(axes_seen.size() == 3);  // all three opposing-face pairs show up
}

TEST_CASE("antipodal sampling fails on a sphere wider than the jaw") {
    const PointCloud sphere = fixtures::sphere_cloud(0.08, 3000);  // 16 cm diameter
    CHECK_THROWS_AS(sample_antipodal_grasps(sphere, kGripper, AntipodalParams{}), NoGraspFound);
}

TEST_CASE("antipodal sampling finds grasps across a thin plate") {
    const Mesh plate = make_box(0.1, 0.1, 0.005);
    const PointCloud cloud = sample_surface(plate, 0.004, 5);
    AntipodalParams params;
    params.target_count = 40;
    const auto grasps = sample_antipodal_grasps(cloud, kGripper, params);
    REQUIRE(!grasps.empty());
    bool across_thin = false;
    for (const Grasp& g : grasps) {
        if (rad2deg(acute_angle(g.closing_axis(), Vec3::UnitZ())) < 10.0) across_thin = true;
    }
    CHECK(across_thin);
}

TEST_CASE("antipodal sampling is deterministic per seed") {
    const Mesh box = make_box(0.06, 0.05, 0.04);
    const PointCloud cloud = sample_surface(box, 0.004, 8);
    AntipodalParams params;
    params.target_count = 30;
    const auto a = sample_antipodal_grasps(cloud, kGripper, params);
    const auto b = sample_antipodal_grasps(cloud, kGripper, params);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i].pose.matrix() - b[i].pose.matrix()).norm() == 0.0);
        CHECK(a[i].width == b[i].width);
    }
}

TEST_CASE("transfer_grasps composes with the inverse registration") {
    std::vector<Grasp> grasps = {grasp_at(Vec3(0.01, 0.02, 0.03), 0.06),
                                 grasp_at(Vec3(-0.02, 0, 0.05), 0.08, Vec3::UnitY())};
    SUBCASE("identity registration is a no-op") {
        RegistrationResult reg;
        const auto moved = transfer_grasps(grasps, reg);
        for (std::size_t i = 0; i < grasps.size(); ++i) {
            CHECK((moved[i].pose.matrix() - grasps[i].pose.matrix()).norm() == 0.0);
            CHECK(moved[i].width == grasps[i].width);
        }
    }
    SUBCASE("pure translation moves grasps by its negation") {
        RegistrationResult reg;
        reg.transform.translation() = Vec3(0.1, -0.2, 0.3);
        const auto moved = transfer_grasps(grasps, reg);
        CHECK((moved[0].center() - (grasps[0].center() - Vec3(0.1, -0.2, 0.3))).norm() < 1e-12);
    }
    SUBCASE("random rigid transform round-trips") {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            RegistrationResult fwd, bwd;
            fwd.transform = fixtures::random_rigid(seed);
            bwd.transform = fwd.transform.inverse();
            const auto there = transfer_grasps(grasps, fwd);
            const auto back = transfer_grasps(there, bwd);
            for (std::size_t i = 0; i < grasps.size(); ++i) {
                CHECK((back[i].pose.matrix() - grasps[i].pose.matrix()).norm() < 1e-9);
            }
        }
    }
}

TEST_CASE("filter_feasible applies the four gates") {
    const PointCloud walls = wall_pair(0.02, 0.0);

    SUBCASE("a centered grasp with clear flanks is kept") {
        const auto kept =
            filter_feasible({grasp_at(Vec3::Zero(), 0.06)}, walls, far_support(), kGripper);
        CHECK(kept.size() == 1);
    }
    SUBCASE("a grasp far off the object fails the closure test") {
        const auto kept = filter_feasible({grasp_at(Vec3(0.1, 0, 0), 0.06)}, walls,
                                          far_support(), kGripper);
        CHECK(kept.empty());
    }
    SUBCASE("a grasp whose finger overlaps the cloud fails the collision test") {
        // Narrow the jaw so a finger body lands inside the wall.
        const auto kept = filter_feasible({grasp_at(Vec3(0.0, 0, 0), 0.035)}, walls,
                                          far_support(), kGripper);
        CHECK(kept.empty());
    }
    SUBCASE("the support plane blocks low grasps") {
        SupportPlane table;
        table.point = Vec3(0, 0, -0.01);
        const auto kept =
            filter_feasible({grasp_at(Vec3::Zero(), 0.06)}, walls, table, kGripper);
        CHECK(kept.empty());  // fingers extend below z = -0.01
    }
    SUBCASE("the reachability predicate can veto") {
        const auto nothing_reachable = [](const Grasp&) { return false; };
        const auto kept = filter_feasible({grasp_at(Vec3::Zero(), 0.06)}, walls,
                                          far_support(), kGripper, nothing_reachable);
        CHECK(kept.empty());
        const auto box_ok =
            workspace_box_reachability(Vec3(-1, -1, -1), Vec3(1, 1, 1));
        CHECK(filter_feasible({grasp_at(Vec3::Zero(), 0.06)}, walls, far_support(), kGripper,
                              box_ok).size() == 1);
    }
}

TEST_CASE("feasibility tests are monotone in the point set") {
    Rng rng(41);
    const PointCloud full = fixtures::random_cloud(400, Vec3(0.05, 0.05, 0.05), 77);
    PointCloud subset;
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (rng.next_double() < 0.5) subset.points.push_back(full.points[i]);
    }
    for (int trial = 0; trial < 40; ++trial) {
        const Grasp g = grasp_at(Vec3(0.08 * rng.next_double() - 0.04,
                                      0.08 * rng.next_double() - 0.04,
                                      0.08 * rng.next_double() - 0.04),
                                 0.04 + 0.08 * rng.next_double());
        // On-object never flips true->false when points are added...
        if (on_object(g, subset)) CHECK(on_object(g, full));
        // ...and collision never flips true->false either.
        if (collides(g, subset)) CHECK(collides(g, full));
    }
}

TEST_CASE("stick_contacts counts intersections correctly") {
    SUBCASE("empty space means no contacts") {
        const PointCloud walls = wall_pair(0.02, 0.0);
        const Grasp g = grasp_at(Vec3(0, 0, 0.2), 0.06);
        CHECK(stick_contacts(g, walls, kGripper.contact_radius).empty());
    }
    SUBCASE("a single wall gives one contact") {
        PointCloud wall;
        for (double y = -0.03; y <= 0.03; y += 0.002) {
            for (double z = -0.03; z <= 0.03; z += 0.002) {
                wall.points.emplace_back(0.0, y, z);
                wall.normals.emplace_back(1, 0, 0);
            }
        }
        const Grasp g = grasp_at(Vec3(0.02, 0, 0), 0.08);  // stick spans x in [-0.02, 0.06]
        const auto contacts = stick_contacts(g, wall, kGripper.contact_radius);
        CHECK(contacts.size() == 1);
    }
    SUBCASE("a spanned box gives two contacts near opposite faces") {
        const Mesh box = make_box(0.04, 0.04, 0.04);
        const PointCloud cloud = sample_surface(box, 0.003, 9);
        const Grasp g = grasp_at(Vec3::Zero(), 0.1);
        const auto contacts = stick_contacts(g, cloud, kGripper.contact_radius);
        REQUIRE(contacts.size() == 2);
        const double x0 = cloud.points[contacts[0]].x();
        const double x1 = cloud.points[contacts[1]].x();
        CHECK(std::abs(std::abs(x0) - 0.02) < 0.006);
        CHECK(std::abs(std::abs(x1) - 0.02) < 0.006);
        CHECK(x0 * x1 < 0.0);  // one on each side
    }
}

TEST_CASE("classify follows the contact-angle rules") {
    FineTuneParams params;
    SUBCASE("face-on contacts are stable") {
        const PointCloud walls = wall_pair(0.02, 0.0);
        const Grasp g = grasp_at(Vec3::Zero(), 0.06);
        const auto contacts = stick_contacts(g, walls, kGripper.contact_radius);
        REQUIRE(contacts.size() == 2);
        CHECK(classify(contacts, walls, g, params) == GraspVerdict::Stable);
    }
    SUBCASE("30 degree contacts are tunable") {
        const PointCloud walls = wall_pair(0.02, 30.0);
        const Grasp g = grasp_at(Vec3::Zero(), 0.06);
        const auto contacts = stick_contacts(g, walls, kGripper.contact_radius);
        REQUIRE(!contacts.empty());
        CHECK(classify(contacts, walls, g, params) == GraspVerdict::Tunable);
    }
    SUBCASE("one contact above 40 degrees is unstable") {
        PointCloud mixed = wall_pair(0.02, 0.0, 0.06);
        // Tilt the +x wall normals to 50 degrees.
        for (std::size_t i = 0; i < mixed.size(); ++i) {
            if (mixed.points[i].x() > 0) {
                mixed.normals[i] =
                    Vec3(std::cos(deg2rad(50)), 0, std::sin(deg2rad(50)));
            }
        }
        const Grasp g = grasp_at(Vec3::Zero(), 0.06);
        const auto contacts = stick_contacts(g, mixed, kGripper.contact_radius);
        REQUIRE(contacts.size() == 2);
        CHECK(classify(contacts, mixed, g, params) == GraspVerdict::Unstable);
    }
    SUBCASE("no contacts means potential") {
        const PointCloud walls = wall_pair(0.02, 0.0);
        CHECK(classify({}, walls, grasp_at(Vec3(0, 0, 1), 0.06), params) ==
              GraspVerdict::Potential);
    }
}

TEST_CASE("classify is invariant under joint rigid motion") {
    const PointCloud walls = wall_pair(0.02, 27.0);
    const Grasp g = grasp_at(Vec3(0.001, 0.002, -0.001), 0.06);
    const auto contacts = stick_contacts(g, walls, kGripper.contact_radius);
    const GraspVerdict base = classify(contacts, walls, g, FineTuneParams{});
    for (std::uint64_t seed : {6u, 7u, 8u}) {
        const Transform t = fixtures::random_rigid(seed);
        const PointCloud moved = walls.transformed(t);
        Grasp moved_grasp = g;
        moved_grasp.pose = t * g.pose;
        const auto moved_contacts =
            stick_contacts(moved_grasp, moved, kGripper.contact_radius);
        REQUIRE(moved_contacts.size() == contacts.size());
        CHECK(classify(moved_contacts, moved, moved_grasp, FineTuneParams{}) == base);
    }
}

TEST_CASE("finetune_position slides off a bevel onto the flat face") {
    // Beveled block: +x/+z edge chamfered with a 28 degree normal tilt.
    const Mesh block = make_beveled_block(0.06, 0.09, 0.06, 0.018, 28.0);
    const PointCloud cloud = sample_surface(block, 0.002, 12);
    FineTuneParams params;

    // Grasp across x whose stick passes through the bevel band.
    const double bevel_mid_z = 0.03 - 0.009;  // halfway down the chamfer
    const Grasp g = grasp_at(Vec3(0, 0, bevel_mid_z), 0.09);
    const auto contacts = stick_contacts(g, cloud, kGripper.contact_radius);
    REQUIRE(!contacts.empty());
    REQUIRE(classify(contacts, cloud, g, params) == GraspVerdict::Tunable);

    // Reference contact: the one with the larger angle (the bevel side).
    std::size_t reference = contacts.front();
    double worst = -1;
    for (std::size_t c : contacts) {
        const double theta = rad2deg(acute_angle(cloud.normals[c], g.closing_axis()));
        if (theta > worst) {
            worst = theta;
            reference = c;
        }
    }
    CHECK(worst > 20.0);

    const auto outcome = finetune_position(g, reference, cloud, params, kGripper);
    REQUIRE(outcome.has_value());
    CHECK(outcome->verdict == GraspVerdict::Stable);
    // The adjustment slid the grasp; the pose moved but kept its rotation.
    CHECK((outcome->grasp.pose.linear() - g.pose.linear()).norm() == 0.0);
    CHECK((outcome->grasp.center() - g.center()).norm() > 1e-4);
    // New contacts are flat-face contacts by construction.
    for (std::size_t c : outcome->contacts) {
        CHECK(rad2deg(acute_angle(cloud.normals[c], g.closing_axis())) < params.stable_deg);
    }
}

TEST_CASE("finetune_center bisects the stick chord through the box") {
    Sobb box;
    box.center = Vec3::Zero();
    box.axes = Mat3::Identity();
    box.extents = Vec3(0.06, 0.1, 0.1);

    SUBCASE("already centered means zero translation") {
        const Grasp g = grasp_at(Vec3::Zero(), 0.14);
        const Grasp adjusted = finetune_center(g, box);
        CHECK((adjusted.center() - g.center()).norm() < 1e-12);
    }
    SUBCASE("entering 1 cm off-center yields a 1 cm correction") {
        const Grasp g = grasp_at(Vec3(0.01, 0, 0), 0.14);
        const Grasp adjusted = finetune_center(g, box);
        CHECK((adjusted.center() - Vec3(0, 0, 0)).norm() < 1e-9);
        // Equal distances from the center to both chord ends afterwards.
        const auto chord = stick_box_intersection(adjusted, box);
        REQUIRE(chord.has_value());
        const double mid = adjusted.width / 2;  // center sits at t = width/2
        CHECK(std::abs((mid - chord->first) - (chord->second - mid)) < 1e-9);
    }
    SUBCASE("a stick missing the box leaves the grasp unchanged") {
        const Grasp g = grasp_at(Vec3(0, 0, 0.5), 0.14);
        const Grasp adjusted = finetune_center(g, box);
        CHECK((adjusted.pose.matrix() - g.pose.matrix()).norm() == 0.0);
    }
    SUBCASE("two physical contacts take priority") {
        PointCloud cloud;
        cloud.points = {Vec3(-0.03, 0, 0), Vec3(0.01, 0, 0)};
        cloud.normals = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
        const Grasp g = grasp_at(Vec3::Zero(), 0.14);
        const Grasp adjusted = finetune_center(g, box, {0, 1}, &cloud);
        CHECK((adjusted.center() - Vec3(-0.01, 0, 0)).norm() < 1e-12);
    }
}

TEST_CASE("plan returns a stable grasp on a box scene and falls through bad candidates") {
    // Database: the same box under two ids; the first id's grasps are
    // sabotaged so the planner must advance to the second candidate.
    const Mesh box_mesh = make_box(0.08, 0.06, 0.05);
    IngestParams params = fixtures::suite_ingest_params(true);
    ModelRecord good = ingest_model(box_mesh, "b_good", Category::simplified_only("box"), params);
    REQUIRE(!good.grasps.empty());
    ModelRecord bad = good;
    bad.id = "a_bad";
    bad.grasps = {grasp_at(Vec3(5, 5, 5), 0.06)};  // nowhere near the object

    Database db(params);
    db.add(std::move(bad));
    db.add(std::move(good));

    const auto scene = fixtures::suite_scene({"b_good", "box", box_mesh}, 20.0, 45.0, 1);
    PlanOptions options;
    auto stub = fixtures::fixture_stub();
    options.match.completion = &stub;

    const PlanReport report = plan_scene(scene, db, options);
    REQUIRE(report.grasp.has_value());
    CHECK(report.verdict == GraspVerdict::Stable);
    CHECK(report.grasp->source_model == "b_good");
    CHECK_FALSE(report.used_potential);
    // Both candidates were visited: the sabotaged one produced nothing.
    REQUIRE(report.per_candidate.size() >= 1);
    CHECK(report.per_candidate.front().first == "a_bad");
}

TEST_CASE("plan with an empty database reports no feasible grasp") {
    const Mesh box_mesh = make_box(0.08, 0.06, 0.05);
    Database db(fixtures::suite_ingest_params(true));
    const auto scene = fixtures::suite_scene({"box", "box", box_mesh}, 10.0, 30.0, 2);
    CHECK_THROWS_AS(plan_scene(scene, db, PlanOptions{}), NoFeasibleGrasp);
}
