// Shared fixture builders for the test suites. Everything is seeded and
// deterministic.
#pragma once

#include "simgrasp/cloud_ops.hpp"
#include "simgrasp/mesh.hpp"
#include "simgrasp/point_cloud.hpp"
#include "simgrasp/scene.hpp"
#include "simgrasp/store.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fixtures {

using simgrasp::Mat3;
using simgrasp::PointCloud;
using simgrasp::Transform;
using simgrasp::Vec3;

inline simgrasp::Rng make_rng(std::uint64_t seed) { return simgrasp::Rng(seed); }

/// Uniform grid on the z=0 plane with +z normals.
inline PointCloud plane_grid(double size, double step, double z = 0.0) {
    PointCloud cloud;
    for (double x = -size / 2; x <= size / 2 + 1e-12; x += step) {
        for (double y = -size / 2; y <= size / 2 + 1e-12; y += step) {
            cloud.points.emplace_back(x, y, z);
            cloud.normals.emplace_back(0, 0, 1);
        }
    }
    return cloud;
}

/// Fibonacci sphere sampling with outward normals.
inline PointCloud sphere_cloud(double radius, std::size_t count, const Vec3& center = Vec3::Zero()) {
    PointCloud cloud;
    const double golden = simgrasp::kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double a = golden * static_cast<double>(i);
        const Vec3 n(r * std::cos(a), y, r * std::sin(a));
        cloud.points.push_back(center + radius * n);
        cloud.normals.push_back(n);
    }
    return cloud;
}

/// Random points in a box, no normals.
inline PointCloud random_cloud(std::size_t count, const Vec3& half_extents, std::uint64_t seed) {
    simgrasp::Rng rng(seed);
    PointCloud cloud;
    for (std::size_t i = 0; i < count; ++i) {
        cloud.points.emplace_back(half_extents.x() * (2 * rng.next_double() - 1),
                                  half_extents.y() * (2 * rng.next_double() - 1),
                                  half_extents.z() * (2 * rng.next_double() - 1));
    }
    return cloud;
}

/// Random rigid transform with rotation drawn uniformly from axis-angle.
inline Transform random_rigid(std::uint64_t seed, double max_translation = 0.5) {
    simgrasp::Rng rng(seed);
    Vec3 axis(rng.next_normal(), rng.next_normal(), rng.next_normal());
    if (axis.norm() < 1e-9) axis = Vec3::UnitZ();
    axis.normalize();
    const double angle = rng.next_double() * 2 * simgrasp::kPi;
    Transform t = Transform::Identity();
    t.linear() = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    t.translation() = max_translation * Vec3(2 * rng.next_double() - 1, 2 * rng.next_double() - 1,
                                             2 * rng.next_double() - 1);
    return t;
}

/// Surface cloud of an asymmetric blob: three box faces scaled unevenly and
/// trimmed so the principal frame is unambiguous. Good for invariance tests.
inline PointCloud asymmetric_cloud(std::uint64_t seed, std::size_t count = 2500) {
    simgrasp::Rng rng(seed);
    PointCloud cloud;
    // Box surface with side-dependent densities, then corner trim.
    const Vec3 half(0.06 + 0.02 * rng.next_double(), 0.04 + 0.015 * rng.next_double(),
                    0.025 + 0.01 * rng.next_double());
    while (cloud.size() < count) {
        const int face = static_cast<int>(rng.next_below(6));
        Vec3 p(half.x() * (2 * rng.next_double() - 1), half.y() * (2 * rng.next_double() - 1),
               half.z() * (2 * rng.next_double() - 1));
        Vec3 n = Vec3::Zero();
        const int axis = face / 2;
        const double sign = (face % 2) ? 1.0 : -1.0;
        p[axis] = sign * half[axis];
        n[axis] = sign;
        // Trim one octant so third moments stay far from zero.
        if (p.x() > half.x() * 0.45 && p.y() > half.y() * 0.45 && p.z() > half.z() * 0.35) {
            continue;
        }
        cloud.points.push_back(p);
        cloud.normals.push_back(n);
    }
    return cloud;
}

/// Fixture embedding table: categories laid out on distinct axes so the
/// cosines are hand-computable.
inline simgrasp::EmbeddingTable fixture_embeddings() {
    std::map<std::string, Eigen::VectorXd> vectors;
    auto set = [&](const std::string& word, double a, double b, double c) {
        Eigen::VectorXd v(3);
        v << a, b, c;
        vectors[word] = v;
    };
    // Boxy family near x, cylindrical family near y, round family near z.
    set("box", 1.0, 0.1, 0.0);
    set("block", 0.95, 0.2, 0.0);
    set("plate", 0.9, 0.0, 0.2);
    set("bracket", 0.85, 0.1, 0.1);
    set("bottle", 0.1, 1.0, 0.0);
    set("can", 0.15, 0.95, 0.05);
    set("cup", 0.1, 0.8, 0.4);
    set("mug", 0.05, 0.75, 0.45);
    set("ball", 0.0, 0.1, 1.0);
    set("bowl", 0.1, 0.2, 0.9);
    set("apple", 0.0, 0.2, 0.95);
    set("hammer", 0.5, 0.5, 0.1);
    return simgrasp::EmbeddingTable(vectors);
}

/// Deterministic completion stub: every target answers with its family.
inline simgrasp::StubCompletionClient fixture_stub() {
    std::map<std::string, std::string> answers;
    answers["box"] = "Box, block, plate, bracket.";
    answers["block"] = "Block, box, bracket.";
    answers["plate"] = "Plate, box, block.";
    answers["bracket"] = "Bracket, block, box.";
    answers["bottle"] = "Bottle, can, cup.";
    answers["can"] = "Can, bottle, cup.";
    answers["cup"] = "Cup, mug, can, bottle.";
    answers["mug"] = "Mug, cup.";
    answers["ball"] = "Ball, apple.";
    answers["bowl"] = "Bowl, cup, ball.";
    answers["apple"] = "Apple, ball.";
    return simgrasp::StubCompletionClient(std::move(answers), "");
}

struct FixtureModel {
    std::string id;
    std::string category;
    simgrasp::Mesh mesh;
};

/// The five scene objects of the matching suites.
inline std::vector<FixtureModel> suite_objects() {
    return {
        {"box", "box", simgrasp::make_box(0.08, 0.06, 0.05)},
        {"can", "can", simgrasp::make_cylinder(0.033, 0.11)},
        {"bowl", "bowl", simgrasp::make_bowl(0.08, 0.012)},
        {"flat_box", "box", simgrasp::make_box(0.12, 0.09, 0.02)},
        {"bracket", "bracket", simgrasp::make_l_bracket(0.1, 0.08, 0.04, 0.015)},
    };
}

/// Distractor models rounding the database out to ~30 entries. Several are
/// geometric decoys: same category and similar size as a suite object but a
/// different surface type, so the geometric level has real work to do.
inline std::vector<FixtureModel> distractor_objects() {
    std::vector<FixtureModel> models;
    auto add = [&](const std::string& id, const std::string& category, simgrasp::Mesh mesh) {
        models.push_back({id, category, std::move(mesh)});
    };
    add("box_l", "box", simgrasp::make_box(0.11, 0.08, 0.07));
    add("box_s", "box", simgrasp::make_box(0.05, 0.04, 0.03));
    add("box_decoy_round", "box", simgrasp::make_cylinder(0.04, 0.065, 40));  // boxy size, round
    add("tall_box", "box", simgrasp::make_box(0.05, 0.05, 0.14));
    add("plate", "plate", simgrasp::make_box(0.1, 0.1, 0.006));
    add("plate_l", "plate", simgrasp::make_box(0.14, 0.14, 0.008));
    add("block", "block", simgrasp::make_beveled_block(0.07, 0.1, 0.05, 0.015, 30));
    add("block_s", "block", simgrasp::make_beveled_block(0.05, 0.07, 0.04, 0.01, 25));
    add("bottle", "bottle", simgrasp::make_cylinder(0.03, 0.12));
    add("bottle_s", "bottle", simgrasp::make_cylinder(0.025, 0.09));
    add("can_l", "can", simgrasp::make_cylinder(0.042, 0.13));
    add("can_decoy_boxy", "can", simgrasp::make_box(0.06, 0.06, 0.11));  // can-sized box
    add("cup", "cup", simgrasp::make_cylinder(0.038, 0.085));
    add("mug", "mug", simgrasp::make_cylinder(0.041, 0.095));
    add("ball", "ball", simgrasp::make_sphere(0.035));
    add("ball_l", "ball", simgrasp::make_sphere(0.055));
    add("apple", "apple", simgrasp::make_sphere(0.04));
    add("bowl_l", "bowl", simgrasp::make_bowl(0.1, 0.014));
    add("bowl_s", "bowl", simgrasp::make_bowl(0.06, 0.01));
    add("bowl_decoy_boxy", "bowl", simgrasp::make_box(0.15, 0.15, 0.07));  // bowl-sized box
    add("bracket_l", "bracket", simgrasp::make_l_bracket(0.13, 0.1, 0.05, 0.02));
    add("bracket_s", "bracket", simgrasp::make_l_bracket(0.07, 0.06, 0.03, 0.012));
    add("hammer", "hammer", simgrasp::make_l_bracket(0.16, 0.05, 0.025, 0.02));
    add("plate_decoy_tall", "plate", simgrasp::make_box(0.04, 0.04, 0.12));  // plate category, tall
    add("cyl_flat", "can", simgrasp::make_cylinder(0.05, 0.03));
    return models;
}

inline simgrasp::IngestParams suite_ingest_params(bool with_grasps = false) {
    simgrasp::IngestParams params;
    params.sample_spacing = 0.0025;
    params.with_grasps = with_grasps;
    params.sampler.target_count = 60;
    params.sampler.max_attempts = 20000;
    return params;
}

/// Ingests the suite + distractor models; cached across calls because ingest
/// is the expensive part of every pipeline test.
inline const simgrasp::Database& suite_database(bool with_grasps = false) {
    static simgrasp::Database with, without;
    simgrasp::Database& db = with_grasps ? with : without;
    if (db.size() == 0) {
        simgrasp::Database built(suite_ingest_params(with_grasps));
        for (const auto& group : {suite_objects(), distractor_objects()}) {
            for (const FixtureModel& m : group) {
                built.add(simgrasp::ingest_model(m.mesh, m.id,
                                                 simgrasp::Category::simplified_only(m.category),
                                                 built.params()));
            }
        }
        db = std::move(built);
    }
    return db;
}

/// One synthetic observation of a suite object.
inline simgrasp::ObservedScene suite_scene(const FixtureModel& model, double yaw_deg,
                                           double azimuth_deg, std::uint64_t seed,
                                           bool occluded = false,
                                           simgrasp::NoiseModel noise = {}) {
    simgrasp::SceneSpec spec;
    spec.object_pose = simgrasp::resting_pose(model.mesh, yaw_deg);
    const Vec3 target = spec.object_pose * Vec3::Zero();
    spec.camera = simgrasp::diagonal_camera(target, 0.55, azimuth_deg, 35.0);
    spec.noise = noise;
    spec.seed = seed;
    if (occluded) {
        simgrasp::CameraSpaceBox box;
        // A slab covering part of the image left of center, in front of the object.
        box.min = Vec3(-0.6, -0.6, 0.55 * 0.55);
        box.max = Vec3(-0.012, 0.6, 0.55 * 0.62);
        spec.occluders.push_back(box);
    }
    return simgrasp::make_scene(model.mesh, model.id,
                                simgrasp::Category::simplified_only(model.category), spec);
}

}  // namespace fixtures
