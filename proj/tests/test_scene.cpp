#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"

#include "simgrasp/scene.hpp"

#include <filesystem>

using namespace simgrasp;

namespace {

bool images_equal(const DepthImage& a, const DepthImage& b) {
    return a.depth == b.depth && a.face == b.face && a.object_mask == b.object_mask;
}

}  // namespace

TEST_CASE("mesh primitives are valid and sized as requested") {
    for (const Mesh& m : {make_box(0.08, 0.06, 0.05), make_cylinder(0.03, 0.1),
                          make_sphere(0.04), make_bowl(0.08, 0.012),
                          make_l_bracket(0.1, 0.08, 0.04, 0.015),
                          make_beveled_block(0.07, 0.1, 0.05, 0.015, 30.0)}) {
        CHECK_NOTHROW(m.check());
        CHECK(m.surface_area() > 0.0);
    }
    const Mesh box = make_box(0.08, 0.06, 0.05);
    Vec3 lo = box.vertices.front(), hi = lo;
    for (const Vec3& v : box.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    CHECK((hi - lo - Vec3(0.08, 0.06, 0.05)).norm() < 1e-12);
}

TEST_CASE("surface sampling is deterministic per seed and area-uniform") {
    const Mesh box = make_box(0.1, 0.05, 0.02);
    const PointCloud a = sample_surface(box, 0.003, 42);
    const PointCloud b = sample_surface(box, 0.003, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.points[i] == b.points[i]);

    // Per-face counts proportional to areas within 15%.
    const double total_area = box.surface_area();
    std::size_t top = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.points[i].z() - 0.01) < 1e-9) ++top;
    }
    const double expected = 0.1 * 0.05 / total_area * static_cast<double>(a.size());
    CHECK(std::abs(static_cast<double>(top) - expected) < 0.15 * expected);
}

TEST_CASE("render_partial sees exactly one face of a frontal cube") {
    const Mesh cube = make_box(0.06, 0.06, 0.06);
    VirtualCamera cam = VirtualCamera::look_at(Vec3(0.4, 0, 0), Vec3::Zero());
    const DepthImage img = render_depth(cube, cam);
    const PointCloud cloud = backproject(img, cam, cube);
    REQUIRE(!cloud.empty());
    for (const Vec3& n : cloud.normals) {
        CHECK((n - Vec3(1, 0, 0)).norm() < 1e-9);  // only the +x face is visible
    }
    for (const Vec3& p : cloud.points) {
        CHECK(p.x() == doctest::Approx(0.03).epsilon(1e-9));
    }
}

TEST_CASE("diagonal view of a cube sees three faces with area-proportional counts") {
    const Mesh cube = make_box(0.06, 0.06, 0.06);
    // Diagonal view tilted both in azimuth and elevation.
    const VirtualCamera cam =
        diagonal_camera(Vec3::Zero(), 0.4, 45.0, 30.0, 480, 360, 700.0);
    const DepthImage img = render_depth(cube, cam);
    const PointCloud cloud = backproject(img, cam, cube);

    std::map<int, std::size_t> per_normal;  // +x: 0, +y: 1, +z: 2
    for (const Vec3& n : cloud.normals) {
        if ((n - Vec3(1, 0, 0)).norm() < 1e-9) per_normal[0]++;
        else if ((n - Vec3(0, 1, 0)).norm() < 1e-9) per_normal[1]++;
        else if ((n - Vec3(0, 0, 1)).norm() < 1e-9) per_normal[2]++;
        else per_normal[3]++;
    }
    CHECK(per_normal[3] == 0);  // no hidden faces leak through
    REQUIRE(per_normal.size() >= 3);

    // Counts proportional to projected areas: cos of the angle between the
    // face normal and the view direction, identical face areas.
    const Vec3 view = (cam.pose.translation() - Vec3::Zero()).normalized();
    const double cx = view.x(), cy = view.y(), cz = view.z();
    const double total = cx + cy + cz;
    const std::size_t n_total = cloud.size();
    CHECK(std::abs(per_normal[0] / double(n_total) - cx / total) < 0.10);
    CHECK(std::abs(per_normal[1] / double(n_total) - cy / total) < 0.10);
    CHECK(std::abs(per_normal[2] / double(n_total) - cz / total) < 0.10);
}

TEST_CASE("rendered points lie on the mesh surface and face the camera") {
    const Mesh sphere = make_sphere(0.04);
    const VirtualCamera cam = diagonal_camera(Vec3::Zero(), 0.4, 20.0, 40.0);
    const DepthImage img = render_depth(sphere, cam);
    const PointCloud cloud = backproject(img, cam, sphere);
    REQUIRE(!cloud.empty());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        // On-sphere within rasterization epsilon (planar triangle facets).
        CHECK(std::abs(cloud.points[i].norm() - 0.04) < 2e-3);
        const Vec3 ray = (cloud.points[i] - cam.pose.translation()).normalized();
        CHECK(cloud.normals[i].dot(ray) < 0.0);  // visible hemisphere only
    }
}

TEST_CASE("render points lie exactly on their source triangle planes") {
    const Mesh box = make_box(0.05, 0.04, 0.03);
    const VirtualCamera cam = diagonal_camera(Vec3::Zero(), 0.3, 30.0, 25.0);
    const DepthImage img = render_depth(box, cam);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const std::size_t idx = static_cast<std::size_t>(v) * img.width + u;
            if (img.depth[idx] <= 0.0) continue;
            const Vec3 p = cam.pose * (img.depth[idx] * cam.pixel_ray(u, v));
            const auto& tri = box.triangles[img.face[idx]];
            const Vec3 n = box.face_normal(img.face[idx]);
            CHECK(std::abs(n.dot(p - box.vertices[tri[0]])) < 1e-9);
        }
    }
}

TEST_CASE("render throws when the object is outside the frustum") {
    const Mesh box = make_box(0.05, 0.05, 0.05);
    VirtualCamera cam = VirtualCamera::look_at(Vec3(0.5, 0, 0), Vec3(1.0, 0, 0));
    CHECK_THROWS_AS(render_depth(box, cam), EmptyRender);
}

TEST_CASE("noise: none is the identity, gaussian matches its sigma, seeds reproduce") {
    const Mesh wall = make_box(0.5, 0.5, 0.002);
    VirtualCamera cam = VirtualCamera::look_at(Vec3(0, 0, 0.6), Vec3::Zero());
    cam.width = 320;
    cam.height = 240;
    cam.cx = 160;
    cam.cy = 120;
    const DepthImage img = render_depth(wall, cam);
    REQUIRE(img.valid_count() > 10000);

    SUBCASE("none is bit-identical") {
        NoiseModel none;
        CHECK(images_equal(apply_noise(img, none, 1), img));
    }
    SUBCASE("gaussian sample std within [0.8, 1.2] mm at sigma = 1 mm") {
        NoiseModel gaussian;
        gaussian.kind = NoiseModel::Kind::GaussianDepth;
        gaussian.sigma = 0.001;
        const DepthImage noisy = apply_noise(img, gaussian, 7);
        double sum = 0, sum_sq = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < img.depth.size(); ++i) {
            if (img.depth[i] <= 0) continue;
            const double d = noisy.depth[i] - img.depth[i];
            sum += d;
            sum_sq += d * d;
            ++n;
        }
        const double std_dev = std::sqrt(sum_sq / n - (sum / n) * (sum / n));
        CHECK(std_dev > 0.0008);
        CHECK(std_dev < 0.0012);
    }
    SUBCASE("fixed seeds are bit-identical, different seeds differ") {
        NoiseModel gaussian;
        gaussian.kind = NoiseModel::Kind::GaussianDepth;
        gaussian.sigma = 0.001;
        CHECK(images_equal(apply_noise(img, gaussian, 5), apply_noise(img, gaussian, 5)));
        CHECK_FALSE(images_equal(apply_noise(img, gaussian, 5), apply_noise(img, gaussian, 6)));
    }
    SUBCASE("hole-filling keeps every pixel valid") {
        NoiseModel holes;
        holes.kind = NoiseModel::Kind::HoleFilled;
        holes.hole_rate = 0.1;
        const DepthImage filled = apply_noise(img, holes, 11);
        CHECK(filled.valid_count() == img.valid_count());
        CHECK_FALSE(images_equal(filled, img));
    }
    SUBCASE("smoothing preserves a flat wall") {
        NoiseModel smooth;
        smooth.kind = NoiseModel::Kind::Smoothed;
        smooth.kernel = 3;
        const DepthImage smoothed = apply_noise(img, smooth, 0);
        CHECK(smoothed.valid_count() == img.valid_count());
    }
}

TEST_CASE("occluders hide pixels in front and never behind") {
    const Mesh box = make_box(0.06, 0.06, 0.06);
    const VirtualCamera cam = diagonal_camera(Vec3::Zero(), 0.5, 0.0, 30.0);
    const DepthImage img = render_depth(box, cam);

    SUBCASE("no occluders is the identity") {
        CHECK(images_equal(occlude(img, cam, {}), img));
    }
    SUBCASE("a front slab halves the object mask") {
        CameraSpaceBox slab;
        slab.min = Vec3(-1.0, -1.0, 0.25);
        slab.max = Vec3(0.0, 1.0, 0.28);
        const DepthImage hidden = occlude(img, cam, {slab});
        const double ratio =
            static_cast<double>(hidden.object_count()) / img.object_count();
        CHECK(ratio > 0.35);
        CHECK(ratio < 0.65);
    }
    SUBCASE("an occluder behind the object changes nothing") {
        CameraSpaceBox behind;
        behind.min = Vec3(-1.0, -1.0, 2.0);
        behind.max = Vec3(1.0, 1.0, 2.1);
        CHECK(images_equal(occlude(img, cam, {behind}), img));
    }
}

TEST_CASE("make_scene composes deterministically and respects the category switch") {
    const Mesh box = make_box(0.08, 0.06, 0.05);
    SceneSpec spec;
    spec.object_pose = resting_pose(box, 15.0);
    spec.camera = diagonal_camera(spec.object_pose * Vec3::Zero(), 0.5, 30.0, 35.0);
    spec.noise.kind = NoiseModel::Kind::GaussianDepth;
    spec.noise.sigma = 0.0005;
    spec.seed = 3;

    const auto category = Category::simplified_only("box");
    const ObservedScene a = make_scene(box, "box", category, spec);
    const ObservedScene b = make_scene(box, "box", category, spec);
    REQUIRE(a.cloud.size() == b.cloud.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i) {
        CHECK(a.cloud.points[i] == b.cloud.points[i]);
    }
    REQUIRE(a.category.has_value());
    CHECK(a.category->simplified == "box");

    spec.withhold_category = true;
    const ObservedScene c = make_scene(box, "box", category, spec);
    CHECK_FALSE(c.category.has_value());
}

TEST_CASE("make_scene occlusion accounting stays within the budget") {
    const Mesh box = make_box(0.08, 0.06, 0.05);
    SceneSpec spec;
    spec.object_pose = resting_pose(box, 0.0);
    spec.camera = diagonal_camera(spec.object_pose * Vec3::Zero(), 0.5, 40.0, 35.0);
    CameraSpaceBox slab;
    slab.min = Vec3(-1.0, -1.0, 0.25);
    slab.max = Vec3(-0.01, 1.0, 0.30);
    spec.occluders.push_back(slab);
    const ObservedScene scene = make_scene(box, "box", std::nullopt, spec);
    CHECK(scene.truth.occlusion_ratio() > 0.05);
    CHECK(scene.truth.occlusion_ratio() <= 0.5);
    CHECK(scene.truth.visible_pixels >= scene.truth.unoccluded_pixels / 2);
}

TEST_CASE("scene JSON round-trip preserves the observation") {
    const Mesh box = make_box(0.08, 0.06, 0.05);
    SceneSpec spec;
    spec.object_pose = resting_pose(box, 25.0);
    spec.camera = diagonal_camera(spec.object_pose * Vec3::Zero(), 0.5, 60.0, 30.0);
    spec.noise.kind = NoiseModel::Kind::HoleFilled;
    spec.noise.hole_rate = 0.05;
    spec.seed = 9;
    const ObservedScene scene =
        make_scene(box, "box", Category::simplified_only("box"), spec);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "simgrasp_scene_test";
    fs::create_directories(dir);
    const std::string path = (dir / "scene.json").string();
    save_scene(scene, path);
    const ObservedScene loaded = load_scene(path);

    REQUIRE(loaded.cloud.size() == scene.cloud.size());
    for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
        CHECK(loaded.cloud.points[i] == scene.cloud.points[i]);
        CHECK(loaded.cloud.normals[i] == scene.cloud.normals[i]);
    }
    CHECK(loaded.truth.model_id == "box");
    CHECK(loaded.truth.visible_pixels == scene.truth.visible_pixels);
    CHECK(loaded.seed == scene.seed);
    CHECK(loaded.noise.kind == scene.noise.kind);
    REQUIRE(loaded.category.has_value());
    CHECK(loaded.category->simplified == "box");
    CHECK((loaded.support_normal - scene.support_normal).norm() == 0.0);
    fs::remove_all(dir);
}
