#include "simgrasp/scene.hpp"

#include "simgrasp/cloud_ops.hpp"
#include "simgrasp/ply_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace simgrasp {

ObservedScene make_scene(const Mesh& mesh, const std::string& model_id,
                         const std::optional<Category>& category, const SceneSpec& spec) {
    const Mesh posed = mesh.transformed(spec.object_pose);

    DepthImage image = render_depth(posed, spec.camera);
    const std::size_t unoccluded = image.object_count();
    image = occlude(image, spec.camera, spec.occluders);
    const std::size_t visible = image.object_count();
    image = apply_noise(image, spec.noise, spec.seed);

    ObservedScene scene;
    scene.cloud = backproject(image, spec.camera, posed);
    if (scene.cloud.empty()) throw EmptyRender("scene has no visible object pixels");
    if (spec.reestimate_normals) {
        scene.cloud = estimate_normals(scene.cloud, spec.normal_radius,
                                       spec.camera.pose.translation());
    }
    scene.camera = spec.camera;
    scene.support_point = Vec3::Zero();
    scene.support_normal = Vec3::UnitZ();
    if (!spec.withhold_category && category) scene.category = category;
    scene.truth.model_id = model_id;
    scene.truth.object_pose = spec.object_pose;
    scene.truth.unoccluded_pixels = unoccluded;
    scene.truth.visible_pixels = visible;
    scene.noise = spec.noise;
    scene.seed = spec.seed;
    scene.occluders = spec.occluders;
    return scene;
}

VirtualCamera diagonal_camera(const Vec3& target, double distance, double azimuth_deg,
                              double elevation_deg, int width, int height, double focal) {
    const double az = deg2rad(azimuth_deg);
    const double el = deg2rad(elevation_deg);
    const Vec3 eye = target + distance * Vec3(std::cos(el) * std::cos(az),
                                              std::cos(el) * std::sin(az), std::sin(el));
    VirtualCamera cam = VirtualCamera::look_at(eye, target);
    cam.width = width;
    cam.height = height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.fx = focal;
    cam.fy = focal;
    return cam;
}

Transform resting_pose(const Mesh& mesh, double yaw_deg, const Vec3& xy_offset) {
    Transform pose = Transform::Identity();
    pose.linear() = Eigen::AngleAxisd(deg2rad(yaw_deg), Vec3::UnitZ()).toRotationMatrix();
    double min_z = std::numeric_limits<double>::infinity();
    for (const Vec3& v : mesh.vertices) {
        min_z = std::min(min_z, (pose.linear() * v).z());
    }
    pose.translation() = Vec3(xy_offset.x(), xy_offset.y(), -min_z);
    return pose;
}

namespace {

nlohmann::json transform_to_json(const Transform& t) {
    nlohmann::json rows = nlohmann::json::array();
    const Eigen::Matrix4d m = t.matrix();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) rows.push_back(m(r, c));
    }
    return rows;
}

Transform transform_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 16) throw IoError("expected a 4x4 row-major transform");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
    }
    Transform t;
    t.matrix() = m;
    return t;
}

std::string noise_kind_name(NoiseModel::Kind kind) {
    switch (kind) {
        case NoiseModel::Kind::None: return "none";
        case NoiseModel::Kind::GaussianDepth: return "gaussian-depth";
        case NoiseModel::Kind::Smoothed: return "smoothed";
        case NoiseModel::Kind::HoleFilled: return "hole-filled";
    }
    return "none";
}

NoiseModel::Kind noise_kind_from_name(const std::string& name) {
    if (name == "none") return NoiseModel::Kind::None;
    if (name == "gaussian-depth") return NoiseModel::Kind::GaussianDepth;
    if (name == "smoothed") return NoiseModel::Kind::Smoothed;
    if (name == "hole-filled") return NoiseModel::Kind::HoleFilled;
    throw IoError("unknown noise kind: " + name);
}

}  // namespace

void save_scene(const ObservedScene& scene, const std::string& json_path) {
    const std::filesystem::path path(json_path);
    const std::filesystem::path ply_path = path.parent_path() / (path.stem().string() + ".ply");
    write_ply(scene.cloud, ply_path.string());

    nlohmann::json doc;
    doc["version"] = 1;
    doc["cloud"] = ply_path.filename().string();
    doc["support_point"] = {scene.support_point.x(), scene.support_point.y(),
                            scene.support_point.z()};
    doc["support_normal"] = {scene.support_normal.x(), scene.support_normal.y(),
                             scene.support_normal.z()};
    if (scene.category) {
        doc["category"] = scene.category->raw;
    } else {
        doc["category"] = nullptr;
    }
    doc["truth"] = {{"model_id", scene.truth.model_id},
                    {"object_pose", transform_to_json(scene.truth.object_pose)},
                    {"unoccluded_pixels", scene.truth.unoccluded_pixels},
                    {"visible_pixels", scene.truth.visible_pixels}};
    doc["camera"] = {{"pose", transform_to_json(scene.camera.pose)},
                     {"fx", scene.camera.fx},
                     {"fy", scene.camera.fy},
                     {"cx", scene.camera.cx},
                     {"cy", scene.camera.cy},
                     {"width", scene.camera.width},
                     {"height", scene.camera.height}};
    doc["noise"] = {{"kind", noise_kind_name(scene.noise.kind)},
                    {"sigma", scene.noise.sigma},
                    {"kernel", scene.noise.kernel},
                    {"hole_rate", scene.noise.hole_rate}};
    doc["seed"] = scene.seed;
    nlohmann::json occluders = nlohmann::json::array();
    for (const CameraSpaceBox& box : scene.occluders) {
        occluders.push_back({{"min", {box.min.x(), box.min.y(), box.min.z()}},
                             {"max", {box.max.x(), box.max.y(), box.max.z()}}});
    }
    doc["occluders"] = occluders;

    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write scene file: " + json_path);
    out << doc.dump(2) << "\n";
}

ObservedScene load_scene(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open scene file: " + json_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("scene JSON parse error in ") + json_path + ": " + e.what());
    }
    if (doc.value("version", 0) != 1) throw IoError("unsupported scene version in " + json_path);

    ObservedScene scene;
    const std::filesystem::path base = std::filesystem::path(json_path).parent_path();
    scene.cloud = read_ply((base / doc.at("cloud").get<std::string>()).string());
    const auto& sp = doc.at("support_point");
    scene.support_point = Vec3(sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>());
    const auto& sn = doc.at("support_normal");
    scene.support_normal = Vec3(sn[0].get<double>(), sn[1].get<double>(), sn[2].get<double>());
    if (!doc.at("category").is_null()) {
        scene.category = Category::from_raw(doc.at("category").get<std::string>());
    }
    const auto& truth = doc.at("truth");
    scene.truth.model_id = truth.at("model_id").get<std::string>();
    scene.truth.object_pose = transform_from_json(truth.at("object_pose"));
    scene.truth.unoccluded_pixels = truth.at("unoccluded_pixels").get<std::size_t>();
    scene.truth.visible_pixels = truth.at("visible_pixels").get<std::size_t>();
    const auto& cam = doc.at("camera");
    scene.camera.pose = transform_from_json(cam.at("pose"));
    scene.camera.fx = cam.at("fx").get<double>();
    scene.camera.fy = cam.at("fy").get<double>();
    scene.camera.cx = cam.at("cx").get<double>();
    scene.camera.cy = cam.at("cy").get<double>();
    scene.camera.width = cam.at("width").get<int>();
    scene.camera.height = cam.at("height").get<int>();
    if (doc.contains("noise")) {
        const auto& noise = doc.at("noise");
        scene.noise.kind = noise_kind_from_name(noise.at("kind").get<std::string>());
        scene.noise.sigma = noise.at("sigma").get<double>();
        scene.noise.kernel = noise.at("kernel").get<int>();
        scene.noise.hole_rate = noise.at("hole_rate").get<double>();
        scene.seed = doc.value("seed", std::uint64_t{0});
        for (const auto& b : doc.at("occluders")) {
            CameraSpaceBox box;
            box.min = Vec3(b.at("min")[0].get<double>(), b.at("min")[1].get<double>(),
                           b.at("min")[2].get<double>());
            box.max = Vec3(b.at("max")[0].get<double>(), b.at("max")[1].get<double>(),
                           b.at("max")[2].get<double>());
            scene.occluders.push_back(box);
        }
    }
    return scene;
}

}  // namespace simgrasp
