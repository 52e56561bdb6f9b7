#include "simgrasp/store.hpp"

#include "simgrasp/cloud_ops.hpp"
#include "simgrasp/ply_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace simgrasp {

namespace fs = std::filesystem;

const ModelRecord* Database::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &models_[it->second];
}

void Database::add(ModelRecord record) {
    if (index_.count(record.id)) throw InvalidInput("duplicate model id: " + record.id);
    index_[record.id] = models_.size();
    models_.push_back(std::move(record));
}

std::vector<Category> Database::categories() const {
    std::vector<Category> cats;
    for (const ModelRecord& m : models_) cats.push_back(m.category);
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    return cats;
}

ModelRecord ingest_cloud(const PointCloud& cloud, const std::string& id,
                         const Category& category, const IngestParams& params) {
    if (!cloud.has_normals()) throw InvalidInput("ingest_cloud: normals required");

    ModelRecord record;
    record.id = id;
    record.category = category;
    record.complete_cloud = cloud;

    try {
        record.descriptor = build_cfpfh(cloud, params.descriptor);
    } catch (const TooSparse&) {
        record.descriptor_too_sparse = true;
    }

    Vec3 lo = cloud.points.front(), hi = cloud.points.front();
    for (const Vec3& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    record.sorted_extents = SortedExtents((hi - lo).cwiseMax(1e-6));

    record.point_count_5mm = voxel_downsample_indices(cloud, params.count_voxel).size();

    if (params.with_grasps) {
        try {
            record.grasps = sample_antipodal_grasps(cloud, params.gripper, params.sampler);
            for (Grasp& g : record.grasps) g.source_model = id;
        } catch (const NoGraspFound&) {
            record.ungraspable = true;
        }
    } else {
        record.ungraspable = true;
    }
    return record;
}

ModelRecord ingest_model(const Mesh& mesh, const std::string& id, const Category& category,
                         const IngestParams& params) {
    mesh.check();
    IngestParams local = params;
    local.sampler.seed = mesh.content_hash();  // deterministic re-ingest
    const PointCloud cloud = sample_surface(mesh, params.sample_spacing, mesh.content_hash());
    return ingest_cloud(cloud, id, category, local);
}

namespace {

nlohmann::json params_to_json(const IngestParams& p) {
    nlohmann::json j;
    j["sample_spacing"] = p.sample_spacing;
    j["normal_radius"] = p.normal_radius;
    j["count_voxel"] = p.count_voxel;
    j["descriptor"] = {{"sample_voxel", p.descriptor.sample_voxel},
                       {"fpfh_radius", p.descriptor.fpfh_radius},
                       {"cluster_radius", p.descriptor.cluster_radius},
                       {"normal_angle_max_deg", p.descriptor.normal_angle_max_deg},
                       {"boundary_radius_factor", p.descriptor.boundary_radius_factor}};
    j["sampler"] = {{"target_count", p.sampler.target_count},
                    {"antipodal_min_deg", p.sampler.antipodal_min_deg},
                    {"line_max_deg", p.sampler.line_max_deg},
                    {"approach_step_deg", p.sampler.approach_step_deg},
                    {"dedup_translation", p.sampler.dedup_translation},
                    {"dedup_angle_deg", p.sampler.dedup_angle_deg},
                    {"width_margin", p.sampler.width_margin},
                    {"max_attempts", p.sampler.max_attempts}};
    j["gripper"] = {{"max_opening", p.gripper.max_opening},
                    {"finger_length", p.gripper.finger_length},
                    {"finger_thickness", p.gripper.finger_thickness},
                    {"finger_width", p.gripper.finger_width},
                    {"palm_depth", p.gripper.palm_depth},
                    {"palm_half_width", p.gripper.palm_half_width},
                    {"contact_radius", p.gripper.contact_radius}};
    j["with_grasps"] = p.with_grasps;
    return j;
}

IngestParams params_from_json(const nlohmann::json& j) {
    IngestParams p;
    p.sample_spacing = j.at("sample_spacing").get<double>();
    p.normal_radius = j.at("normal_radius").get<double>();
    p.count_voxel = j.at("count_voxel").get<double>();
    const auto& d = j.at("descriptor");
    p.descriptor.sample_voxel = d.at("sample_voxel").get<double>();
    p.descriptor.fpfh_radius = d.at("fpfh_radius").get<double>();
    p.descriptor.cluster_radius = d.at("cluster_radius").get<double>();
    p.descriptor.normal_angle_max_deg = d.at("normal_angle_max_deg").get<double>();
    p.descriptor.boundary_radius_factor = d.at("boundary_radius_factor").get<double>();
    const auto& s = j.at("sampler");
    p.sampler.target_count = s.at("target_count").get<std::size_t>();
    p.sampler.antipodal_min_deg = s.at("antipodal_min_deg").get<double>();
    p.sampler.line_max_deg = s.at("line_max_deg").get<double>();
    p.sampler.approach_step_deg = s.at("approach_step_deg").get<double>();
    p.sampler.dedup_translation = s.at("dedup_translation").get<double>();
    p.sampler.dedup_angle_deg = s.at("dedup_angle_deg").get<double>();
    p.sampler.width_margin = s.at("width_margin").get<double>();
    p.sampler.max_attempts = s.at("max_attempts").get<std::size_t>();
    const auto& g = j.at("gripper");
    p.gripper.max_opening = g.at("max_opening").get<double>();
    p.gripper.finger_length = g.at("finger_length").get<double>();
    p.gripper.finger_thickness = g.at("finger_thickness").get<double>();
    p.gripper.finger_width = g.at("finger_width").get<double>();
    p.gripper.palm_depth = g.at("palm_depth").get<double>();
    p.gripper.palm_half_width = g.at("palm_half_width").get<double>();
    p.gripper.contact_radius = g.at("contact_radius").get<double>();
    p.with_grasps = j.at("with_grasps").get<bool>();
    return p;
}

bool params_equal(const IngestParams& a, const IngestParams& b) {
    return params_to_json(a) == params_to_json(b);
}

nlohmann::json transform_to_json(const Transform& t) {
    nlohmann::json rows = nlohmann::json::array();
    const Eigen::Matrix4d m = t.matrix();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) rows.push_back(m(r, c));
    }
    return rows;
}

Transform transform_from_json(const nlohmann::json& j) {
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
    }
    Transform t;
    t.matrix() = m;
    return t;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << text;
    if (text.empty() || text.back() != '\n') out << "\n";
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("missing file: " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace

void save_database(const Database& db, const std::string& path) {
    const fs::path root(path);
    fs::create_directories(root / "models");

    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["params"] = params_to_json(db.params());
    nlohmann::json ids = nlohmann::json::array();
    for (const ModelRecord& m : db.models()) ids.push_back(m.id);
    manifest["models"] = ids;
    write_text(root / "manifest.json", manifest.dump(2));

    for (const ModelRecord& m : db.models()) {
        const fs::path dir = root / "models" / m.id;
        fs::create_directories(dir);
        write_ply(m.complete_cloud, (dir / "cloud.ply").string());
        write_text(dir / "descriptor.json", descriptor_to_json(m.descriptor));

        nlohmann::json grasps;
        grasps["version"] = 1;
        nlohmann::json list = nlohmann::json::array();
        for (const Grasp& g : m.grasps) {
            list.push_back({{"pose", transform_to_json(g.pose)}, {"width", g.width}});
        }
        grasps["grasps"] = list;
        write_text(dir / "grasps.json", grasps.dump(2));

        nlohmann::json meta;
        meta["version"] = 1;
        meta["id"] = m.id;
        meta["category"] = {{"raw", m.category.raw}, {"simplified", m.category.simplified}};
        meta["sorted_extents"] = {m.sorted_extents.values[0], m.sorted_extents.values[1],
                                  m.sorted_extents.values[2]};
        meta["point_count_5mm"] = m.point_count_5mm;
        meta["descriptor_too_sparse"] = m.descriptor_too_sparse;
        meta["ungraspable"] = m.ungraspable;
        meta["params"] = params_to_json(db.params());
        write_text(dir / "meta.json", meta.dump(2));
    }
}

Database load_database(const std::string& path) {
    const fs::path root(path);
    const nlohmann::json manifest = read_json(root / "manifest.json");
    if (manifest.value("version", 0) != 1) {
        throw IoError("unsupported database version in " + (root / "manifest.json").string());
    }
    Database db(params_from_json(manifest.at("params")));

    for (const auto& id_json : manifest.at("models")) {
        const std::string id = id_json.get<std::string>();
        const fs::path dir = root / "models" / id;

        const nlohmann::json meta = read_json(dir / "meta.json");
        if (meta.value("version", 0) != 1) {
            throw IoError("unsupported meta version for model " + id);
        }
        if (!params_equal(params_from_json(meta.at("params")), db.params())) {
            throw IoError("params mismatch between manifest and model " + id);
        }

        ModelRecord record;
        record.id = id;
        record.category.raw = meta.at("category").at("raw").get<std::string>();
        record.category.simplified = meta.at("category").at("simplified").get<std::string>();
        const auto& ext = meta.at("sorted_extents");
        record.sorted_extents.values =
            Vec3(ext[0].get<double>(), ext[1].get<double>(), ext[2].get<double>());
        record.point_count_5mm = meta.at("point_count_5mm").get<std::size_t>();
        record.descriptor_too_sparse = meta.at("descriptor_too_sparse").get<bool>();
        record.ungraspable = meta.at("ungraspable").get<bool>();

        if (!fs::exists(dir / "cloud.ply")) {
            throw IoError("missing cloud.ply for model " + id);
        }
        record.complete_cloud = read_ply((dir / "cloud.ply").string());

        std::ifstream desc(dir / "descriptor.json");
        if (!desc) throw IoError("missing descriptor.json for model " + id);
        std::string desc_text((std::istreambuf_iterator<char>(desc)),
                              std::istreambuf_iterator<char>());
        record.descriptor = descriptor_from_json(desc_text);

        const nlohmann::json grasps = read_json(dir / "grasps.json");
        if (grasps.value("version", 0) != 1) {
            throw IoError("unsupported grasps version for model " + id);
        }
        for (const auto& g : grasps.at("grasps")) {
            Grasp grasp;
            grasp.pose = transform_from_json(g.at("pose"));
            grasp.width = g.at("width").get<double>();
            grasp.source_model = id;
            record.grasps.push_back(grasp);
        }
        db.add(std::move(record));
    }
    return db;
}

}  // namespace simgrasp
