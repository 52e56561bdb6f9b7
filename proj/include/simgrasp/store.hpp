#pragma once

#include "simgrasp/cfpfh.hpp"
#include "simgrasp/grasp.hpp"
#include "simgrasp/mesh.hpp"
#include "simgrasp/semantic.hpp"
#include "simgrasp/sobb.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace simgrasp {

/// One database entry: everything matching and planning need about a model.
struct ModelRecord {
    std::string id;
    Category category;
    PointCloud complete_cloud;
    CfpfhDescriptor descriptor;
    SortedExtents sorted_extents;
    std::size_t point_count_5mm = 0;
    std::vector<Grasp> grasps;
    bool descriptor_too_sparse = false;
    bool ungraspable = false;
};

struct IngestParams {
    double sample_spacing = 0.002;   // mesh surface sampling
    double normal_radius = 0.01;
    double count_voxel = 0.005;      // resolution for the pre-filter point count
    DescriptorParams descriptor;
    AntipodalParams sampler;
    GripperModel gripper;
    bool with_grasps = true;
};

struct DatabaseManifest {
    int version = 1;
    IngestParams params;
    std::vector<std::string> model_ids;
};

class Database {
public:
    Database() = default;
    explicit Database(IngestParams params) : params_(std::move(params)) {}

    const IngestParams& params() const { return params_; }
    const std::vector<ModelRecord>& models() const { return models_; }
    std::size_t size() const { return models_.size(); }
    const ModelRecord& at(std::size_t i) const { return models_[i]; }
    const ModelRecord* find(const std::string& id) const;

    void add(ModelRecord record);

    std::vector<Category> categories() const;

private:
    IngestParams params_;
    std::vector<ModelRecord> models_;
    std::map<std::string, std::size_t> index_;
};

/// Builds a record from a canonically posed mesh: surface sampling (seeded by
/// content hash), descriptor, sorted AABB extents, pre-filter point count,
/// preplanned grasps. Degenerate inputs are flagged but still stored.
ModelRecord ingest_model(const Mesh& mesh, const std::string& id, const Category& category,
                         const IngestParams& params);

/// Same, starting from an existing complete cloud with normals.
ModelRecord ingest_cloud(const PointCloud& cloud, const std::string& id,
                         const Category& category, const IngestParams& params);

/// Directory layout: <path>/manifest.json plus
/// <path>/models/<id>/{cloud.ply, descriptor.json, grasps.json, meta.json}.
void save_database(const Database& db, const std::string& path);
Database load_database(const std::string& path);

}  // namespace simgrasp
