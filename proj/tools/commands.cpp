#include "commands.hpp"

#include "simgrasp/pipeline.hpp"
#include "simgrasp/ply_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace simgrasp::cli {

namespace fs = std::filesystem;

namespace {

/// Shared tunables across match/plan/eval.
struct CommonConfig {
    double qs_min = 0.9;
    double ds_max = 0.1;
    double ss_max = 0.1;
    double delta = 0.5;
    double alpha = 0.5;
    double beta = 5.0;
    bool prefilter = false;
    std::string ablate = "none";
    std::string embeddings_path;
    std::string stub_path;
    std::string llm = "auto";  // auto | http | stub | off
    std::uint64_t ransac_seed = 7;
    int jobs = 1;

    std::unique_ptr<CompletionClient> completion;
    std::unique_ptr<EmbeddingTable> embeddings;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--qs-min", qs_min, "Geometric QS threshold (match passes above it)")
            ->capture_default_str();
        cmd->add_option("--ds-max", ds_max, "Geometric DS threshold (match passes below it)")
            ->capture_default_str();
        cmd->add_option("--ss-max", ss_max, "Dimensional SS threshold in meters")
            ->capture_default_str();
        cmd->add_option("--delta", delta, "Semantic pre-filter keep ratio")
            ->capture_default_str();
        cmd->add_option("--alpha", alpha, "Point-count band lower factor")
            ->capture_default_str();
        cmd->add_option("--beta", beta, "Point-count band upper factor")
            ->capture_default_str();
        cmd->add_flag("--prefilter", prefilter, "Enable large-database pre-filters");
        cmd->add_option("--ablate", ablate,
                        "Drop a matching level: semantic|geometric|dimensional|multilevel")
            ->capture_default_str();
        cmd->add_option("--embeddings", embeddings_path,
                        "GloVe-format word embedding file for the semantic fallback");
        cmd->add_option("--llm-stub", stub_path,
                        "JSON file of canned completion answers keyed by target category");
        cmd->add_option("--llm", llm, "Completion backend: auto|http|stub|off")
            ->capture_default_str();
        cmd->add_option("--seed", ransac_seed, "RANSAC seed for the registration fallback")
            ->capture_default_str();
        cmd->add_option("--jobs", jobs, "Worker threads for per-model registration")
            ->capture_default_str();
    }

    MatchOptions make_match_options() {
        MatchOptions options;
        options.qs_min = qs_min;
        options.ds_max = ds_max;
        options.ss_max = ss_max;
        options.ablate = ablation_from_name(ablate);
        options.prefilter.enabled = prefilter;
        options.prefilter.delta = delta;
        options.prefilter.alpha = alpha;
        options.prefilter.beta = beta;
        options.registration.ransac_seed = ransac_seed;
        options.jobs = jobs;

        if (!embeddings_path.empty()) {
            embeddings = std::make_unique<EmbeddingTable>(EmbeddingTable::load(embeddings_path));
            options.embeddings = embeddings.get();
        }
        if (llm == "stub" || (!stub_path.empty() && llm == "auto")) {
            if (stub_path.empty()) throw InvalidInput("--llm stub requires --llm-stub FILE");
            completion = std::make_unique<StubCompletionClient>(
                StubCompletionClient::load(stub_path));
        } else if (llm == "http" || llm == "auto") {
            if (auto config = HttpCompletionConfig::from_env()) {
                completion = std::make_unique<HttpCompletionClient>(*config);
            } else if (llm == "http") {
                throw InvalidInput("--llm http requires SIMGRASP_LLM_ENDPOINT");
            }
        }
        options.completion = completion.get();
        return options;
    }
};

Mesh primitive_by_name(const std::string& name) {
    if (name == "box") return make_box(0.08, 0.06, 0.05);
    if (name == "tall_box") return make_box(0.05, 0.05, 0.14);
    if (name == "flat_box") return make_box(0.12, 0.09, 0.02);
    if (name == "cylinder") return make_cylinder(0.03, 0.12);
    if (name == "can") return make_cylinder(0.033, 0.11);
    if (name == "sphere") return make_sphere(0.035);
    if (name == "bowl") return make_bowl(0.08, 0.012);
    if (name == "bracket") return make_l_bracket(0.1, 0.08, 0.04, 0.015);
    if (name == "beveled") return make_beveled_block(0.07, 0.1, 0.05, 0.015, 30.0);
    if (name == "plate") return make_box(0.1, 0.1, 0.006);
    throw InvalidInput("unknown primitive: " + name);
}

int cmd_make_fixtures(const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::vector<std::pair<std::string, std::string>> fixtures = {
        {"box", "box"},          {"tall_box", "box"},    {"flat_box", "box"},
        {"cylinder", "bottle"},  {"can", "can"},         {"sphere", "ball"},
        {"bowl", "bowl"},        {"bracket", "bracket"}, {"beveled", "block"},
        {"plate", "plate"},
    };
    std::ofstream categories(fs::path(out_dir) / "categories.txt");
    for (const auto& [name, category] : fixtures) {
        write_obj(primitive_by_name(name), (fs::path(out_dir) / (name + ".obj")).string());
        categories << name << " " << category << "\n";
        std::cerr << "wrote " << name << ".obj (" << category << ")\n";
    }
    std::cerr << "fixture set written to " << out_dir << "\n";
    return 0;
}

std::map<std::string, std::string> read_categories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open categories file: " + path);
    std::map<std::string, std::string> out;
    std::string id, category;
    while (in >> id >> category) out[id] = category;
    return out;
}

int cmd_build_db(const std::string& mesh_dir, const std::string& categories_path,
                 const std::string& out_dir, bool strict, double spacing,
                 std::size_t grasp_target, bool no_grasps) {
    const auto categories = read_categories(categories_path);

    std::vector<fs::path> meshes;
    for (const auto& entry : fs::directory_iterator(mesh_dir)) {
        if (entry.path().extension() == ".obj") meshes.push_back(entry.path());
    }
    std::sort(meshes.begin(), meshes.end());
    if (meshes.empty()) {
        std::cerr << "no .obj meshes found in " << mesh_dir << "\n";
        return 1;
    }

    IngestParams params;
    params.sample_spacing = spacing;
    params.sampler.target_count = grasp_target;
    params.with_grasps = !no_grasps;
    Database db(params);

    bool flagged = false;
    for (const fs::path& path : meshes) {
        const std::string id = path.stem().string();
        auto it = categories.find(id);
        if (it == categories.end()) {
            std::cerr << "skipping " << id << ": no category listed\n";
            continue;
        }
        const Mesh mesh = read_obj(path.string());
        ModelRecord record =
            ingest_model(mesh, id, Category::simplified_only(it->second), params);
        std::cerr << id << ": " << record.complete_cloud.size() << " points, "
                  << record.descriptor.sample_count << " descriptor samples, "
                  << record.grasps.size() << " grasps"
                  << (record.descriptor_too_sparse ? " [sparse descriptor]" : "")
                  << (record.ungraspable && params.with_grasps ? " [ungraspable]" : "") << "\n";
        flagged |= record.descriptor_too_sparse || (record.ungraspable && params.with_grasps);
        db.add(std::move(record));
    }
    save_database(db, out_dir);
    std::cerr << "database with " << db.size() << " models written to " << out_dir << "\n";
    return (strict && flagged) ? 1 : 0;
}

int cmd_make_scene(const std::string& db_dir, const std::string& model_id,
                   const std::string& out_path, double yaw, double azimuth, double elevation,
                   double distance, const std::string& noise_kind, double sigma,
                   std::uint64_t seed, bool occlude_half, bool withhold_category,
                   const std::string& mesh_path) {
    const Database db = load_database(db_dir);
    const ModelRecord* model = db.find(model_id);
    if (!model) {
        std::cerr << "model not found: " << model_id << "\n";
        return 1;
    }

    Mesh mesh;
    if (!mesh_path.empty()) {
        mesh = read_obj(mesh_path);
    } else {
        try {
            mesh = primitive_by_name(model_id);
        } catch (const InvalidInput&) {
            std::cerr << "make-scene needs --mesh for non-primitive model '" << model_id
                      << "'\n";
            return 1;
        }
    }

    SceneSpec spec;
    spec.seed = seed;
    spec.noise.sigma = sigma;
    if (noise_kind == "none") spec.noise.kind = NoiseModel::Kind::None;
    else if (noise_kind == "gaussian-depth") spec.noise.kind = NoiseModel::Kind::GaussianDepth;
    else if (noise_kind == "smoothed") spec.noise.kind = NoiseModel::Kind::Smoothed;
    else if (noise_kind == "hole-filled") spec.noise.kind = NoiseModel::Kind::HoleFilled;
    else throw InvalidInput("unknown noise kind: " + noise_kind);
    spec.withhold_category = withhold_category;
    spec.object_pose = resting_pose(mesh, yaw);
    const Vec3 target = spec.object_pose * Vec3::Zero();
    spec.camera = diagonal_camera(target, distance, azimuth, elevation);
    if (occlude_half) {
        // A slab in front of the object hiding roughly the left half.
        CameraSpaceBox box;
        box.min = Vec3(-0.5, -0.5, distance * 0.5);
        box.max = Vec3(0.0, 0.5, distance * 0.55);
        spec.occluders.push_back(box);
    }

    const ObservedScene scene = make_scene(mesh, model_id, model->category, spec);
    save_scene(scene, out_path);
    std::cerr << "scene with " << scene.cloud.size() << " points written to " << out_path
              << " (occlusion " << scene.truth.occlusion_ratio() << ")\n";
    return 0;
}

int cmd_match(CommonConfig& config, const std::string& scene_path, const std::string& db_dir) {
    const ObservedScene scene = load_scene(scene_path);
    const Database db = load_database(db_dir);
    const MatchOptions options = config.make_match_options();
    const MatchReport report = match_scene(scene, db, options);
    std::cout << match_report_to_json(report, options) << "\n";
    return 0;
}

int cmd_plan(CommonConfig& config, const std::string& scene_path, const std::string& db_dir,
             bool no_finetune) {
    const ObservedScene scene = load_scene(scene_path);
    const Database db = load_database(db_dir);
    PlanOptions options;
    options.match = config.make_match_options();
    options.enable_finetune = !no_finetune;
    try {
        const PlanReport report = plan_scene(scene, db, options);
        std::cout << plan_report_to_json(report) << "\n";
        return 0;
    } catch (const NoFeasibleGrasp& e) {
        nlohmann::json doc;
        doc["version"] = 1;
        doc["grasp"] = nullptr;
        doc["error"] = e.what();
        std::cout << doc.dump(2) << "\n";
        return 2;
    }
}

int cmd_eval(CommonConfig& config, const std::string& suite_path) {
    std::ifstream in(suite_path);
    if (!in) throw IoError("cannot open suite config: " + suite_path);
    nlohmann::json suite;
    try {
        in >> suite;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("suite config parse error: ") + e.what());
    }

    const fs::path base = fs::path(suite_path).parent_path();
    const Database db = load_database((base / suite.at("db").get<std::string>()).string());

    std::vector<SuiteScene> scenes;
    for (const auto& entry : suite.at("scenes")) {
        SuiteScene s;
        s.scene = load_scene((base / entry.at("scene").get<std::string>()).string());
        s.truth_id = entry.value("truth", s.scene.truth.model_id);
        scenes.push_back(std::move(s));
    }
    std::vector<int> xs;
    for (const auto& x : suite.value("top_x", nlohmann::json::array({1, 2, 5}))) {
        xs.push_back(x.get<int>());
    }

    const MatchOptions options = config.make_match_options();
    const SuiteMetrics metrics = run_match_suite(scenes, db, options, xs);

    nlohmann::json doc;
    doc["version"] = 1;
    doc["trials"] = metrics.trials;
    nlohmann::json accuracy;
    for (int x : xs) {
        accuracy["MA" + std::to_string(x)] = metrics.accuracy(x);
    }
    doc["matching_accuracy"] = accuracy;
    doc["mean_match_seconds"] = metrics.mean_match_seconds;
    doc["mean_registered_candidates"] = metrics.mean_registered;
    std::cout << doc.dump(2) << "\n";

    std::fprintf(stderr, "%-8s %8s\n", "metric", "value");
    for (int x : xs) {
        std::fprintf(stderr, "MA_%-5d %8.3f\n", x, metrics.accuracy(x));
    }
    std::fprintf(stderr, "%-8s %8.3f\n", "MT(s)", metrics.mean_match_seconds);
    return 0;
}

}  // namespace

void setup(CLI::App& app, int* exit_code) {
    app.require_subcommand(1);

    {
        auto* cmd = app.add_subcommand(
            "make-fixtures", "Write the procedural primitive mesh set and its categories file");
        auto out = std::make_shared<std::string>("fixtures");
        cmd->add_option("--out", *out, "Output directory")->capture_default_str();
        cmd->callback([exit_code, out] { *exit_code = cmd_make_fixtures(*out); });
    }

    {
        auto* cmd = app.add_subcommand("build-db", "Ingest OBJ meshes into a model database");
        struct Args {
            std::string meshes, categories, out;
            bool strict = false, no_grasps = false;
            double spacing = 0.002;
            std::size_t grasps = 200;
        };
        auto args = std::make_shared<Args>();
        cmd->add_option("--meshes", args->meshes, "Directory of OBJ meshes")->required();
        cmd->add_option("--categories", args->categories,
                        "Text file of '<mesh-stem> <category>' lines")
            ->required();
        cmd->add_option("--out", args->out, "Database output directory")->required();
        cmd->add_flag("--strict", args->strict, "Exit nonzero when any model is flagged");
        cmd->add_flag("--no-grasps", args->no_grasps, "Skip grasp preplanning");
        cmd->add_option("--spacing", args->spacing, "Surface sampling spacing in meters")
            ->capture_default_str();
        cmd->add_option("--grasps", args->grasps, "Preplanned grasp target per model")
            ->capture_default_str();
        cmd->callback([exit_code, args] {
            *exit_code = cmd_build_db(args->meshes, args->categories, args->out, args->strict,
                                      args->spacing, args->grasps, args->no_grasps);
        });
    }

    {
        auto* cmd = app.add_subcommand(
            "make-scene", "Render a synthetic single-view scene of a database model");
        struct Args {
            std::string db, model, out, mesh;
            double yaw = 20.0, azimuth = 45.0, elevation = 35.0, distance = 0.55;
            std::string noise = "none";
            double sigma = 0.001;
            std::uint64_t seed = 0;
            bool occlude_half = false, withhold = false;
        };
        auto args = std::make_shared<Args>();
        cmd->add_option("--db", args->db, "Database directory")->required();
        cmd->add_option("--model", args->model, "Model id to render")->required();
        cmd->add_option("--out", args->out, "Scene JSON output path")->required();
        cmd->add_option("--mesh", args->mesh, "OBJ mesh (required for non-primitive models)");
        cmd->add_option("--yaw", args->yaw, "Object yaw in degrees")->capture_default_str();
        cmd->add_option("--azimuth", args->azimuth, "Camera azimuth in degrees")
            ->capture_default_str();
        cmd->add_option("--elevation", args->elevation, "Camera elevation in degrees")
            ->capture_default_str();
        cmd->add_option("--distance", args->distance, "Camera distance in meters")
            ->capture_default_str();
        cmd->add_option("--noise", args->noise,
                        "Noise kind: none|gaussian-depth|smoothed|hole-filled")
            ->capture_default_str();
        cmd->add_option("--sigma", args->sigma, "Gaussian depth sigma in meters")
            ->capture_default_str();
        cmd->add_option("--scene-seed", args->seed, "Noise seed")->capture_default_str();
        cmd->add_flag("--occlude-half", args->occlude_half,
                      "Place an occluder hiding roughly half the object");
        cmd->add_flag("--withhold-category", args->withhold,
                      "Drop the category to exercise the semantic skip path");
        cmd->callback([exit_code, args] {
            *exit_code = cmd_make_scene(args->db, args->model, args->out, args->yaw,
                                        args->azimuth, args->elevation, args->distance,
                                        args->noise, args->sigma, args->seed,
                                        args->occlude_half, args->withhold, args->mesh);
        });
    }

    {
        auto* cmd = app.add_subcommand("match", "Multi-level matching of a scene against a "
                                                "database; report JSON on stdout");
        auto config = std::make_shared<CommonConfig>();
        auto scene = std::make_shared<std::string>();
        auto db = std::make_shared<std::string>();
        cmd->add_option("--scene", *scene, "Scene JSON file")->required();
        cmd->add_option("--db", *db, "Database directory")->required();
        config->add_options(cmd);
        cmd->callback([exit_code, config, scene, db] {
            *exit_code = cmd_match(*config, *scene, *db);
        });
    }

    {
        auto* cmd = app.add_subcommand("plan", "Full grasp planning for a scene; plan report "
                                               "JSON on stdout, exit 2 when no grasp exists");
        auto config = std::make_shared<CommonConfig>();
        auto scene = std::make_shared<std::string>();
        auto db = std::make_shared<std::string>();
        auto no_finetune = std::make_shared<bool>(false);
        cmd->add_option("--scene", *scene, "Scene JSON file")->required();
        cmd->add_option("--db", *db, "Database directory")->required();
        cmd->add_flag("--no-finetune", *no_finetune, "Disable the two-stage fine-tuning");
        config->add_options(cmd);
        cmd->callback([exit_code, config, scene, db, no_finetune] {
            *exit_code = cmd_plan(*config, *scene, *db, *no_finetune);
        });
    }

    {
        auto* cmd = app.add_subcommand("eval", "Run a matching suite and print accuracy "
                                               "metrics (JSON to stdout, table to stderr)");
        auto config = std::make_shared<CommonConfig>();
        auto suite = std::make_shared<std::string>();
        cmd->add_option("--suite", *suite, "Suite config JSON")->required();
        config->add_options(cmd);
        cmd->callback([exit_code, config, suite] { *exit_code = cmd_eval(*config, *suite); });
    }
}

}  // namespace simgrasp::cli
