#pragma once

#include "simgrasp/grasp.hpp"
#include "simgrasp/scene.hpp"
#include "simgrasp/selection.hpp"
#include "simgrasp/store.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace simgrasp {

enum class Ablation { None, Semantic, Geometric, Dimensional, Multilevel };

Ablation ablation_from_name(const std::string& name);

struct PrefilterOptions {
    bool enabled = false;
    double delta = 0.5;  // semantic embedding keep ratio
    double alpha = 0.5;  // point-count band lower factor
    double beta = 5.0;   // point-count band upper factor
};

struct MatchOptions {
    double qs_min = 0.9;
    double ds_max = 0.1;
    double ss_max = 0.1;
    Ablation ablate = Ablation::None;
    PrefilterOptions prefilter;
    RegistrationParams registration;
    std::size_t tier0_register_cap = 32;
    int jobs = 1;
    CompletionClient* completion = nullptr;          // not owned
    const EmbeddingTable* embeddings = nullptr;       // not owned
};

struct ModelMatchInfo {
    std::string model_id;
    MatchFlags flags;
    bool prefiltered_out = false;
    bool registered = false;
    double fitness = 0.0;
    double inlier_rmse = 0.0;
    std::string method;
    Transform transform = Transform::Identity();
};

struct MatchReport {
    CandidateList ranking;                  // registered candidates, best first
    std::vector<ModelMatchInfo> models;     // every database model
    bool semantic_skipped = false;
    bool dimensional_skipped = false;
    std::size_t prefilter_survivors = 0;
    std::size_t registered_count = 0;
    double match_seconds = 0.0;
    double occlusion_ratio = 0.0;
    std::optional<SortedExtents> observed_extents;

    const ModelMatchInfo* info(const std::string& id) const;
    /// 1-based rank of the model in the final ranking; 0 when absent.
    std::size_t rank_of(const std::string& id) const;
};

/// Multi-level matching of one observed scene against the database:
/// optional pre-filters, the three similarity levels, tier selection,
/// registration of the chosen tier, fitness ranking.
MatchReport match_scene(const ObservedScene& scene, const Database& db,
                        const MatchOptions& options = MatchOptions());

std::string match_report_to_json(const MatchReport& report, const MatchOptions& options);

struct PlanOptions {
    MatchOptions match;
    FineTuneParams finetune;
    bool enable_finetune = true;
    GripperModel gripper;
    ReachabilityPredicate reachable = nullptr;
    std::size_t max_candidates = 8;           // candidate models tried in FS order
    std::size_t max_grasps_per_candidate = 64;
};

struct VerdictCounts {
    int stable = 0, tunable = 0, unstable = 0, potential = 0;
    int tuned_stable = 0;  // tunable grasps promoted by fine-tuning
};

struct PlanReport {
    std::optional<Grasp> grasp;
    GraspVerdict verdict = GraspVerdict::Unstable;
    bool used_potential = false;
    MatchReport match;
    std::vector<std::pair<std::string, VerdictCounts>> per_candidate;
    double plan_seconds = 0.0;
};

/// Full pipeline: matching, then per-candidate grasp transfer, feasibility
/// filtering, classification and two-stage fine-tuning. Returns the first
/// grasp that ends Stable; potential grasps only when nothing is evaluable.
/// Throws NoFeasibleGrasp when every candidate is exhausted.
PlanReport plan_scene(const ObservedScene& scene, const Database& db,
                      const PlanOptions& options = PlanOptions());

std::string plan_report_to_json(const PlanReport& report);

struct SuiteScene {
    ObservedScene scene;
    std::string truth_id;
};

struct SuiteMetrics {
    std::size_t trials = 0;
    std::map<int, std::size_t> top_x_hits;  // x -> hits
    double mean_match_seconds = 0.0;
    double total_match_seconds = 0.0;
    double mean_registered = 0.0;

    double accuracy(int x) const {
        auto it = top_x_hits.find(x);
        return trials == 0 || it == top_x_hits.end()
                   ? 0.0
                   : static_cast<double>(it->second) / trials;
    }
};

/// Runs matching over a scene suite and aggregates top-x accuracy (the truth
/// model inside the first x ranked candidates) and timing.
SuiteMetrics run_match_suite(const std::vector<SuiteScene>& scenes, const Database& db,
                             const MatchOptions& options, const std::vector<int>& xs);

}  // namespace simgrasp
