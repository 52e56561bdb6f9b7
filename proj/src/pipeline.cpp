#include "simgrasp/pipeline.hpp"

#include "simgrasp/cloud_ops.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>

namespace simgrasp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json transform_to_json(const Transform& t) {
    nlohmann::json rows = nlohmann::json::array();
    const Eigen::Matrix4d m = t.matrix();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) rows.push_back(m(r, c));
    }
    return rows;
}

}  // namespace

Ablation ablation_from_name(const std::string& name) {
    if (name == "none" || name.empty()) return Ablation::None;
    if (name == "semantic") return Ablation::Semantic;
    if (name == "geometric") return Ablation::Geometric;
    if (name == "dimensional") return Ablation::Dimensional;
    if (name == "multilevel") return Ablation::Multilevel;
    throw InvalidInput("unknown ablation: " + name);
}

const ModelMatchInfo* MatchReport::info(const std::string& id) const {
    for (const ModelMatchInfo& m : models) {
        if (m.model_id == id) return &m;
    }
    return nullptr;
}

std::size_t MatchReport::rank_of(const std::string& id) const {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (ranking[i].model_id == id) return i + 1;
    }
    return 0;
}

MatchReport match_scene(const ObservedScene& scene, const Database& db,
                        const MatchOptions& options) {
    if (scene.cloud.empty()) throw InvalidInput("match_scene: empty observed cloud");
    if (db.size() == 0) throw InvalidInput("match_scene: empty database");
    const auto start = Clock::now();

    MatchReport report;
    report.occlusion_ratio = scene.truth.occlusion_ratio();
    report.models.resize(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) {
        report.models[i].model_id = db.at(i).id;
    }

    // Pre-filters shrink the model set before any level evaluation.
    std::vector<std::size_t> active(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) active[i] = i;
    if (options.prefilter.enabled) {
        const std::size_t observed_count =
            voxel_downsample_indices(scene.cloud, db.params().count_voxel).size();
        std::vector<std::size_t> counts(db.size());
        for (std::size_t i = 0; i < db.size(); ++i) counts[i] = db.at(i).point_count_5mm;
        std::set<std::size_t> kept_by_count;
        for (std::size_t i :
             prefilter_count(observed_count, counts, options.prefilter.alpha,
                             options.prefilter.beta)) {
            kept_by_count.insert(i);
        }

        std::set<std::string> kept_categories;
        bool category_filter = false;
        if (scene.category && options.embeddings) {
            category_filter = true;
            for (const Category& c :
                 prefilter_semantic(*options.embeddings, *scene.category, db.categories(),
                                    options.prefilter.delta)) {
                kept_categories.insert(c.simplified);
            }
        }

        std::vector<std::size_t> survivors;
        for (std::size_t i : active) {
            const bool count_ok = kept_by_count.count(i) > 0;
            const bool semantic_ok =
                !category_filter || kept_categories.count(db.at(i).category.simplified) > 0;
            if (count_ok && semantic_ok) {
                survivors.push_back(i);
            } else {
                report.models[i].prefiltered_out = true;
            }
        }
        active = std::move(survivors);
    }
    report.prefilter_survivors = active.size();
    if (active.empty()) {
        report.match_seconds = seconds_since(start);
        return report;  // empty ranking; the caller reports no candidates
    }

    // Scene-level inputs shared by every model. The observed descriptor must
    // use the parameters the database records were generated with.
    std::optional<CfpfhDescriptor> observed_descriptor;
    if (options.ablate != Ablation::Geometric && options.ablate != Ablation::Multilevel) {
        try {
            observed_descriptor = build_cfpfh(scene.cloud, db.params().descriptor);
        } catch (const TooSparse& e) {
            std::cerr << "match: observed descriptor too sparse (" << e.what()
                      << "), geometric level fails\n";
        }
    }

    std::optional<SortedExtents> observed_extents;
    if (options.ablate != Ablation::Dimensional && options.ablate != Ablation::Multilevel) {
        try {
            const Sobb box = build_sobb(scene.cloud, scene.support_normal);
            observed_extents = SortedExtents(box.extents);
        } catch (const Error& e) {
            std::cerr << "match: no observed extents (" << e.what()
                      << "), dimensional level skipped\n";
        }
    }
    report.observed_extents = observed_extents;

    SemanticResult semantic;
    semantic.skipped = true;
    if (options.ablate != Ablation::Semantic && options.ablate != Ablation::Multilevel) {
        std::vector<Category> cats;
        for (std::size_t i : active) cats.push_back(db.at(i).category);
        std::sort(cats.begin(), cats.end());
        cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
        semantic = semantic_match(options.completion, cats, scene.category,
                                  options.embeddings, options.prefilter.delta);
    }
    report.semantic_skipped = semantic.skipped;
    report.dimensional_skipped = !observed_extents.has_value();

    // Level evaluation per model.
    for (std::size_t i : active) {
        const ModelRecord& model = db.at(i);
        MatchFlags flags;
        if (semantic.skipped) {
            flags.semantic = LevelFlag::Skipped;
        } else {
            flags.semantic =
                semantic.contains(model.category) ? LevelFlag::Yes : LevelFlag::No;
        }
        flags.geometric = LevelFlag::No;
        if (observed_descriptor && !model.descriptor_too_sparse) {
            flags.geometric = geometric_match(*observed_descriptor, model.descriptor,
                                              options.qs_min, options.ds_max)
                                  ? LevelFlag::Yes
                                  : LevelFlag::No;
        }
        if (options.ablate == Ablation::Geometric || options.ablate == Ablation::Multilevel) {
            flags.geometric = LevelFlag::Skipped;
        }
        if (observed_extents) {
            flags.dimensional =
                dimensional_match(*observed_extents, model.sorted_extents, options.ss_max)
                    ? LevelFlag::Yes
                    : LevelFlag::No;
        } else {
            flags.dimensional = LevelFlag::Skipped;
        }
        report.models[i].flags = flags;
    }

    // Tier selection over the active set.
    std::vector<MatchFlags> active_flags;
    active_flags.reserve(active.size());
    for (std::size_t i : active) active_flags.push_back(report.models[i].flags);
    std::vector<std::size_t> group_local = select_candidates(active_flags);
    std::vector<std::size_t> group;
    group.reserve(group_local.size());
    for (std::size_t g : group_local) group.push_back(active[g]);
    const bool tier0 = active_flags[group_local.front()].yes_count() == 0;

    // Registration over the selected group. The tier-0 fallback registers
    // everything that survived pre-filtering, capped by coarse quality.
    if (tier0 && group.size() > options.tier0_register_cap) {
        KdTree scene_tree(scene.cloud.points);
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t i : group) {
            // Cheap proxy: extent gap to the observed cloud's bounding box.
            Vec3 lo = scene.cloud.points.front(), hi = lo;
            for (const Vec3& p : scene.cloud.points) {
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
            }
            double gap = 0.0;
            try {
                gap = ss(SortedExtents((hi - lo).cwiseMax(1e-6)), db.at(i).sorted_extents);
            } catch (const Error&) {
                gap = 1e9;
            }
            scored.emplace_back(gap, i);
        }
        std::sort(scored.begin(), scored.end());
        group.clear();
        for (std::size_t k = 0; k < options.tier0_register_cap; ++k) {
            group.push_back(scored[k].second);
        }
        std::sort(group.begin(), group.end());
    }

    std::vector<RegistrationResult> results(group.size());
    std::vector<bool> ok(group.size(), false);
    parallel_for(group.size(), options.jobs, [&](std::size_t k) {
        try {
            results[k] = register_clouds(scene.cloud, db.at(group[k]).complete_cloud,
                                         options.registration);
            ok[k] = true;
        } catch (const Error& e) {
            std::cerr << "match: registration failed for " << db.at(group[k]).id << " ("
                      << e.what() << ")\n";
        }
    });

    std::vector<std::string> ids;
    std::vector<int> tiers;
    std::vector<double> fitness;
    for (std::size_t k = 0; k < group.size(); ++k) {
        const std::size_t i = group[k];
        ModelMatchInfo& info = report.models[i];
        if (!ok[k]) continue;
        info.registered = true;
        info.fitness = results[k].fitness;
        info.inlier_rmse = results[k].inlier_rmse;
        info.method = results[k].method;
        info.transform = results[k].transform;
        ids.push_back(info.model_id);
        tiers.push_back(info.flags.yes_count());
        fitness.push_back(info.fitness);
    }
    report.registered_count = ids.size();
    report.ranking = rank_candidates(ids, tiers, fitness);
    report.match_seconds = seconds_since(start);
    return report;
}

std::string match_report_to_json(const MatchReport& report, const MatchOptions& options) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["thresholds"] = {{"qs_min", options.qs_min},
                         {"ds_max", options.ds_max},
                         {"ss_max", options.ss_max}};
    doc["semantic_skipped"] = report.semantic_skipped;
    doc["dimensional_skipped"] = report.dimensional_skipped;
    doc["prefilter_survivors"] = report.prefilter_survivors;
    doc["registered_count"] = report.registered_count;
    doc["match_seconds"] = report.match_seconds;
    doc["occlusion_ratio"] = report.occlusion_ratio;

    nlohmann::json ranking = nlohmann::json::array();
    for (const CandidateEntry& e : report.ranking) {
        ranking.push_back({{"model_id", e.model_id}, {"tier", e.tier}, {"fitness", e.fitness}});
    }
    doc["ranking"] = ranking;

    nlohmann::json models = nlohmann::json::array();
    for (const ModelMatchInfo& m : report.models) {
        nlohmann::json entry;
        entry["model_id"] = m.model_id;
        entry["prefiltered_out"] = m.prefiltered_out;
        entry["flags"] = {{"semantic", level_flag_name(m.flags.semantic)},
                          {"geometric", level_flag_name(m.flags.geometric)},
                          {"dimensional", level_flag_name(m.flags.dimensional)}};
        entry["tier"] = m.flags.yes_count();
        entry["registered"] = m.registered;
        if (m.registered) {
            entry["fitness"] = m.fitness;
            entry["inlier_rmse"] = m.inlier_rmse;
            entry["method"] = m.method;
            entry["transform"] = transform_to_json(m.transform);
        }
        models.push_back(entry);
    }
    doc["models"] = models;
    return doc.dump(2);
}

PlanReport plan_scene(const ObservedScene& scene, const Database& db,
                      const PlanOptions& options) {
    const auto start = Clock::now();
    if (db.size() == 0) throw NoFeasibleGrasp("empty database");
    PlanReport report;
    report.match = match_scene(scene, db, options.match);
    if (report.match.ranking.empty()) {
        report.plan_seconds = seconds_since(start);
        throw NoFeasibleGrasp("no registered candidates");
    }

    SupportPlane support{scene.support_point, scene.support_normal};
    std::optional<Sobb> observed_box;
    try {
        observed_box = build_sobb(scene.cloud, scene.support_normal);
    } catch (const Error&) {
        // Without a box the center stage is skipped.
    }
    KdTree scene_tree(scene.cloud.points);

    std::optional<Grasp> first_potential;
    const std::size_t candidate_limit =
        std::min(options.max_candidates, report.match.ranking.size());
    for (std::size_t rank = 0; rank < candidate_limit; ++rank) {
        const CandidateEntry& entry = report.match.ranking[rank];
        const ModelRecord* model = db.find(entry.model_id);
        const ModelMatchInfo* info = report.match.info(entry.model_id);
        if (!model || !info || model->grasps.empty()) continue;

        VerdictCounts counts;
        RegistrationResult reg;
        reg.transform = info->transform;
        reg.fitness = info->fitness;
        const std::vector<Grasp> imitative = transfer_grasps(model->grasps, reg);
        std::vector<Grasp> feasible = filter_feasible(imitative, scene.cloud, support,
                                                      options.gripper, options.reachable);
        if (feasible.size() > options.max_grasps_per_candidate) {
            feasible.resize(options.max_grasps_per_candidate);
        }

        // Applies the center stage, then re-checks feasibility and stability;
        // an adjusted grasp that breaks either is discarded entirely.
        auto finalize = [&](Grasp candidate,
                            const std::vector<std::size_t>& contacts) -> std::optional<Grasp> {
            Grasp adjusted = candidate;
            if (options.enable_finetune && observed_box) {
                adjusted = finetune_center(candidate, *observed_box, contacts, &scene.cloud);
            }
            const std::vector<Grasp> recheck =
                filter_feasible({adjusted}, scene.cloud, support, options.gripper,
                                options.reachable);
            if (recheck.empty()) return std::nullopt;
            const auto final_contacts = stick_contacts(
                adjusted, scene.cloud, scene_tree, options.gripper.contact_radius);
            if (classify(final_contacts, scene.cloud, adjusted, options.finetune) !=
                GraspVerdict::Stable) {
                return std::nullopt;
            }
            return adjusted;
        };

        for (const Grasp& grasp : feasible) {
            const auto contacts =
                stick_contacts(grasp, scene.cloud, scene_tree, options.gripper.contact_radius);
            const GraspVerdict verdict =
                classify(contacts, scene.cloud, grasp, options.finetune);
            switch (verdict) {
                case GraspVerdict::Stable: {
                    ++counts.stable;
                    if (auto chosen = finalize(grasp, contacts)) {
                        report.grasp = *chosen;
                        report.verdict = GraspVerdict::Stable;
                        report.per_candidate.emplace_back(entry.model_id, counts);
                        report.plan_seconds = seconds_since(start);
                        return report;
                    }
                    break;
                }
                case GraspVerdict::Tunable: {
                    ++counts.tunable;
                    if (!options.enable_finetune) break;
                    // Deterministic reference contact: the one with larger theta.
                    std::size_t reference = contacts.front();
                    double worst = -1.0;
                    for (std::size_t c : contacts) {
                        const double theta =
                            rad2deg(acute_angle(scene.cloud.normals[c], grasp.closing_axis()));
                        if (theta > worst) {
                            worst = theta;
                            reference = c;
                        }
                    }
                    const auto tuned = finetune_position(grasp, reference, scene.cloud,
                                                         options.finetune, options.gripper);
                    if (tuned && tuned->verdict == GraspVerdict::Stable) {
                        ++counts.tuned_stable;
                        if (auto chosen = finalize(tuned->grasp, tuned->contacts)) {
                            report.grasp = *chosen;
                            report.verdict = GraspVerdict::Stable;
                            report.per_candidate.emplace_back(entry.model_id, counts);
                            report.plan_seconds = seconds_since(start);
                            return report;
                        }
                    }
                    break;
                }
                case GraspVerdict::Unstable:
                    ++counts.unstable;
                    break;
                case GraspVerdict::Potential:
                    ++counts.potential;
                    if (!first_potential) first_potential = grasp;
                    break;
            }
        }
        report.per_candidate.emplace_back(entry.model_id, counts);
    }

    if (first_potential) {
        report.grasp = *first_potential;
        report.verdict = GraspVerdict::Potential;
        report.used_potential = true;
        report.plan_seconds = seconds_since(start);
        return report;
    }
    report.plan_seconds = seconds_since(start);
    throw NoFeasibleGrasp("all candidates exhausted without a stable grasp");
}

std::string plan_report_to_json(const PlanReport& report) {
    nlohmann::json doc;
    doc["version"] = 1;
    if (report.grasp) {
        doc["grasp"] = {{"pose", transform_to_json(report.grasp->pose)},
                        {"width", report.grasp->width},
                        {"source_model", report.grasp->source_model}};
    } else {
        doc["grasp"] = nullptr;
    }
    doc["verdict"] = verdict_name(report.verdict);
    doc["used_potential"] = report.used_potential;
    doc["plan_seconds"] = report.plan_seconds;
    doc["match_seconds"] = report.match.match_seconds;

    nlohmann::json ranking = nlohmann::json::array();
    for (const CandidateEntry& e : report.match.ranking) {
        ranking.push_back({{"model_id", e.model_id}, {"tier", e.tier}, {"fitness", e.fitness}});
    }
    doc["ranking"] = ranking;

    nlohmann::json trail = nlohmann::json::array();
    for (const auto& [id, counts] : report.per_candidate) {
        trail.push_back({{"model_id", id},
                         {"stable", counts.stable},
                         {"tunable", counts.tunable},
                         {"unstable", counts.unstable},
                         {"potential", counts.potential},
                         {"tuned_stable", counts.tuned_stable}});
    }
    doc["verdict_trail"] = trail;
    return doc.dump(2);
}

SuiteMetrics run_match_suite(const std::vector<SuiteScene>& scenes, const Database& db,
                             const MatchOptions& options, const std::vector<int>& xs) {
    SuiteMetrics metrics;
    metrics.trials = scenes.size();
    for (int x : xs) metrics.top_x_hits[x] = 0;
    double registered = 0.0;
    for (const SuiteScene& s : scenes) {
        const MatchReport report = match_scene(s.scene, db, options);
        const std::size_t rank = report.rank_of(s.truth_id);
        for (int x : xs) {
            if (rank >= 1 && rank <= static_cast<std::size_t>(x)) metrics.top_x_hits[x] += 1;
        }
        metrics.total_match_seconds += report.match_seconds;
        registered += static_cast<double>(report.registered_count);
    }
    if (!scenes.empty()) {
        metrics.mean_match_seconds = metrics.total_match_seconds / scenes.size();
        metrics.mean_registered = registered / scenes.size();
    }
    return metrics;
}

}  // namespace simgrasp
