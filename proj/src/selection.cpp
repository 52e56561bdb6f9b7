#include "simgrasp/selection.hpp"

#include <algorithm>

namespace simgrasp {

int MatchFlags::yes_count() const {
    int n = 0;
    n += semantic == LevelFlag::Yes;
    n += geometric == LevelFlag::Yes;
    n += dimensional == LevelFlag::Yes;
    return n;
}

int MatchFlags::available_count() const {
    int n = 0;
    n += semantic != LevelFlag::Skipped;
    n += geometric != LevelFlag::Skipped;
    n += dimensional != LevelFlag::Skipped;
    return n;
}

std::vector<std::size_t> select_candidates(const std::vector<MatchFlags>& flags) {
    if (flags.empty()) throw InvalidInput("select_candidates: no models");
    int best_tier = 0;
    for (const MatchFlags& f : flags) best_tier = std::max(best_tier, f.yes_count());

    std::vector<std::size_t> group;
    if (best_tier == 0) {
        group.resize(flags.size());
        for (std::size_t i = 0; i < flags.size(); ++i) group[i] = i;
        return group;
    }
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i].yes_count() == best_tier) group.push_back(i);
    }
    return group;
}

std::vector<std::size_t> prefilter_count(std::size_t observed_count,
                                         const std::vector<std::size_t>& model_counts,
                                         double alpha, double beta) {
    if (observed_count == 0) throw InvalidInput("prefilter_count: observed count is zero");
    std::vector<std::size_t> kept;
    const double np = static_cast<double>(observed_count);
    for (std::size_t i = 0; i < model_counts.size(); ++i) {
        const double nc = static_cast<double>(model_counts[i]);
        if (alpha * np < nc && nc < beta * np) kept.push_back(i);
    }
    return kept;
}

CandidateList rank_candidates(const std::vector<std::string>& model_ids,
                              const std::vector<int>& tiers,
                              const std::vector<double>& fitness) {
    if (model_ids.size() != tiers.size() || model_ids.size() != fitness.size()) {
        throw InvalidInput("rank_candidates: parallel arrays expected");
    }
    CandidateList list;
    list.reserve(model_ids.size());
    for (std::size_t i = 0; i < model_ids.size(); ++i) {
        list.push_back({model_ids[i], tiers[i], fitness[i]});
    }
    std::sort(list.begin(), list.end(), [](const CandidateEntry& a, const CandidateEntry& b) {
        if (a.tier != b.tier) return a.tier > b.tier;
        if (a.fitness != b.fitness) return a.fitness > b.fitness;
        return a.model_id < b.model_id;
    });
    return list;
}

const char* level_flag_name(LevelFlag flag) {
    switch (flag) {
        case LevelFlag::Yes: return "yes";
        case LevelFlag::No: return "no";
        case LevelFlag::Skipped: return "skipped";
    }
    return "no";
}

}  // namespace simgrasp
