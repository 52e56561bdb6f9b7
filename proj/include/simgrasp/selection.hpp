#pragma once

#include "simgrasp/core.hpp"

#include <string>
#include <vector>

namespace simgrasp {

enum class LevelFlag { Yes, No, Skipped };

/// Per-model outcome of the three matching levels. Skipped levels shrink the
/// denominator instead of counting as misses.
struct MatchFlags {
    LevelFlag semantic = LevelFlag::Skipped;
    LevelFlag geometric = LevelFlag::No;  // geometric is never skipped
    LevelFlag dimensional = LevelFlag::Skipped;

    int yes_count() const;
    int available_count() const;
};

struct CandidateEntry {
    std::string model_id;
    int tier = 0;        // count of matched levels, 0..3
    double fitness = 0.0;
};

using CandidateList = std::vector<CandidateEntry>;

/// Groups models by matched-level count and returns the members of the
/// highest non-empty tier; when nothing matches anywhere, every model comes
/// back (tier 0). `flags` is parallel to `model_ids`.
std::vector<std::size_t> select_candidates(const std::vector<MatchFlags>& flags);

/// Point-count band pre-filter: keeps models with
/// alpha * observed_count < model_count < beta * observed_count.
/// Counts must come from the same voxel resolution. Returns kept indices.
std::vector<std::size_t> prefilter_count(std::size_t observed_count,
                                         const std::vector<std::size_t>& model_counts,
                                         double alpha = 0.5, double beta = 5.0);

/// Orders one tier's members by fitness (descending), ties by model id.
CandidateList rank_candidates(const std::vector<std::string>& model_ids,
                              const std::vector<int>& tiers,
                              const std::vector<double>& fitness);

const char* level_flag_name(LevelFlag flag);

}  // namespace simgrasp
