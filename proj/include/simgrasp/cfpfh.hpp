#pragma once

#include "simgrasp/fpfh.hpp"
#include "simgrasp/point_cloud.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace simgrasp {

/// Unordered pair of the two most dominant FPFH bin indices at a sample.
struct FeaturePair {
    int a = 0;  // always a < b
    int b = 1;

    FeaturePair() = default;
    FeaturePair(int first, int second);

    bool operator==(const FeaturePair& o) const { return a == o.a && b == o.b; }
    bool operator<(const FeaturePair& o) const { return a < o.a || (a == o.a && b < o.b); }
};

/// Picks the unordered pair of the two largest bins; ties go to the lower bin
/// index. Throws DegenerateHistogram when fewer than 2 bins are nonzero.
FeaturePair dominant_pair(const FpfhHistogram& histogram);

/// One group of connected samples sharing a feature pair and similar normals.
struct Cluster {
    std::vector<std::size_t> member_indices;  // indices into the sampled cloud
    FeaturePair pair;
    /// L1-normalized descending covariance eigenvalues; present iff >= 3 members.
    std::optional<Vec3> distribution;
};

struct DescriptorParams {
    double sample_voxel = 0.015;
    double fpfh_radius = 0.01;
    double cluster_radius = 0.02;
    double normal_angle_max_deg = 20.0;
    double boundary_radius_factor = 2.0;  // boundary test radius = factor * sample_voxel

    void validate() const;
    bool operator==(const DescriptorParams& o) const;
};

/// Aggregated feature-pair counts plus per-pair cluster shape distributions.
struct CfpfhDescriptor {
    std::map<FeaturePair, int> pair_counts;
    std::map<FeaturePair, std::vector<Vec3>> pair_distributions;
    std::optional<FeaturePair> main_pair;
    std::optional<Vec3> main_distribution;
    int sample_count = 0;
};

/// Flood-fill clustering of sampled points: a neighbor within cluster_radius
/// joins when it carries the same feature pair and its normal deviates by at
/// most normal_angle_max_deg. Every sample lands in exactly one cluster.
std::vector<Cluster> cluster_samples(const PointCloud& samples,
                                     const std::vector<FeaturePair>& pairs,
                                     const DescriptorParams& params);

/// Builds the descriptor: voxel sampling (grid anchored to the cloud's
/// principal frame so the result is pose-independent), boundary-sample
/// removal, per-sample dominant pairs, then connected-cluster shape analysis.
/// Throws TooSparse when fewer than 3 samples survive.
CfpfhDescriptor build_cfpfh(const PointCloud& cloud,
                            const DescriptorParams& params = DescriptorParams());

/// Occurrence-coverage ratio of p's feature pairs in c, in [0, 1].
double qs(const CfpfhDescriptor& p, const CfpfhDescriptor& c);

/// Minimum distance between p's main cluster distribution and c's cluster
/// distributions of the same pair. Empty when either side lacks the data.
std::optional<double> ds(const CfpfhDescriptor& p, const CfpfhDescriptor& c);

/// True iff QS > qs_min and DS < ds_max (missing DS fails the match).
bool geometric_match(const CfpfhDescriptor& p, const CfpfhDescriptor& c,
                     double qs_min = 0.9, double ds_max = 0.1);

/// Versioned JSON round-trip; counts exact, floats preserved to 1e-12.
std::string descriptor_to_json(const CfpfhDescriptor& d);
CfpfhDescriptor descriptor_from_json(const std::string& text);

}  // namespace simgrasp
