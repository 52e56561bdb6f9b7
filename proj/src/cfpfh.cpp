#include "simgrasp/cfpfh.hpp"

#include "simgrasp/cloud_ops.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace simgrasp {

FeaturePair::FeaturePair(int first, int second) {
    if (first == second) throw InvalidInput("feature pair indices must differ");
    a = std::min(first, second);
    b = std::max(first, second);
    if (a < 0 || b >= kFpfhBins) throw InvalidInput("feature pair index out of range");
}

FeaturePair dominant_pair(const FpfhHistogram& histogram) {
    // Flat-face geometry produces exactly tied bins whose float images differ
    // only by rounding noise; quantizing keeps the index tie-break in charge.
    // Histograms are normalized, so 1e-9 sits far below any real signal.
    auto quantized = [&](int i) {
        return static_cast<long long>(std::llround(histogram[i] * 1e9));
    };
    int first = -1, second = -1;
    for (int i = 0; i < kFpfhBins; ++i) {
        if (histogram[i] <= 0.0) continue;
        if (first < 0 || quantized(i) > quantized(first)) {
            second = first;
            first = i;
        } else if (second < 0 || quantized(i) > quantized(second)) {
            second = i;
        }
    }
    if (second < 0) {
        throw DegenerateHistogram("histogram has fewer than 2 nonzero bins");
    }
    return FeaturePair(first, second);
}

void DescriptorParams::validate() const {
    if (sample_voxel <= 0.0 || fpfh_radius <= 0.0 || cluster_radius <= 0.0 ||
        normal_angle_max_deg <= 0.0) {
        throw InvalidInput("descriptor params must be positive");
    }
    if (cluster_radius <= sample_voxel) {
        throw InvalidInput("cluster_radius must exceed sample_voxel");
    }
}

bool DescriptorParams::operator==(const DescriptorParams& o) const {
    return sample_voxel == o.sample_voxel && fpfh_radius == o.fpfh_radius &&
           cluster_radius == o.cluster_radius &&
           normal_angle_max_deg == o.normal_angle_max_deg &&
           boundary_radius_factor == o.boundary_radius_factor;
}

std::vector<Cluster> cluster_samples(const PointCloud& samples,
                                     const std::vector<FeaturePair>& pairs,
                                     const DescriptorParams& params) {
    if (pairs.size() != samples.size()) {
        throw InvalidInput("cluster_samples: pairs must parallel samples");
    }
    const double angle_max = deg2rad(params.normal_angle_max_deg);
    KdTree tree(samples.points);

    std::vector<Cluster> clusters;
    std::vector<bool> assigned(samples.size(), false);
    for (std::size_t seed = 0; seed < samples.size(); ++seed) {
        if (assigned[seed]) continue;
        Cluster cluster;
        cluster.pair = pairs[seed];
        std::deque<std::size_t> frontier{seed};
        assigned[seed] = true;
        while (!frontier.empty()) {
            const std::size_t cur = frontier.front();
            frontier.pop_front();
            cluster.member_indices.push_back(cur);
            for (std::size_t j : tree.radius(samples.points[cur], params.cluster_radius)) {
                if (assigned[j] || !(pairs[j] == cluster.pair)) continue;
                if (vector_angle(samples.normals[cur], samples.normals[j]) > angle_max) continue;
                assigned[j] = true;
                frontier.push_back(j);
            }
        }
        std::sort(cluster.member_indices.begin(), cluster.member_indices.end());
        if (cluster.member_indices.size() >= 3) {
            std::vector<Vec3> pts;
            pts.reserve(cluster.member_indices.size());
            for (std::size_t i : cluster.member_indices) pts.push_back(samples.points[i]);
            const Vec3 sv = pca3(pts).singular_values;
            const double total = sv.sum();
            if (total > 0.0) cluster.distribution = Vec3(sv / total);
        }
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

namespace {

/// Principal frame of a cloud with moment-fixed axis signs. Rotating the
/// cloud rotates this frame with it, which makes the voxel sampling grid in
/// build_cfpfh independent of the cloud's pose.
Mat3 principal_frame(const PointCloud& cloud, const Vec3& mean) {
    const PcaTriple pca = pca3(cloud.points);
    Mat3 axes = pca.axes;
    for (int k = 0; k < 2; ++k) {
        double third_moment = 0.0;
        for (const Vec3& p : cloud.points) {
            const double t = (p - mean).dot(axes.col(k));
            third_moment += t * t * t;
        }
        if (third_moment < 0.0) axes.col(k) = -axes.col(k);
    }
    axes.col(2) = axes.col(0).cross(axes.col(1));
    return axes;
}

}  // namespace

CfpfhDescriptor build_cfpfh(const PointCloud& cloud, const DescriptorParams& params) {
    params.validate();
    if (!cloud.has_normals()) throw InvalidInput("build_cfpfh: normals required");
    if (cloud.size() < 3) throw TooSparse("build_cfpfh: cloud too small");

    // Sample in the principal frame, then map the chosen indices back.
    const Vec3 mean = cloud.centroid();
    const Mat3 frame = principal_frame(cloud, mean);
    PointCloud canonical;
    canonical.points.reserve(cloud.size());
    for (const Vec3& p : cloud.points) {
        canonical.points.push_back(frame.transpose() * (p - mean));
    }
    std::vector<std::size_t> sample_indices =
        voxel_downsample_indices(canonical, params.sample_voxel);

    // Boundary samples carry unreliable normals near unseen regions.
    PointCloud samples = cloud.select(sample_indices);
    const std::vector<bool> boundary = detect_boundary(
        samples, params.boundary_radius_factor * params.sample_voxel);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < sample_indices.size(); ++i) {
        if (!boundary[i]) kept.push_back(sample_indices[i]);
    }

    KdTree full_tree(cloud.points);
    CfpfhDescriptor out;
    PointCloud surviving;
    std::vector<FeaturePair> pairs;
    for (std::size_t idx : kept) {
        const FpfhHistogram hist = fpfh(cloud, full_tree, idx, params.fpfh_radius);
        FeaturePair pair;
        try {
            pair = dominant_pair(hist);
        } catch (const DegenerateHistogram&) {
            continue;  // isolated sample, drop it
        }
        surviving.points.push_back(cloud.points[idx]);
        surviving.normals.push_back(cloud.normals[idx]);
        pairs.push_back(pair);
        out.pair_counts[pair] += 1;
    }
    if (surviving.size() < 3) {
        throw TooSparse("build_cfpfh: fewer than 3 surviving samples");
    }
    out.sample_count = static_cast<int>(surviving.size());

    const std::vector<Cluster> clusters = cluster_samples(surviving, pairs, params);
    std::map<FeaturePair, std::size_t> best_cluster_size;
    std::map<FeaturePair, Vec3> best_cluster_dist;
    for (const Cluster& cluster : clusters) {
        if (!cluster.distribution) continue;
        out.pair_distributions[cluster.pair].push_back(*cluster.distribution);
        auto it = best_cluster_size.find(cluster.pair);
        if (it == best_cluster_size.end() || cluster.member_indices.size() > it->second) {
            best_cluster_size[cluster.pair] = cluster.member_indices.size();
            best_cluster_dist[cluster.pair] = *cluster.distribution;
        }
    }

    // Pairs by descending frequency, ties toward the smaller pair.
    std::vector<std::pair<FeaturePair, int>> ranked(out.pair_counts.begin(),
                                                    out.pair_counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    out.main_pair = ranked.front().first;
    // The most frequent pair may lack a cluster of 3+ points; in that case the
    // runner-up gets one chance before the distribution is declared absent.
    for (std::size_t r = 0; r < std::min<std::size_t>(2, ranked.size()); ++r) {
        auto it = best_cluster_dist.find(ranked[r].first);
        if (it != best_cluster_dist.end()) {
            out.main_pair = ranked[r].first;
            out.main_distribution = it->second;
            break;
        }
    }
    return out;
}

double qs(const CfpfhDescriptor& p, const CfpfhDescriptor& c) {
    if (p.sample_count <= 0) throw InvalidInput("qs: empty partial descriptor");
    long long covered = 0, total = 0;
    for (const auto& [pair, pn] : p.pair_counts) {
        total += pn;
        auto it = c.pair_counts.find(pair);
        const int cn = it == c.pair_counts.end() ? 0 : it->second;
        covered += std::min(pn, cn);
    }
    return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

std::optional<double> ds(const CfpfhDescriptor& p, const CfpfhDescriptor& c) {
    if (!p.main_pair || !p.main_distribution) return std::nullopt;
    auto it = c.pair_distributions.find(*p.main_pair);
    if (it == c.pair_distributions.end() || it->second.empty()) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& d : it->second) {
        best = std::min(best, (*p.main_distribution - d).norm());
    }
    return best;
}

bool geometric_match(const CfpfhDescriptor& p, const CfpfhDescriptor& c,
                     double qs_min, double ds_max) {
    if (qs(p, c) <= qs_min) return false;
    const auto d = ds(p, c);
    return d.has_value() && *d < ds_max;
}

namespace {

nlohmann::json vec3_to_json(const Vec3& v) {
    return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

std::string descriptor_to_json(const CfpfhDescriptor& d) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["sample_count"] = d.sample_count;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [pair, count] : d.pair_counts) {
        nlohmann::json entry;
        entry["a"] = pair.a;
        entry["b"] = pair.b;
        entry["count"] = count;
        nlohmann::json dists = nlohmann::json::array();
        auto it = d.pair_distributions.find(pair);
        if (it != d.pair_distributions.end()) {
            for (const Vec3& v : it->second) dists.push_back(vec3_to_json(v));
        }
        entry["distributions"] = dists;
        pairs.push_back(entry);
    }
    doc["pairs"] = pairs;
    doc["main_pair"] = d.main_pair
                           ? nlohmann::json::array({d.main_pair->a, d.main_pair->b})
                           : nlohmann::json();
    doc["main_distribution"] =
        d.main_distribution ? vec3_to_json(*d.main_distribution) : nlohmann::json();
    return doc.dump(2);
}

CfpfhDescriptor descriptor_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("descriptor JSON parse error: ") + e.what());
    }
    if (doc.value("version", 0) != 1) throw IoError("unsupported descriptor version");

    CfpfhDescriptor d;
    d.sample_count = doc.at("sample_count").get<int>();
    for (const auto& entry : doc.at("pairs")) {
        const FeaturePair pair(entry.at("a").get<int>(), entry.at("b").get<int>());
        d.pair_counts[pair] = entry.at("count").get<int>();
        for (const auto& dist : entry.at("distributions")) {
            d.pair_distributions[pair].push_back(vec3_from_json(dist));
        }
    }
    if (!doc.at("main_pair").is_null()) {
        const auto& mp = doc.at("main_pair");
        d.main_pair = FeaturePair(mp.at(0).get<int>(), mp.at(1).get<int>());
    }
    if (!doc.at("main_distribution").is_null()) {
        d.main_distribution = vec3_from_json(doc.at("main_distribution"));
    }
    return d;
}

}  // namespace simgrasp
