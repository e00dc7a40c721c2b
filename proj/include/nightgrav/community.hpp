#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nightgrav/gravity.hpp"

namespace nightgrav {

/// Node-to-community labeling for one yearly snapshot. Community ids are
/// contiguous from 0; `modularity` is the standard (resolution 1) score of
/// the assignment.
struct CommunityPartition {
    std::string label;  ///< snapshot label, typically the year
    std::vector<std::uint32_t> assignment;
    double modularity = 0.0;

    std::size_t community_count() const;
    void validate(std::size_t node_count) const;
};

enum class TransitionKind { kContinue, kMerge, kSplit, kAppear, kDisappear };

struct TransitionEvent {
    TransitionKind kind = TransitionKind::kContinue;
    std::vector<std::uint32_t> sources;  ///< year-t community ids
    std::vector<std::uint32_t> targets;  ///< year-t+1 community ids
    /// One |A intersect B| / |A| fraction per (source, target) pairing in the
    /// event; empty for disappear/appear.
    std::vector<double> overlaps;
};

struct TransitionReport {
    std::vector<TransitionEvent> events;

    std::size_t count(TransitionKind kind) const;
};

/// Weighted modularity of an assignment. The null-model term follows the
/// standard convention of summing over all ordered node pairs including the
/// diagonal; self-edges do not exist so they contribute no weight. The
/// resolution parameter scales the null-model term.
double modularity(const GravityNetwork& net, std::span<const std::uint32_t> assignment,
                  double resolution = 1.0);

/// Greedy modularity maximization: repeated single-node local moves in
/// node-id order followed by community aggregation, until no move improves
/// the score. Deterministic: ties are broken toward the lowest community id,
/// and the seed only labels the run (the sweep order is fixed), so equal
/// seeds trivially reproduce.
CommunityPartition detect_communities(const GravityNetwork& net, double resolution = 1.0,
                                      std::uint64_t seed = 0, const std::string& label = "");

/// Classify how year-t communities map onto year-t+1 communities using the
/// row-normalized overlap matrix and a minimum overlap fraction.
TransitionReport track_communities(const CommunityPartition& part_t,
                                   const CommunityPartition& part_t1,
                                   double overlap_threshold = 0.3);

/// Partition CSV `node_id,community_id`.
void write_partition_csv(const std::filesystem::path& path, const CommunityPartition& part);
CommunityPartition read_partition_csv(const std::filesystem::path& path,
                                      const std::string& label = "");

/// Transition CSV `kind,src_ids,dst_ids,overlaps` (`;`-separated lists).
void write_transition_csv(const std::filesystem::path& path, const TransitionReport& report);
/// Human-readable event table.
std::string transition_table(const TransitionReport& report);

/// GeoJSON FeatureCollection of cell polygons with node_id / community_id
/// properties, for map rendering.
void write_community_geojson(const std::filesystem::path& path, const CoarseGrid& grid,
                             const CommunityPartition& part);

std::string transition_kind_name(TransitionKind kind);

}  // namespace nightgrav
