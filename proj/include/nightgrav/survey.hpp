#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nightgrav/features.hpp"
#include "nightgrav/raster.hpp"

namespace nightgrav {

struct SurveySample {
    double lon = 0.0;
    double lat = 0.0;
    double consumption = 0.0;
    int year = 0;  ///< 0 when the optional column is absent
};

struct SurveyLoadResult {
    std::vector<SurveySample> samples;
    std::size_t dropped = 0;  ///< rows removed by cleaning
};

/// A binned group of households sharing a coordinate lattice point.
struct HouseholdCluster {
    std::uint32_t cluster_id = 0;
    double lon = 0.0;          ///< mean of member coordinates
    double lat = 0.0;
    double consumption = 0.0;  ///< mean of member consumptions
    std::uint32_t member_count = 0;
};

struct JoinedSample {
    std::uint32_t cluster_id = 0;
    std::uint32_t node_id = 0;
    double target = 0.0;
};

struct JoinResult {
    std::vector<JoinedSample> samples;
    std::size_t dropped = 0;  ///< clusters with no node within the radius
};

struct JoinOptions {
    double radius = 0.25;     ///< Manhattan degrees
    bool log_target = false;  ///< regress on log(1 + consumption)
};

/// CSV `lon,lat,consumption[,year]`. Rows with missing or negative
/// consumption or non-finite coordinates are dropped and counted.
SurveyLoadResult load_survey_csv(const std::filesystem::path& path);

/// Samples whose coordinates round to the same lattice point at
/// bin_precision degrees form one cluster. Cluster ids are assigned in
/// lattice order, so the result does not depend on input order.
std::vector<HouseholdCluster> bin_households(std::span<const SurveySample> samples,
                                             double bin_precision);

/// Each cluster joins the node with the smallest Manhattan distance
/// |dlon| + |dlat| among nodes within `radius`; distance ties (within 1e-12)
/// go to the lower node id. Clusters with no node in radius are dropped.
JoinResult join_to_nodes(std::span<const HouseholdCluster> clusters, const CoarseGrid& grid,
                         const FeatureMatrix& features, const JoinOptions& options = {});

/// Joined dataset CSV: `cluster_id,node_id,target,step_1..step_L`.
void write_joined_csv(const std::filesystem::path& path, std::span<const JoinedSample> samples,
                      const FeatureMatrix& features);

}  // namespace nightgrav
