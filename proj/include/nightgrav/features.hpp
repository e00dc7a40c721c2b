#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nightgrav/raster.hpp"
#include "nightgrav/walks.hpp"

namespace nightgrav {

/// Which per-cell value substitutes for a node id in an intensity walk.
enum class IntensityKind {
    kLogIntensity,  ///< M = log(I + 1), the default
    kRawIntensity   ///< I, for sensitivity runs
};

struct FeatureOptions {
    IntensityKind kind = IntensityKind::kLogIntensity;
    /// Also emit the origin intensity as a leading step_0 column.
    bool include_origin = false;
};

/// Per-node feature rows: entry (k, i) is the mean intensity observed at
/// step i over all walks that start at node k. Columns are steps 1..L
/// (plus a leading origin column when requested).
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::uint32_t n_nodes, std::uint32_t n_steps, bool includes_origin)
        : n_nodes_(n_nodes),
          n_steps_(n_steps),
          includes_origin_(includes_origin),
          values_(static_cast<std::size_t>(n_nodes) * n_steps, 0.0) {}

    std::uint32_t node_count() const { return n_nodes_; }
    /// Number of columns.
    std::uint32_t step_count() const { return n_steps_; }
    bool includes_origin() const { return includes_origin_; }

    std::span<double> row(std::uint32_t node) {
        return {values_.data() + static_cast<std::size_t>(node) * n_steps_, n_steps_};
    }
    std::span<const double> row(std::uint32_t node) const {
        return {values_.data() + static_cast<std::size_t>(node) * n_steps_, n_steps_};
    }
    double at(std::uint32_t node, std::uint32_t col) const {
        return values_[static_cast<std::size_t>(node) * n_steps_ + col];
    }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::uint32_t n_nodes_ = 0;
    std::uint32_t n_steps_ = 0;
    bool includes_origin_ = false;
    std::vector<double> values_;
};

/// Replace each node id in each walk by that cell's intensity, positionally.
std::vector<std::vector<double>> intensity_walks(const WalkSet& walks, const CoarseGrid& grid,
                                                 IntensityKind kind = IntensityKind::kLogIntensity);

/// Monte Carlo step expectations: entry (k, i) is the mean over the node's
/// walks of the intensity at step i.
FeatureMatrix step_expectation_features(const WalkSet& walks, const CoarseGrid& grid,
                                        const FeatureOptions& options = {});

/// CSV `node_id,step_1,...,step_L` (step_0 first when origin included).
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace nightgrav
