#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nightgrav/raster.hpp"

namespace nightgrav {

/// Parameters of the gravity construction: weight W(i,j) = M_i * M_j / R^P,
/// followed by K-tau sparsification (drop edges below tau, then reconnect
/// under-connected nodes to their k_rewire nearest neighbors).
struct GravityParams {
    double exponent = 1.0;      ///< P
    double tau = 0.0;           ///< weight threshold
    std::uint32_t k_rewire = 1; ///< minimum-degree parameter K

    void validate(std::size_t node_count) const;
};

struct GravityNode {
    std::uint32_t node_id = 0;
    double lon = 0.0;
    double lat = 0.0;
    double log_intensity = 0.0;
};

struct GravityEdge {
    std::uint32_t src = 0;  ///< always < dst
    std::uint32_t dst = 0;
    double weight = 0.0;
    bool rewired = false;
};

/// Symmetric pairwise matrix with the diagonal excluded (upper triangle
/// packed storage).
class PairwiseMatrix {
public:
    PairwiseMatrix() = default;
    explicit PairwiseMatrix(std::size_t n) : n_(n), data_(n * (n - 1) / 2, 0.0) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }
    void set(std::size_t i, std::size_t j, double v) { data_[index(i, j)] = v; }

private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Undirected weighted graph over the coarse-grid nodes. Immutable after
/// construction; adjacency is stored in CSR form with neighbor lists sorted
/// by node id.
class GravityNetwork {
public:
    GravityNetwork(std::vector<GravityNode> nodes, std::vector<GravityEdge> edges);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<GravityNode>& nodes() const { return nodes_; }
    const std::vector<GravityEdge>& edges() const { return edges_; }

    std::size_t degree(std::uint32_t v) const { return offsets_[v + 1] - offsets_[v]; }
    std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
        return {adj_ids_.data() + offsets_[v], degree(v)};
    }
    std::span<const double> neighbor_weights(std::uint32_t v) const {
        return {adj_weights_.data() + offsets_[v], degree(v)};
    }
    bool has_edge(std::uint32_t u, std::uint32_t v) const;
    /// Sum of incident edge weights.
    double weighted_degree(std::uint32_t v) const { return weighted_degree_[v]; }
    /// Sum of all edge weights (m).
    double total_weight() const { return total_weight_; }

private:
    std::vector<GravityNode> nodes_;
    std::vector<GravityEdge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> adj_ids_;
    std::vector<double> adj_weights_;
    std::vector<double> weighted_degree_;
    double total_weight_ = 0.0;
};

/// Pairwise center distances divided by the maximum pairwise distance, so
/// every entry lies in (0, 1]. Throws if all centers coincide.
PairwiseMatrix normalized_distance(const CoarseGrid& grid);

/// W = M_i * M_j / R^P. R must be in (0, 1].
double gravity_weight(double log_intensity_i, double log_intensity_j, double normalized_dist,
                      double exponent);

/// Full construction: all-pairs gravity weights, tau thresholding, then
/// K-nearest-neighbor rewiring of under-connected nodes (nearest by center
/// distance, ties to the lower node id; rewired edges keep their gravity
/// weight even when below tau).
GravityNetwork build_gravity_network(const CoarseGrid& grid, const GravityParams& params);

/// Edge-list TSV: header `src\tdst\tweight\trewired`, src < dst.
void write_edge_tsv(const std::filesystem::path& path, const GravityNetwork& net);
/// Rebuild a network from a node table grid plus an edge TSV.
GravityNetwork read_edge_tsv(const std::filesystem::path& path, const CoarseGrid& grid);

}  // namespace nightgrav
