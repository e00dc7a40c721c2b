#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nightgrav/gravity.hpp"

namespace nightgrav {

/// Second-order walk parameters. return_param (p) rescales the probability of
/// stepping back to the previous node, inout_param (q) rescales steps to
/// nodes not adjacent to it.
struct WalkParams {
    double return_param = 1.0;       ///< p
    double inout_param = 0.5;        ///< q
    std::uint32_t walk_length = 20;  ///< L, steps after the origin
    std::uint32_t walks_per_node = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

/// walks_per_node walks of walk_length steps from every node. Each stored
/// walk has walk_length + 1 entries: the origin plus L steps.
class WalkSet {
public:
    WalkSet(std::uint32_t n_nodes, std::uint32_t walks_per_node, std::uint32_t walk_length)
        : n_nodes_(n_nodes),
          walks_per_node_(walks_per_node),
          walk_length_(walk_length),
          data_(static_cast<std::size_t>(n_nodes) * walks_per_node * (walk_length + 1), 0) {}

    std::uint32_t node_count() const { return n_nodes_; }
    std::uint32_t walks_per_node() const { return walks_per_node_; }
    std::uint32_t walk_length() const { return walk_length_; }

    std::span<std::uint32_t> walk(std::uint32_t node, std::uint32_t w) {
        return {data_.data() + offset(node, w), walk_length_ + 1u};
    }
    std::span<const std::uint32_t> walk(std::uint32_t node, std::uint32_t w) const {
        return {data_.data() + offset(node, w), walk_length_ + 1u};
    }

    bool operator==(const WalkSet&) const = default;

private:
    std::size_t offset(std::uint32_t node, std::uint32_t w) const {
        return (static_cast<std::size_t>(node) * walks_per_node_ + w) * (walk_length_ + 1u);
    }

    std::uint32_t n_nodes_;
    std::uint32_t walks_per_node_;
    std::uint32_t walk_length_;
    std::vector<std::uint32_t> data_;
};

/// First step has no previous node: probability of neighbor x is
/// W(v,x) / sum_u W(v,u). If every incident weight is zero (rewired edges
/// between dark cells) the distribution is uniform over neighbors.
/// Entries are ordered like net.neighbors(v).
std::vector<double> first_step_distribution(const GravityNetwork& net, std::uint32_t v);

/// Second-order rule: unnormalized score of neighbor x is alpha * W(cur,x)
/// with alpha = 1/p if x == prev, 1 if x is adjacent to prev, 1/q otherwise.
/// A zero total falls back to the same rule with unit edge weights.
/// Entries are ordered like net.neighbors(cur).
std::vector<double> second_step_distribution(const GravityNetwork& net, std::uint32_t prev,
                                             std::uint32_t cur, const WalkParams& params);

/// Simulate all walks. The stream for walk w from node k depends only on
/// (seed, k, w), so any thread count yields bit-identical output.
WalkSet simulate_walks(const GravityNetwork& net, const WalkParams& params,
                       unsigned n_threads = 1);

/// One walk per line, space-separated node ids, preceded by a `#params`
/// header line.
void write_walks(const std::filesystem::path& path, const WalkSet& walks,
                 const WalkParams& params);
WalkSet read_walks(const std::filesystem::path& path, WalkParams* params_out = nullptr);

}  // namespace nightgrav
