#include "nightgrav/community.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "nightgrav/common.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

std::size_t CommunityPartition::community_count() const {
    std::uint32_t max_id = 0;
    for (std::uint32_t c : assignment) max_id = std::max(max_id, c);
    return assignment.empty() ? 0 : static_cast<std::size_t>(max_id) + 1;
}

void CommunityPartition::validate(std::size_t node_count) const {
    if (assignment.size() != node_count) {
        throw ValidationError("partition does not cover the node set");
    }
    const std::size_t c = community_count();
    std::vector<bool> seen(c, false);
    for (std::uint32_t id : assignment) seen[id] = true;
    for (std::size_t i = 0; i < c; ++i) {
        if (!seen[i]) throw ValidationError("community ids are not contiguous from 0");
    }
    if (!(modularity >= -1.0 && modularity <= 1.0)) {
        throw ValidationError("modularity outside [-1, 1]");
    }
}

std::size_t TransitionReport::count(TransitionKind kind) const {
    std::size_t n = 0;
    for (const auto& e : events) n += e.kind == kind ? 1 : 0;
    return n;
}

double modularity(const GravityNetwork& net, std::span<const std::uint32_t> assignment,
                  double resolution) {
    if (assignment.size() != net.node_count()) {
        throw ValidationError("modularity: assignment does not cover all nodes");
    }
    const double m = net.total_weight();
    if (!(m > 0.0)) throw ValidationError("modularity: network total weight is zero");

    std::uint32_t n_comms = 0;
    for (std::uint32_t c : assignment) n_comms = std::max(n_comms, c + 1);
    std::vector<double> internal(n_comms, 0.0);  // ordered-pair intra weight
    std::vector<double> total(n_comms, 0.0);     // sum of weighted degrees
    for (const GravityEdge& e : net.edges()) {
        if (assignment[e.src] == assignment[e.dst]) internal[assignment[e.src]] += 2.0 * e.weight;
    }
    for (std::uint32_t v = 0; v < net.node_count(); ++v) {
        total[assignment[v]] += net.weighted_degree(v);
    }
    const double two_m = 2.0 * m;
    double q = 0.0;
    for (std::uint32_t c = 0; c < n_comms; ++c) {
        const double frac = total[c] / two_m;
        q += internal[c] / two_m - resolution * frac * frac;
    }
    return q;
}

namespace {

// Working multigraph for the aggregation levels. Adjacency lists hold both
// directions of every edge; self_loop stores the ordered-pair internal
// weight carried over from collapsed communities.
struct WorkGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
    std::vector<double> self_loop;
    std::vector<double> strength;
    double two_m = 0.0;
};

WorkGraph from_network(const GravityNetwork& net) {
    WorkGraph g;
    g.n = net.node_count();
    g.adj.resize(g.n);
    g.self_loop.assign(g.n, 0.0);
    for (const GravityEdge& e : net.edges()) {
        g.adj[e.src].emplace_back(e.dst, e.weight);
        g.adj[e.dst].emplace_back(e.src, e.weight);
    }
    g.strength.assign(g.n, 0.0);
    for (std::size_t v = 0; v < g.n; ++v) {
        double s = g.self_loop[v];
        for (const auto& [u, w] : g.adj[v]) s += w;
        g.strength[v] = s;
        g.two_m += s;
    }
    return g;
}

// One phase of single-node moves in node-id order; returns whether anything
// moved. `assign` maps graph nodes to community ids < g.n.
bool local_moves(const WorkGraph& g, std::vector<std::uint32_t>& assign, double resolution) {
    const double two_m = g.two_m;
    std::vector<double> comm_total(g.n, 0.0);
    std::vector<std::uint32_t> comm_size(g.n, 0);
    for (std::size_t v = 0; v < g.n; ++v) {
        comm_total[assign[v]] += g.strength[v];
        comm_size[assign[v]] += 1;
    }
    std::vector<std::uint32_t> empty_ids;
    for (std::uint32_t c = 0; c < g.n; ++c) {
        if (comm_size[c] == 0) empty_ids.push_back(c);
    }
    std::sort(empty_ids.rbegin(), empty_ids.rend());  // pop lowest first

    std::vector<double> link(g.n, 0.0);  // weight from v into each community
    std::vector<std::uint32_t> touched;
    bool any_moved = false;
    bool moved_this_pass = true;
    while (moved_this_pass) {
        moved_this_pass = false;
        for (std::uint32_t v = 0; v < g.n; ++v) {
            const std::uint32_t home = assign[v];
            touched.clear();
            for (const auto& [u, w] : g.adj[v]) {
                const std::uint32_t c = assign[u];
                if (link[c] == 0.0 && w != 0.0) touched.push_back(c);
                link[c] += w;
            }
            const double k_v = g.strength[v];
            comm_total[home] -= k_v;
            comm_size[home] -= 1;

            const auto gain = [&](std::uint32_t c) {
                return link[c] / (0.5 * two_m) -
                       resolution * k_v * comm_total[c] * 2.0 / (two_m * two_m);
            };
            // Staying put is the baseline; a fresh singleton community has
            // gain 0 and is taken only on strict improvement.
            std::uint32_t best = home;
            double best_gain = gain(home);
            if (std::find(touched.begin(), touched.end(), home) == touched.end()) {
                touched.push_back(home);
            }
            std::sort(touched.begin(), touched.end());
            for (const std::uint32_t c : touched) {
                const double gc = gain(c);
                if (gc > best_gain || (gc == best_gain && c < best)) {
                    best = c;
                    best_gain = gc;
                }
            }
            if (best_gain < 0.0 && comm_size[home] > 0 && !empty_ids.empty()) {
                best = empty_ids.back();
            }

            if (best != home) {
                if (comm_size[home] == 0) empty_ids.push_back(home);
                if (!empty_ids.empty() && best == empty_ids.back()) empty_ids.pop_back();
                std::sort(empty_ids.rbegin(), empty_ids.rend());
                moved_this_pass = true;
                any_moved = true;
            }
            assign[v] = best;
            comm_total[best] += k_v;
            comm_size[best] += 1;
            for (const auto& [u, w] : g.adj[v]) link[assign[u]] = 0.0;
            link[home] = 0.0;
        }
    }
    return any_moved;
}

std::uint32_t relabel_contiguous(std::vector<std::uint32_t>& assign) {
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    std::uint32_t next = 0;
    for (std::uint32_t& c : assign) {
        const auto [it, inserted] = remap.emplace(c, next);
        if (inserted) ++next;
        c = it->second;
    }
    return next;
}

WorkGraph aggregate(const WorkGraph& g, const std::vector<std::uint32_t>& assign,
                    std::uint32_t n_comms) {
    WorkGraph out;
    out.n = n_comms;
    out.adj.resize(n_comms);
    out.self_loop.assign(n_comms, 0.0);
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> between;
    for (std::size_t v = 0; v < g.n; ++v) {
        const std::uint32_t cv = assign[v];
        out.self_loop[cv] += g.self_loop[v];
        for (const auto& [u, w] : g.adj[v]) {
            const std::uint32_t cu = assign[u];
            if (cu == cv) {
                out.self_loop[cv] += w;  // both directions visit -> ordered count
            } else if (cv < cu) {
                between[{cv, cu}] += w;
            }
        }
    }
    for (const auto& [key, w] : between) {
        out.adj[key.first].emplace_back(key.second, w);
        out.adj[key.second].emplace_back(key.first, w);
    }
    out.strength.assign(n_comms, 0.0);
    for (std::size_t v = 0; v < n_comms; ++v) {
        double s = out.self_loop[v];
        for (const auto& [u, w] : out.adj[v]) s += w;
        out.strength[v] = s;
        out.two_m += s;
    }
    return out;
}

}  // namespace

CommunityPartition detect_communities(const GravityNetwork& net, double resolution,
                                      std::uint64_t seed, const std::string& label) {
    if (!(resolution > 0.0)) throw ValidationError("resolution must be > 0");
    if (!(net.total_weight() > 0.0)) {
        // Degenerate all-dark snapshot: no weight anywhere, every node its own
        // community.
        CommunityPartition part;
        part.label = label;
        part.assignment.resize(net.node_count());
        std::iota(part.assignment.begin(), part.assignment.end(), 0u);
        part.modularity = 0.0;
        return part;
    }

    WorkGraph graph = from_network(net);
    std::vector<std::uint32_t> node_to_comm(net.node_count());
    std::iota(node_to_comm.begin(), node_to_comm.end(), 0u);

    while (true) {
        std::vector<std::uint32_t> level_assign(graph.n);
        std::iota(level_assign.begin(), level_assign.end(), 0u);
        const bool moved = local_moves(graph, level_assign, resolution);
        const std::uint32_t n_comms = relabel_contiguous(level_assign);
        for (std::uint32_t& c : node_to_comm) c = level_assign[c];
        if (!moved || n_comms == graph.n) break;
        graph = aggregate(graph, level_assign, n_comms);
    }

    // Final single-node refinement on the original graph guarantees the
    // result is a local maximum under single-node moves.
    const WorkGraph base = from_network(net);
    local_moves(base, node_to_comm, resolution);
    relabel_contiguous(node_to_comm);

    CommunityPartition part;
    part.label = label;
    part.assignment = std::move(node_to_comm);
    part.modularity = modularity(net, part.assignment, 1.0);
    (void)seed;  // detection is fully deterministic; the seed is accepted for
                 // interface stability only
    return part;
}

TransitionReport track_communities(const CommunityPartition& part_t,
                                   const CommunityPartition& part_t1,
                                   double overlap_threshold) {
    if (part_t.assignment.size() != part_t1.assignment.size()) {
        throw ValidationError("track_communities: node sets differ");
    }
    if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) {
        throw ValidationError("overlap threshold must be in (0, 1]");
    }
    const std::size_t n_src = part_t.community_count();
    const std::size_t n_dst = part_t1.community_count();
    std::vector<double> src_size(n_src, 0.0);
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> overlap;
    for (std::size_t v = 0; v < part_t.assignment.size(); ++v) {
        src_size[part_t.assignment[v]] += 1.0;
        overlap[{part_t.assignment[v], part_t1.assignment[v]}] += 1.0;
    }

    // targets per source above threshold, and the fraction for each pair
    std::vector<std::vector<std::pair<std::uint32_t, double>>> targets(n_src);
    std::vector<bool> dst_has_source(n_dst, false);
    for (const auto& [key, count] : overlap) {
        const double frac = count / src_size[key.first];
        if (frac >= overlap_threshold) {
            targets[key.first].emplace_back(key.second, frac);
            dst_has_source[key.second] = true;
        }
    }

    // group sources that map to exactly one target by that target
    std::vector<std::vector<std::pair<std::uint32_t, double>>> solo_sources(n_dst);
    TransitionReport report;
    for (std::uint32_t a = 0; a < n_src; ++a) {
        if (targets[a].size() == 1) {
            solo_sources[targets[a][0].first].emplace_back(a, targets[a][0].second);
        }
    }
    for (std::uint32_t b = 0; b < n_dst; ++b) {
        if (solo_sources[b].empty()) continue;
        TransitionEvent event;
        event.kind = solo_sources[b].size() == 1 ? TransitionKind::kContinue
                                                 : TransitionKind::kMerge;
        event.targets = {b};
        for (const auto& [a, frac] : solo_sources[b]) {
            event.sources.push_back(a);
            event.overlaps.push_back(frac);
        }
        report.events.push_back(std::move(event));
    }
    for (std::uint32_t a = 0; a < n_src; ++a) {
        if (targets[a].size() < 2) continue;
        TransitionEvent event;
        event.kind = TransitionKind::kSplit;
        event.sources = {a};
        for (const auto& [b, frac] : targets[a]) {
            event.targets.push_back(b);
            event.overlaps.push_back(frac);
        }
        report.events.push_back(std::move(event));
    }
    for (std::uint32_t a = 0; a < n_src; ++a) {
        if (!targets[a].empty()) continue;
        TransitionEvent event;
        event.kind = TransitionKind::kDisappear;
        event.sources = {a};
        report.events.push_back(std::move(event));
    }
    for (std::uint32_t b = 0; b < n_dst; ++b) {
        if (dst_has_source[b]) continue;
        TransitionEvent event;
        event.kind = TransitionKind::kAppear;
        event.targets = {b};
        report.events.push_back(std::move(event));
    }
    return report;
}

void write_partition_csv(const std::filesystem::path& path, const CommunityPartition& part) {
    std::ofstream out = open_output(path);
    out << "node_id,community_id\n";
    for (std::size_t v = 0; v < part.assignment.size(); ++v) {
        out << v << ',' << part.assignment[v] << "\n";
    }
}

CommunityPartition read_partition_csv(const std::filesystem::path& path,
                                      const std::string& label) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "node_id,community_id") {
        throw ParseError(path.string() + ": expected header 'node_id,community_id'");
    }
    CommunityPartition part;
    part.label = label;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        const auto id = fields.size() == 2 ? parse_int(fields[0]) : std::nullopt;
        const auto comm = fields.size() == 2 ? parse_int(fields[1]) : std::nullopt;
        if (!id || !comm || *id != static_cast<long long>(part.assignment.size()) || *comm < 0) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": bad partition row");
        }
        part.assignment.push_back(static_cast<std::uint32_t>(*comm));
    }
    return part;
}

std::string transition_kind_name(TransitionKind kind) {
    switch (kind) {
        case TransitionKind::kContinue: return "continue";
        case TransitionKind::kMerge: return "merge";
        case TransitionKind::kSplit: return "split";
        case TransitionKind::kAppear: return "appear";
        case TransitionKind::kDisappear: return "disappear";
    }
    return "unknown";
}

namespace {

std::string join_ids(std::span<const std::uint32_t> ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

std::string join_fractions(std::span<const double> fracs) {
    std::string out;
    for (std::size_t i = 0; i < fracs.size(); ++i) {
        if (i) out += ';';
        out += format_double(fracs[i]);
    }
    return out;
}

}  // namespace

void write_transition_csv(const std::filesystem::path& path, const TransitionReport& report) {
    std::ofstream out = open_output(path);
    out << "kind,src_ids,dst_ids,overlaps\n";
    for (const TransitionEvent& e : report.events) {
        out << transition_kind_name(e.kind) << ',' << join_ids(e.sources) << ','
            << join_ids(e.targets) << ',' << join_fractions(e.overlaps) << "\n";
    }
}

std::string transition_table(const TransitionReport& report) {
    std::ostringstream out;
    out << "kind        sources      targets      overlaps\n";
    for (const TransitionEvent& e : report.events) {
        std::ostringstream row;
        row << transition_kind_name(e.kind);
        while (row.str().size() < 12) row << ' ';
        row << join_ids(e.sources);
        while (row.str().size() < 25) row << ' ';
        row << join_ids(e.targets);
        while (row.str().size() < 38) row << ' ';
        row << join_fractions(e.overlaps);
        out << row.str() << "\n";
    }
    return out.str();
}

void write_community_geojson(const std::filesystem::path& path, const CoarseGrid& grid,
                             const CommunityPartition& part) {
    if (part.assignment.size() != grid.node_count()) {
        throw ValidationError("geojson export: partition does not match grid");
    }
    nlohmann::json features = nlohmann::json::array();
    const double cw = grid.cell_width();
    const double ch = grid.cell_height();
    for (const GridCell& cell : grid.cells) {
        const double x0 = cell.lon - 0.5 * cw;
        const double x1 = cell.lon + 0.5 * cw;
        const double y0 = cell.lat - 0.5 * ch;
        const double y1 = cell.lat + 0.5 * ch;
        nlohmann::json feature = {
            {"type", "Feature"},
            {"geometry",
             {{"type", "Polygon"},
              {"coordinates",
               nlohmann::json::array({nlohmann::json::array(
                   {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}})})}}},
            {"properties",
             {{"node_id", cell.node_id},
              {"community_id", part.assignment[cell.node_id]},
              {"log_intensity", cell.log_intensity}}},
        };
        features.push_back(std::move(feature));
    }
    nlohmann::json collection = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    std::ofstream out = open_output(path);
    out << collection.dump(2) << "\n";
}

}  // namespace nightgrav
