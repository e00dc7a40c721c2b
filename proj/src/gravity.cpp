#include "nightgrav/gravity.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "nightgrav/common.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

void GravityParams::validate(std::size_t node_count) const {
    if (!(exponent >= 0.0)) throw ValidationError("gravity exponent P must be >= 0");
    if (!(tau >= 0.0)) throw ValidationError("gravity threshold tau must be >= 0");
    if (k_rewire < 1 || k_rewire >= node_count) {
        throw ValidationError("k_rewire must satisfy 1 <= K < node count");
    }
}

std::size_t PairwiseMatrix::index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    // packed upper triangle, row i, column j > i
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

GravityNetwork::GravityNetwork(std::vector<GravityNode> nodes, std::vector<GravityEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const std::size_t n = nodes_.size();
    for (auto& e : edges_) {
        if (e.src > e.dst) std::swap(e.src, e.dst);
        if (e.src == e.dst) throw ValidationError("self-edge in gravity network");
        if (e.dst >= n) throw ValidationError("edge endpoint out of range");
        if (!(e.weight >= 0.0)) throw ValidationError("edge weight must be nonnegative");
    }
    std::sort(edges_.begin(), edges_.end(), [](const GravityEdge& a, const GravityEdge& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    for (std::size_t i = 1; i < edges_.size(); ++i) {
        if (edges_[i - 1].src == edges_[i].src && edges_[i - 1].dst == edges_[i].dst) {
            throw ValidationError("duplicate edge in gravity network");
        }
    }

    std::vector<std::size_t> deg(n, 0);
    for (const auto& e : edges_) {
        ++deg[e.src];
        ++deg[e.dst];
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
    adj_ids_.resize(offsets_[n]);
    adj_weights_.resize(offsets_[n]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
        adj_ids_[cursor[e.src]] = e.dst;
        adj_weights_[cursor[e.src]++] = e.weight;
        adj_ids_[cursor[e.dst]] = e.src;
        adj_weights_[cursor[e.dst]++] = e.weight;
    }
    // Edges were sorted by (src, dst), so each neighbor list is built in
    // ascending id order already for dst entries appended from src side;
    // a per-node sort keeps the invariant regardless.
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t b = offsets_[v];
        const std::size_t e = offsets_[v + 1];
        std::vector<std::pair<std::uint32_t, double>> tmp;
        tmp.reserve(e - b);
        for (std::size_t i = b; i < e; ++i) tmp.emplace_back(adj_ids_[i], adj_weights_[i]);
        std::sort(tmp.begin(), tmp.end());
        for (std::size_t i = b; i < e; ++i) {
            adj_ids_[i] = tmp[i - b].first;
            adj_weights_[i] = tmp[i - b].second;
        }
    }
    weighted_degree_.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        double s = 0.0;
        for (double w : neighbor_weights(static_cast<std::uint32_t>(v))) s += w;
        weighted_degree_[v] = s;
    }
    total_weight_ = 0.0;
    for (const auto& e : edges_) total_weight_ += e.weight;
}

bool GravityNetwork::has_edge(std::uint32_t u, std::uint32_t v) const {
    if (u == v) return false;
    const auto ns = neighbors(u);
    return std::binary_search(ns.begin(), ns.end(), v);
}

namespace {

double center_distance(const GridCell& a, const GridCell& b) {
    const double dx = a.lon - b.lon;
    const double dy = a.lat - b.lat;
    return std::sqrt(dx * dx + dy * dy);
}

double max_pairwise_distance(const CoarseGrid& grid) {
    const std::size_t n = grid.node_count();
    if (n < 2) throw ValidationError("normalized_distance: need at least 2 nodes");
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            best = std::max(best, center_distance(grid.cells[i], grid.cells[j]));
        }
    }
    if (!(best > 0.0)) throw ValidationError("normalized_distance: all cell centers coincide");
    return best;
}

}  // namespace

PairwiseMatrix normalized_distance(const CoarseGrid& grid) {
    const std::size_t n = grid.node_count();
    const double dmax = max_pairwise_distance(grid);
    PairwiseMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            out.set(i, j, center_distance(grid.cells[i], grid.cells[j]) / dmax);
        }
    }
    return out;
}

double gravity_weight(double log_intensity_i, double log_intensity_j, double normalized_dist,
                      double exponent) {
    if (!(normalized_dist > 0.0) || normalized_dist > 1.0) {
        throw ValidationError("gravity_weight: normalized distance must be in (0, 1]");
    }
    return log_intensity_i * log_intensity_j / std::pow(normalized_dist, exponent);
}

GravityNetwork build_gravity_network(const CoarseGrid& grid, const GravityParams& params) {
    grid.validate();
    const std::size_t n = grid.node_count();
    params.validate(n);
    const double dmax = max_pairwise_distance(grid);

    std::vector<GravityEdge> edges;
    std::vector<std::size_t> degree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const GridCell& a = grid.cells[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const GridCell& b = grid.cells[j];
            const double r = center_distance(a, b) / dmax;
            const double w = gravity_weight(a.log_intensity, b.log_intensity, r, params.exponent);
            if (w >= params.tau) {
                edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), w,
                                 false});
                ++degree[i];
                ++degree[j];
            }
        }
    }

    // Rewire: nodes left under-connected by thresholding get edges to their
    // K geographically nearest neighbors.
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    const auto key = [n](std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return static_cast<std::uint64_t>(a) * n + b;
    };
    for (const auto& e : edges) present.insert(key(e.src, e.dst));

    std::vector<std::uint32_t> deficient;
    for (std::size_t v = 0; v < n; ++v) {
        if (degree[v] < params.k_rewire) deficient.push_back(static_cast<std::uint32_t>(v));
    }
    std::vector<std::pair<double, std::uint32_t>> by_distance;
    for (const std::uint32_t v : deficient) {
        by_distance.clear();
        by_distance.reserve(n - 1);
        for (std::size_t u = 0; u < n; ++u) {
            if (u == v) continue;
            by_distance.emplace_back(center_distance(grid.cells[v], grid.cells[u]),
                                     static_cast<std::uint32_t>(u));
        }
        const std::size_t k = std::min<std::size_t>(params.k_rewire, by_distance.size());
        std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(k),
                          by_distance.end());
        for (std::size_t i = 0; i < k; ++i) {
            const std::uint32_t u = by_distance[i].second;
            if (!present.insert(key(v, u)).second) continue;  // already connected
            const double r = by_distance[i].first / dmax;
            const double w = gravity_weight(grid.cells[v].log_intensity,
                                            grid.cells[u].log_intensity, r, params.exponent);
            edges.push_back({std::min(v, u), std::max(v, u), w, true});
        }
    }

    std::vector<GravityNode> nodes(n);
    for (std::size_t v = 0; v < n; ++v) {
        nodes[v] = {static_cast<std::uint32_t>(v), grid.cells[v].lon, grid.cells[v].lat,
                    grid.cells[v].log_intensity};
    }
    return GravityNetwork(std::move(nodes), std::move(edges));
}

void write_edge_tsv(const std::filesystem::path& path, const GravityNetwork& net) {
    std::ofstream out = open_output(path);
    out << "src\tdst\tweight\trewired\n";
    for (const GravityEdge& e : net.edges()) {
        out << e.src << '\t' << e.dst << '\t' << format_double(e.weight) << '\t'
            << (e.rewired ? 1 : 0) << "\n";
    }
}

GravityNetwork read_edge_tsv(const std::filesystem::path& path, const CoarseGrid& grid) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "src\tdst\tweight\trewired") {
        throw ParseError(path.string() + ": expected header 'src\\tdst\\tweight\\trewired'");
    }
    std::vector<GravityEdge> edges;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, '\t');
        if (fields.size() != 4) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 4 tab-separated fields");
        }
        const auto src = parse_int(fields[0]);
        const auto dst = parse_int(fields[1]);
        const auto weight = parse_double(fields[2]);
        const auto rewired = parse_int(fields[3]);
        if (!src || !dst || !weight || !rewired || *src < 0 || *dst < 0 ||
            (*rewired != 0 && *rewired != 1)) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": bad edge row");
        }
        edges.push_back({static_cast<std::uint32_t>(*src), static_cast<std::uint32_t>(*dst),
                         *weight, *rewired == 1});
    }
    std::vector<GravityNode> nodes(grid.node_count());
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        nodes[v] = {static_cast<std::uint32_t>(v), grid.cells[v].lon, grid.cells[v].lat,
                    grid.cells[v].log_intensity};
    }
    return GravityNetwork(std::move(nodes), std::move(edges));
}

}  // namespace nightgrav
