#include "nightgrav/survey.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "nightgrav/common.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

SurveyLoadResult load_survey_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file, expected header");
    const std::string header = trim(line);
    bool has_year = false;
    if (header == "lon,lat,consumption,year") {
        has_year = true;
    } else if (header != "lon,lat,consumption") {
        throw ParseError(path.string() +
                         ": expected header 'lon,lat,consumption[,year]', got: " + header);
    }
    SurveyLoadResult result;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != (has_year ? 4u : 3u)) {
            ++result.dropped;
            continue;
        }
        const auto lon = parse_double(fields[0]);
        const auto lat = parse_double(fields[1]);
        const auto consumption = parse_double(fields[2]);
        long long year = 0;
        if (has_year) {
            const auto y = parse_int(fields[3]);
            if (!y) {
                ++result.dropped;
                continue;
            }
            year = *y;
        }
        if (!lon || !lat || !consumption || !std::isfinite(*lon) || !std::isfinite(*lat) ||
            !std::isfinite(*consumption) || *consumption < 0.0) {
            ++result.dropped;
            continue;
        }
        result.samples.push_back({*lon, *lat, *consumption, static_cast<int>(year)});
    }
    return result;
}

std::vector<HouseholdCluster> bin_households(std::span<const SurveySample> samples,
                                             double bin_precision) {
    if (!(bin_precision > 0.0)) throw ValidationError("bin_precision must be > 0");
    // Group by lattice key; member lists are sorted before averaging so the
    // result is independent of input order.
    std::map<std::pair<long long, long long>, std::vector<const SurveySample*>> bins;
    for (const SurveySample& s : samples) {
        const auto kx = static_cast<long long>(std::llround(s.lon / bin_precision));
        const auto ky = static_cast<long long>(std::llround(s.lat / bin_precision));
        bins[{kx, ky}].push_back(&s);
    }
    std::vector<HouseholdCluster> clusters;
    clusters.reserve(bins.size());
    std::uint32_t next_id = 0;
    for (auto& [key, members] : bins) {
        std::sort(members.begin(), members.end(),
                  [](const SurveySample* a, const SurveySample* b) {
                      return std::tie(a->lon, a->lat, a->consumption) <
                             std::tie(b->lon, b->lat, b->consumption);
                  });
        HouseholdCluster c;
        c.cluster_id = next_id++;
        double lon = 0.0;
        double lat = 0.0;
        double consumption = 0.0;
        for (const SurveySample* s : members) {
            lon += s->lon;
            lat += s->lat;
            consumption += s->consumption;
        }
        const auto count = static_cast<double>(members.size());
        c.lon = lon / count;
        c.lat = lat / count;
        c.consumption = consumption / count;
        c.member_count = static_cast<std::uint32_t>(members.size());
        clusters.push_back(c);
    }
    return clusters;
}

JoinResult join_to_nodes(std::span<const HouseholdCluster> clusters, const CoarseGrid& grid,
                         const FeatureMatrix& features, const JoinOptions& options) {
    if (!(options.radius > 0.0)) throw ValidationError("join radius must be > 0");
    if (features.node_count() != grid.node_count()) {
        throw ValidationError("feature matrix row count does not match grid node count");
    }
    JoinResult result;
    for (const HouseholdCluster& c : clusters) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_node = 0;
        bool found = false;
        for (const GridCell& cell : grid.cells) {
            const double d = std::abs(c.lon - cell.lon) + std::abs(c.lat - cell.lat);
            if (d > options.radius) continue;
            if (!found || d < best - 1e-12) {
                best = d;
                best_node = cell.node_id;
                found = true;
            }
            // ties within 1e-12 keep the lower node id (scan order)
        }
        if (!found) {
            ++result.dropped;
            continue;
        }
        const double target =
            options.log_target ? std::log1p(c.consumption) : c.consumption;
        result.samples.push_back({c.cluster_id, best_node, target});
    }
    return result;
}

void write_joined_csv(const std::filesystem::path& path, std::span<const JoinedSample> samples,
                      const FeatureMatrix& features) {
    std::ofstream out = open_output(path);
    out << "cluster_id,node_id,target";
    const std::uint32_t first = features.includes_origin() ? 0 : 1;
    for (std::uint32_t i = 0; i < features.step_count(); ++i) out << ",step_" << first + i;
    out << "\n";
    for (const JoinedSample& s : samples) {
        out << s.cluster_id << ',' << s.node_id << ',' << format_double(s.target);
        for (double x : features.row(s.node_id)) out << ',' << format_double(x);
        out << "\n";
    }
}

}  // namespace nightgrav
