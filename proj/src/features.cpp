#include "nightgrav/features.hpp"

#include <algorithm>

#include "nightgrav/common.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

namespace {

double cell_value(const CoarseGrid& grid, std::uint32_t node_id, IntensityKind kind) {
    if (node_id >= grid.node_count()) {
        throw ValidationError("walk references unknown node id " + std::to_string(node_id));
    }
    const GridCell& c = grid.cell(node_id);
    return kind == IntensityKind::kLogIntensity ? c.log_intensity : c.intensity;
}

}  // namespace

std::vector<std::vector<double>> intensity_walks(const WalkSet& walks, const CoarseGrid& grid,
                                                 IntensityKind kind) {
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(walks.node_count()) * walks.walks_per_node());
    for (std::uint32_t v = 0; v < walks.node_count(); ++v) {
        for (std::uint32_t w = 0; w < walks.walks_per_node(); ++w) {
            const auto walk = walks.walk(v, w);
            std::vector<double> intensities(walk.size());
            for (std::size_t i = 0; i < walk.size(); ++i) {
                intensities[i] = cell_value(grid, walk[i], kind);
            }
            out.push_back(std::move(intensities));
        }
    }
    return out;
}

FeatureMatrix step_expectation_features(const WalkSet& walks, const CoarseGrid& grid,
                                        const FeatureOptions& options) {
    const std::uint32_t length = walks.walk_length();
    const std::uint32_t cols = options.include_origin ? length + 1 : length;
    FeatureMatrix features(walks.node_count(), cols, options.include_origin);
    const double inv_walks = 1.0 / static_cast<double>(walks.walks_per_node());
    const std::uint32_t first_step = options.include_origin ? 0 : 1;
    for (std::uint32_t v = 0; v < walks.node_count(); ++v) {
        auto row = features.row(v);
        for (std::uint32_t w = 0; w < walks.walks_per_node(); ++w) {
            const auto walk = walks.walk(v, w);
            for (std::uint32_t step = first_step; step <= length; ++step) {
                row[step - first_step] += cell_value(grid, walk[step], options.kind);
            }
        }
        for (double& x : row) x *= inv_walks;
    }
    return features;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& features) {
    std::ofstream out = open_output(path);
    out << "node_id";
    const std::uint32_t first = features.includes_origin() ? 0 : 1;
    for (std::uint32_t i = 0; i < features.step_count(); ++i) {
        out << ",step_" << first + i;
    }
    out << "\n";
    for (std::uint32_t v = 0; v < features.node_count(); ++v) {
        out << v;
        for (double x : features.row(v)) out << ',' << format_double(x);
        out << "\n";
    }
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty feature file");
    const auto header = split(trim(line), ',');
    if (header.size() < 2 || header[0] != "node_id" ||
        (header[1] != "step_0" && header[1] != "step_1")) {
        throw ParseError(path.string() + ": expected header 'node_id,step_1,...'");
    }
    const bool includes_origin = header[1] == "step_0";
    const auto n_cols = static_cast<std::uint32_t>(header.size() - 1);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != header.size()) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": field count mismatch");
        }
        const auto id = parse_int(fields[0]);
        if (!id || *id != static_cast<long long>(rows.size())) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": node rows must be consecutive from 0");
        }
        std::vector<double> row(n_cols);
        for (std::uint32_t i = 0; i < n_cols; ++i) {
            const auto v = parse_double(fields[i + 1]);
            if (!v) {
                throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                                 ": non-numeric feature");
            }
            row[i] = *v;
        }
        rows.push_back(std::move(row));
    }
    FeatureMatrix features(static_cast<std::uint32_t>(rows.size()), n_cols, includes_origin);
    for (std::uint32_t v = 0; v < features.node_count(); ++v) {
        auto dst = features.row(v);
        std::copy(rows[v].begin(), rows[v].end(), dst.begin());
    }
    return features;
}

}  // namespace nightgrav
