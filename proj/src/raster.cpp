#include "nightgrav/raster.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nightgrav/common.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

void BoundingBox::validate() const {
    if (!(min_lon < max_lon) || !(min_lat < max_lat)) {
        throw ValidationError("bounding box must satisfy min_lon < max_lon and min_lat < max_lat");
    }
    if (!std::isfinite(min_lon) || !std::isfinite(min_lat) || !std::isfinite(max_lon) ||
        !std::isfinite(max_lat)) {
        throw ValidationError("bounding box coordinates must be finite");
    }
}

BoundingBox RasterGrid::extent() const {
    return {xll, yll, xll + static_cast<double>(n_cols) * cell_size,
            yll + static_cast<double>(n_rows) * cell_size};
}

void RasterGrid::validate() const {
    if (n_rows < 1 || n_cols < 1) throw ValidationError("raster must have at least one row and column");
    if (!(cell_size > 0.0)) throw ValidationError("raster cell_size must be > 0");
    if (values.size() != n_rows * n_cols) throw ValidationError("raster value count does not match dimensions");
    for (double v : values) {
        if (v != nodata && v < 0.0) {
            throw ValidationError("raster contains negative intensity " + format_double(v));
        }
    }
}

void CoarseGrid::validate() const {
    if (grid_rows < 1 || grid_cols < 1) throw ValidationError("coarse grid needs at least one row and column");
    bbox.validate();
    if (cells.size() != grid_rows * grid_cols) throw ValidationError("coarse grid cell count mismatch");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const GridCell& c = cells[k];
        if (c.node_id != k) throw ValidationError("coarse grid cells must be stored in node_id order");
        if (c.intensity < 0.0 || c.log_intensity < 0.0) {
            throw ValidationError("coarse grid intensities must be nonnegative");
        }
        if (c.lon < bbox.min_lon || c.lon > bbox.max_lon || c.lat < bbox.min_lat ||
            c.lat > bbox.max_lat) {
            throw ValidationError("coarse grid cell center outside bbox");
        }
    }
}

double log_intensity(double intensity, double log_base) {
    const double m = std::log1p(intensity);
    return log_base > 0.0 ? m / std::log(log_base) : m;
}

CoarseGrid make_coarse_grid(std::size_t rows, std::size_t cols, const BoundingBox& bbox,
                            std::span<const double> intensities, double log_base) {
    if (rows < 1 || cols < 1) throw ValidationError("coarse grid needs at least one row and column");
    bbox.validate();
    if (intensities.size() != rows * cols) {
        throw ValidationError("intensity count does not match rows*cols");
    }
    CoarseGrid grid;
    grid.grid_rows = rows;
    grid.grid_cols = cols;
    grid.bbox = bbox;
    grid.cells.resize(rows * cols);
    const double cw = grid.cell_width();
    const double ch = grid.cell_height();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t k = r * cols + c;
            GridCell& cell = grid.cells[k];
            cell.node_id = static_cast<std::uint32_t>(k);
            cell.lon = bbox.min_lon + (static_cast<double>(c) + 0.5) * cw;
            cell.lat = bbox.min_lat + (static_cast<double>(r) + 0.5) * ch;
            const double i = intensities[k];
            if (i < 0.0) throw ValidationError("cell intensity must be nonnegative");
            cell.intensity = i;
            cell.log_intensity = log_intensity(i, log_base);
        }
    }
    return grid;
}

namespace {

// Header keys in required order, matched case-insensitively.
constexpr const char* kHeaderKeys[6] = {"ncols",   "nrows",    "xllcorner",
                                        "yllcorner", "cellsize", "nodata_value"};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

}  // namespace

RasterGrid load_ascii_grid(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    RasterGrid raster;
    double header[6] = {0, 0, 0, 0, 0, 0};
    std::string line;
    for (int h = 0; h < 6; ++h) {
        if (!std::getline(in, line)) {
            throw ParseError(path.string() + ": truncated header, expected line for '" +
                             std::string(kHeaderKeys[h]) + "'");
        }
        std::istringstream ls(line);
        std::string key;
        std::string value;
        ls >> key >> value;
        if (lower(key) != kHeaderKeys[h]) {
            throw ParseError(path.string() + ": header line " + std::to_string(h + 1) +
                             " expected '" + kHeaderKeys[h] + "', got: " + line);
        }
        const auto parsed = parse_double(value);
        if (!parsed) {
            throw ParseError(path.string() + ": bad numeric value on header line " +
                             std::to_string(h + 1) + ": " + line);
        }
        header[h] = *parsed;
        std::string extra;
        if (ls >> extra) {
            throw ParseError(path.string() + ": trailing tokens on header line " +
                             std::to_string(h + 1) + ": " + line);
        }
    }
    if (header[0] < 1 || header[1] < 1 || header[0] != std::floor(header[0]) ||
        header[1] != std::floor(header[1])) {
        throw ParseError(path.string() + ": ncols/nrows must be positive integers");
    }
    raster.n_cols = static_cast<std::size_t>(header[0]);
    raster.n_rows = static_cast<std::size_t>(header[1]);
    raster.xll = header[2];
    raster.yll = header[3];
    raster.cell_size = header[4];
    raster.nodata = header[5];
    if (!(raster.cell_size > 0.0)) throw ParseError(path.string() + ": cellsize must be > 0");

    raster.values.reserve(raster.n_rows * raster.n_cols);
    std::size_t row = 0;
    while (row < raster.n_rows) {
        if (!std::getline(in, line)) {
            throw ParseError(path.string() + ": expected " + std::to_string(raster.n_rows) +
                             " data rows, got " + std::to_string(row));
        }
        if (trim(line).empty()) continue;  // tolerate blank lines between rows
        std::istringstream ls(line);
        std::string token;
        std::size_t col = 0;
        while (ls >> token) {
            const auto v = parse_double(token);
            if (!v) {
                throw ParseError(path.string() + ": non-numeric value '" + token +
                                 "' in data row " + std::to_string(row + 1));
            }
            if (col >= raster.n_cols) {
                throw ParseError(path.string() + ": data row " + std::to_string(row + 1) +
                                 " has more than ncols=" + std::to_string(raster.n_cols) +
                                 " entries");
            }
            if (*v != raster.nodata && *v < 0.0) {
                throw ValidationError(path.string() + ": negative intensity " + token +
                                      " in data row " + std::to_string(row + 1));
            }
            raster.values.push_back(*v);
            ++col;
        }
        if (col != raster.n_cols) {
            throw ParseError(path.string() + ": data row " + std::to_string(row + 1) + " has " +
                             std::to_string(col) + " entries, expected ncols=" +
                             std::to_string(raster.n_cols));
        }
        ++row;
    }
    raster.validate();
    return raster;
}

void write_ascii_grid(const std::filesystem::path& path, const RasterGrid& raster) {
    std::ofstream out = open_output(path);
    out << "ncols " << raster.n_cols << "\n";
    out << "nrows " << raster.n_rows << "\n";
    out << "xllcorner " << format_double(raster.xll) << "\n";
    out << "yllcorner " << format_double(raster.yll) << "\n";
    out << "cellsize " << format_double(raster.cell_size) << "\n";
    out << "NODATA_value " << format_double(raster.nodata) << "\n";
    for (std::size_t r = 0; r < raster.n_rows; ++r) {
        for (std::size_t c = 0; c < raster.n_cols; ++c) {
            if (c) out << ' ';
            out << format_double(raster.at(r, c));
        }
        out << "\n";
    }
}

std::vector<PointSample> load_point_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file, expected header");
    if (trim(line) != "lon,lat,intensity") {
        throw ParseError(path.string() + ": expected header 'lon,lat,intensity', got: " + line);
    }
    std::vector<PointSample> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 3 fields");
        }
        const auto lon = parse_double(fields[0]);
        const auto lat = parse_double(fields[1]);
        const auto intensity = parse_double(fields[2]);
        if (!lon || !lat || !intensity) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": non-numeric field");
        }
        if (*intensity < 0.0) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) +
                                  ": negative intensity");
        }
        points.push_back({*lon, *lat, *intensity});
    }
    return points;
}

RasterGrid average_rasters(std::span<const RasterGrid> rasters) {
    if (rasters.empty()) throw ValidationError("average_rasters: empty raster list");
    const RasterGrid& first = rasters.front();
    for (const RasterGrid& r : rasters) {
        if (r.n_rows != first.n_rows || r.n_cols != first.n_cols || r.xll != first.xll ||
            r.yll != first.yll || r.cell_size != first.cell_size) {
            throw ValidationError("average_rasters: rasters disagree on shape or georeference");
        }
    }
    RasterGrid out = first;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const RasterGrid& r : rasters) {
            const double v = r.values[i];
            if (!r.is_nodata(v)) {
                sum += v;
                ++count;
            }
        }
        out.values[i] = count == 0 ? out.nodata : sum / static_cast<double>(count);
    }
    return out;
}

namespace {

CoarseGrid aggregate_samples(std::size_t grid_rows, std::size_t grid_cols,
                             const BoundingBox& bbox, const AggregateOptions& options,
                             const std::vector<PointSample>& samples, bool require_overlap) {
    if (grid_rows < 1 || grid_cols < 1) {
        throw ValidationError("aggregate: grid_rows and grid_cols must be >= 1");
    }
    bbox.validate();
    const double cw = bbox.width() / static_cast<double>(grid_cols);
    const double ch = bbox.height() / static_cast<double>(grid_rows);
    std::vector<double> sums(grid_rows * grid_cols, 0.0);
    std::vector<std::size_t> counts(grid_rows * grid_cols, 0);
    bool any = false;
    for (const PointSample& s : samples) {
        if (!bbox.contains(s.lon, s.lat)) continue;
        const auto col = static_cast<std::size_t>(std::floor((s.lon - bbox.min_lon) / cw));
        const auto row = static_cast<std::size_t>(std::floor((s.lat - bbox.min_lat) / ch));
        if (col >= grid_cols || row >= grid_rows) continue;  // float-edge guard
        const std::size_t k = row * grid_cols + col;
        sums[k] += s.intensity;
        counts[k] += 1;
        any = true;
    }
    if (require_overlap && !any) {
        throw ValidationError("aggregate: no pixel centers fall inside bbox");
    }
    if (options.statistic == CellStatistic::kMean) {
        for (std::size_t k = 0; k < sums.size(); ++k) {
            if (counts[k] > 0) sums[k] /= static_cast<double>(counts[k]);
        }
    }
    return make_coarse_grid(grid_rows, grid_cols, bbox, sums, options.log_base);
}

}  // namespace

CoarseGrid aggregate_to_grid(const RasterGrid& raster, std::size_t grid_rows,
                             std::size_t grid_cols, const BoundingBox& bbox,
                             const AggregateOptions& options) {
    raster.validate();
    std::vector<PointSample> samples;
    samples.reserve(raster.values.size());
    for (std::size_t r = 0; r < raster.n_rows; ++r) {
        const double lat = raster.pixel_lat(r);
        for (std::size_t c = 0; c < raster.n_cols; ++c) {
            const double v = raster.at(r, c);
            if (raster.is_nodata(v)) continue;
            samples.push_back({raster.pixel_lon(c), lat, v});
        }
    }
    return aggregate_samples(grid_rows, grid_cols, bbox, options, samples,
                             /*require_overlap=*/true);
}

CoarseGrid aggregate_points(std::span<const PointSample> points, std::size_t grid_rows,
                            std::size_t grid_cols, const BoundingBox& bbox,
                            const AggregateOptions& options) {
    for (const PointSample& p : points) {
        if (p.intensity < 0.0) throw ValidationError("aggregate_points: negative intensity");
    }
    return aggregate_samples(grid_rows, grid_cols, bbox, options,
                             std::vector<PointSample>(points.begin(), points.end()),
                             /*require_overlap=*/false);
}

void write_node_table(const std::filesystem::path& path, const CoarseGrid& grid) {
    std::ofstream out = open_output(path);
    out << "node_id,lon,lat,I,M\n";
    for (const GridCell& c : grid.cells) {
        out << c.node_id << ',' << format_double(c.lon) << ',' << format_double(c.lat) << ','
            << format_double(c.intensity) << ',' << format_double(c.log_intensity) << "\n";
    }
}

CoarseGrid read_node_table(const std::filesystem::path& path, std::size_t grid_rows,
                           std::size_t grid_cols, const BoundingBox& bbox) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "node_id,lon,lat,I,M") {
        throw ParseError(path.string() + ": expected header 'node_id,lon,lat,I,M'");
    }
    std::vector<double> intensities(grid_rows * grid_cols, 0.0);
    std::vector<double> log_intensities(grid_rows * grid_cols, 0.0);
    std::size_t seen = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 5) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 5 fields");
        }
        const auto id = parse_int(fields[0]);
        const auto intensity = parse_double(fields[3]);
        const auto log_i = parse_double(fields[4]);
        if (!id || !intensity || !log_i || *id < 0 ||
            static_cast<std::size_t>(*id) >= intensities.size()) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": bad node row");
        }
        intensities[static_cast<std::size_t>(*id)] = *intensity;
        log_intensities[static_cast<std::size_t>(*id)] = *log_i;
        ++seen;
    }
    if (seen != intensities.size()) {
        throw ParseError(path.string() + ": expected " + std::to_string(intensities.size()) +
                         " node rows, got " + std::to_string(seen));
    }
    CoarseGrid grid = make_coarse_grid(grid_rows, grid_cols, bbox, intensities);
    // Preserve the M values as written (they may have been produced with a
    // non-default log base).
    for (std::size_t k = 0; k < grid.cells.size(); ++k) {
        grid.cells[k].log_intensity = log_intensities[k];
    }
    return grid;
}

}  // namespace nightgrav
