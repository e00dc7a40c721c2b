#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nightgrav {

/// Geographic extent in degrees.
struct BoundingBox {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;

    void validate() const;
    double width() const { return max_lon - min_lon; }
    double height() const { return max_lat - min_lat; }
    /// Half-open membership: [min, max) on each axis.
    bool contains(double lon, double lat) const {
        return lon >= min_lon && lon < max_lon && lat >= min_lat && lat < max_lat;
    }
};

/// Georeferenced matrix of per-pixel light intensities. Values are stored
/// row-major with the top (northernmost) row first, matching the ASCII grid
/// file layout. Immutable after construction by convention.
struct RasterGrid {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    double xll = 0.0;  ///< longitude of the lower-left raster corner
    double yll = 0.0;  ///< latitude of the lower-left raster corner
    double cell_size = 0.0;
    double nodata = -9999.0;
    std::vector<double> values;

    double at(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }
    bool is_nodata(double v) const { return v == nodata; }

    /// Longitude of the center of pixel column `col`.
    double pixel_lon(std::size_t col) const { return xll + (static_cast<double>(col) + 0.5) * cell_size; }
    /// Latitude of the center of pixel row `row` (row 0 = northernmost).
    double pixel_lat(std::size_t row) const {
        return yll + (static_cast<double>(n_rows - 1 - row) + 0.5) * cell_size;
    }

    BoundingBox extent() const;
    void validate() const;
};

/// One sample of the point-cloud ingestion format.
struct PointSample {
    double lon = 0.0;
    double lat = 0.0;
    double intensity = 0.0;
};

/// How per-cell intensity is reduced from member pixels.
enum class CellStatistic { kSum, kMean };

struct AggregateOptions {
    CellStatistic statistic = CellStatistic::kSum;
    /// Base of the log in M = log(I + 1). Natural log by default.
    double log_base = 0.0;  // 0 means natural log
};

/// One node of the coarse lattice.
struct GridCell {
    std::uint32_t node_id = 0;
    double lon = 0.0;  ///< cell center longitude
    double lat = 0.0;  ///< cell center latitude
    double intensity = 0.0;      ///< I: aggregated intensity
    double log_intensity = 0.0;  ///< M = log(I + 1)
};

/// The node lattice: a uniform rows x cols partition of a bounding box with
/// aggregated intensities. node_id = row * cols + col with row 0 at the
/// southern edge; cells are stored in node_id order.
struct CoarseGrid {
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    BoundingBox bbox;
    std::vector<GridCell> cells;

    std::size_t node_count() const { return cells.size(); }
    double cell_width() const { return bbox.width() / static_cast<double>(grid_cols); }
    double cell_height() const { return bbox.height() / static_cast<double>(grid_rows); }
    const GridCell& cell(std::uint32_t node_id) const { return cells[node_id]; }

    void validate() const;
};

double log_intensity(double intensity, double log_base = 0.0);

/// Build a lattice grid directly from per-cell intensities (node_id order).
CoarseGrid make_coarse_grid(std::size_t rows, std::size_t cols, const BoundingBox& bbox,
                            std::span<const double> intensities, double log_base = 0.0);

/// Parse an ESRI-style ASCII grid: six header lines (ncols, nrows, xllcorner,
/// yllcorner, cellsize, NODATA_value, in that order) followed by nrows rows of
/// whitespace-separated values, northernmost row first.
RasterGrid load_ascii_grid(const std::filesystem::path& path);
void write_ascii_grid(const std::filesystem::path& path, const RasterGrid& raster);

/// Parse the point CSV alternative: header `lon,lat,intensity`.
std::vector<PointSample> load_point_csv(const std::filesystem::path& path);

/// Per-pixel mean over non-nodata values; a pixel is nodata in the output
/// only when it is nodata in every input. All rasters must share shape and
/// georeference exactly.
RasterGrid average_rasters(std::span<const RasterGrid> rasters);

/// Aggregate raster pixels into a rows x cols lattice over bbox. A pixel
/// belongs to the cell its center falls into (floor division, half-open upper
/// edges); nodata pixels and pixels outside bbox are ignored. A cell with no
/// pixels has I = 0.
CoarseGrid aggregate_to_grid(const RasterGrid& raster, std::size_t grid_rows,
                             std::size_t grid_cols, const BoundingBox& bbox,
                             const AggregateOptions& options = {});

/// Same aggregation over point samples instead of raster pixels.
CoarseGrid aggregate_points(std::span<const PointSample> points, std::size_t grid_rows,
                            std::size_t grid_cols, const BoundingBox& bbox,
                            const AggregateOptions& options = {});

/// Node table round-trip: CSV `node_id,lon,lat,I,M`.
void write_node_table(const std::filesystem::path& path, const CoarseGrid& grid);
CoarseGrid read_node_table(const std::filesystem::path& path, std::size_t grid_rows,
                           std::size_t grid_cols, const BoundingBox& bbox);

}  // namespace nightgrav
