#pragma once

#include "lrmbayes/domain.hpp"
#include "lrmbayes/error.hpp"
#include "lrmbayes/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lrmbayes::harness {

enum class DatasetKind { CountMatrix, CountSeries, LatticeRaster };

std::string to_string(DatasetKind kind);
/// Accepts count-matrix, count-series and lattice-raster; throws ConfigError otherwise.
DatasetKind dataset_kind_from_string(const std::string& s);

/// Bad cell in an input file. Line and column are 1-based; column 0 means the whole row.
class SchemaError : public ConfigError {
public:
    SchemaError(std::size_t line, std::size_t column, const std::string& what);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

struct DatasetSummary {
    std::size_t rows = 0;
    std::size_t columns = 0;
    std::int64_t min = 0;
    std::int64_t max = 0;
    double mean = 0.0;

    std::string describe() const;
};

/// count-matrix: one StatePoint per row. count-series: one entry per observation.
/// lattice-raster: a single StatePoint holding the row-major raster, with geometry set.
struct Dataset {
    DatasetKind kind = DatasetKind::CountMatrix;
    std::vector<StatePoint> samples;
    std::vector<std::int64_t> series;
    LatticeGeometry geometry;
    std::int64_t states = 0; ///< raster only: largest value + 1
    DatasetSummary summary;
};

/// CSV input; a first row with any non-integer cell is treated as a header.
/// count-series takes a single column, or a single row. Entries must be
/// non-negative integers; rows must have equal length.
Dataset ingest_dataset(const std::filesystem::path& path, DatasetKind kind);
Dataset parse_dataset(const std::string& text, DatasetKind kind);

/// Counts, series and rasters back to CSV (header row included; rasters have columns c1..cN).
std::string dataset_csv(const Dataset& data);

Dataset make_count_matrix(std::vector<StatePoint> rows);
Dataset make_count_series(std::vector<std::int64_t> series);
Dataset make_raster(const StatePoint& raster, const LatticeGeometry& geometry);

// ---- synthetic stand-ins for the external datasets

/// Draws from a CMP graphical model with moderate rates and weak negative interactions;
/// shape n x d like the breast-cancer count matrix.
Dataset synthetic_count_matrix(std::size_t n, std::size_t d, std::uint64_t seed);

/// Truth used by synthetic_count_matrix, in the model's theta layout.
Eigen::VectorXd synthetic_count_matrix_truth(std::size_t d);

/// INGARCH-CMP series with counts in a range like the monthly crime counts.
Dataset synthetic_count_series(std::size_t length, std::uint64_t seed);

/// Smooth random field cut at its quartiles into `states` classes, like a thickness raster.
Dataset synthetic_raster(std::size_t rows, std::size_t cols, std::int64_t states, std::uint64_t seed);

} // namespace lrmbayes::harness
