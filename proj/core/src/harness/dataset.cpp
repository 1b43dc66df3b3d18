#include "lrmbayes/harness/dataset.hpp"

#include "lrmbayes/harness/report.hpp"
#include "lrmbayes/models.hpp"
#include "lrmbayes/samplers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace lrmbayes::harness {

std::string to_string(DatasetKind kind)
{
    switch (kind) {
    case DatasetKind::CountMatrix: return "count-matrix";
    case DatasetKind::CountSeries: return "count-series";
    case DatasetKind::LatticeRaster: return "lattice-raster";
    }
    return "?";
}

DatasetKind dataset_kind_from_string(const std::string& s)
{
    if (s == "count-matrix") return DatasetKind::CountMatrix;
    if (s == "count-series") return DatasetKind::CountSeries;
    if (s == "lattice-raster") return DatasetKind::LatticeRaster;
    throw ConfigError("unknown dataset kind '" + s + "' (expected count-matrix, count-series or lattice-raster)");
}

SchemaError::SchemaError(std::size_t line, std::size_t column, const std::string& what)
    : ConfigError("line " + std::to_string(line) + (column ? ", column " + std::to_string(column) : "") + ": " + what),
      line_(line), column_(column)
{
}

std::string DatasetSummary::describe() const
{
    std::ostringstream o;
    o << rows << " x " << columns << ", values in [" << min << ", " << max << "], mean " << mean;
    return o.str();
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool integer_like(const std::string& s)
{
    const auto t = trim(s);
    if (t.empty()) return false;
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

std::int64_t parse_count(const std::string& cell, std::size_t line, std::size_t col)
{
    const auto t = trim(cell);
    if (t.empty()) throw SchemaError(line, col, "empty entry");
    std::int64_t v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec == std::errc() && r.ptr == t.data() + t.size()) {
        if (v < 0) throw SchemaError(line, col, "negative entry '" + t + "'");
        return v;
    }
    // integral values written as floats, e.g. 3.0
    double d = 0.0;
    const auto rd = std::from_chars(t.data(), t.data() + t.size(), d);
    if (rd.ec != std::errc() || rd.ptr != t.data() + t.size())
        throw SchemaError(line, col, "entry '" + t + "' is not a number");
    if (d < 0.0) throw SchemaError(line, col, "negative entry '" + t + "'");
    if (d != std::floor(d) || d > 9e15) throw SchemaError(line, col, "non-integer entry '" + t + "'");
    return static_cast<std::int64_t>(d);
}

DatasetSummary summarise(const std::vector<std::int64_t>& values, std::size_t rows, std::size_t cols)
{
    DatasetSummary s;
    s.rows = rows;
    s.columns = cols;
    if (values.empty()) return s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (auto v : values) sum += static_cast<double>(v);
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

} // namespace

Dataset make_count_matrix(std::vector<StatePoint> rows)
{
    if (rows.empty()) throw ConfigError("count matrix has no rows");
    const auto d = rows.front().size();
    std::vector<std::int64_t> flat;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) throw SchemaError(i + 1, 0, "row length differs from the first row");
        for (std::size_t j = 0; j < d; ++j)
            if (rows[i][j] < 0) throw SchemaError(i + 1, j + 1, "negative entry");
        flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    }
    Dataset out;
    out.kind = DatasetKind::CountMatrix;
    out.summary = summarise(flat, rows.size(), d);
    out.samples = std::move(rows);
    return out;
}

Dataset make_count_series(std::vector<std::int64_t> series)
{
    if (series.size() < 2) throw ConfigError("count series needs at least two observations");
    for (std::size_t t = 0; t < series.size(); ++t)
        if (series[t] < 0) throw SchemaError(t + 1, 1, "negative entry");
    Dataset out;
    out.kind = DatasetKind::CountSeries;
    out.summary = summarise(series, series.size(), 1);
    out.series = std::move(series);
    return out;
}

Dataset make_raster(const StatePoint& raster, const LatticeGeometry& geometry)
{
    if (raster.size() != geometry.sites() || raster.empty()) throw ConfigError("raster size does not match its geometry");
    Dataset out;
    out.kind = DatasetKind::LatticeRaster;
    out.geometry = geometry;
    for (std::size_t i = 0; i < raster.size(); ++i)
        if (raster[i] < 0) throw SchemaError(i / geometry.cols + 1, i % geometry.cols + 1, "negative entry");
    out.states = *std::max_element(raster.begin(), raster.end()) + 1;
    if (out.states < 2) out.states = 2;
    out.summary = summarise(raster, geometry.rows, geometry.cols);
    out.samples = {raster};
    return out;
}

Dataset parse_dataset(const std::string& text, DatasetKind kind)
{
    const CsvTable t = parse_csv(text);
    std::size_t first = 0;
    if (!t.rows.empty() && !std::all_of(t.rows[0].begin(), t.rows[0].end(), integer_like)) first = 1;
    if (t.rows.size() <= first) throw ConfigError("input has no data rows");

    const std::size_t width = t.rows[first].size();
    std::vector<std::vector<std::int64_t>> rows;
    for (std::size_t r = first; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row.size() != width)
            throw SchemaError(t.lines[r], 0,
                              "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(width));
        std::vector<std::int64_t> vals(width);
        for (std::size_t c = 0; c < width; ++c) vals[c] = parse_count(row[c], t.lines[r], c + 1);
        rows.push_back(std::move(vals));
    }

    switch (kind) {
    case DatasetKind::CountMatrix:
        return make_count_matrix({rows.begin(), rows.end()});
    case DatasetKind::CountSeries: {
        std::vector<std::int64_t> s;
        if (width == 1) {
            for (auto& r : rows) s.push_back(r[0]);
        } else if (rows.size() == 1) {
            s = rows[0];
        } else {
            throw SchemaError(t.lines[first], 0, "count series must be a single column or a single row");
        }
        return make_count_series(std::move(s));
    }
    case DatasetKind::LatticeRaster: {
        StatePoint flat;
        for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        return make_raster(flat, LatticeGeometry{rows.size(), width});
    }
    }
    throw ConfigError("unknown dataset kind");
}

Dataset ingest_dataset(const std::filesystem::path& path, DatasetKind kind)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), kind);
}

std::string dataset_csv(const Dataset& data)
{
    switch (data.kind) {
    case DatasetKind::CountSeries: {
        CsvWriter w({"t", "count"});
        for (std::size_t t = 0; t < data.series.size(); ++t) {
            w.cell(t).cell(data.series[t]);
            w.end_row();
        }
        return w.text();
    }
    case DatasetKind::CountMatrix: {
        const std::size_t d = data.samples.empty() ? 0 : data.samples.front().size();
        std::vector<std::string> header;
        for (std::size_t j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
        CsvWriter w(header);
        for (const auto& x : data.samples) {
            for (auto v : x) w.cell(v);
            w.end_row();
        }
        return w.text();
    }
    case DatasetKind::LatticeRaster: {
        std::vector<std::string> header;
        for (std::size_t j = 0; j < data.geometry.cols; ++j) header.push_back("c" + std::to_string(j + 1));
        CsvWriter w(header);
        const auto& x = data.samples.front();
        for (std::size_t r = 0; r < data.geometry.rows; ++r) {
            for (std::size_t c = 0; c < data.geometry.cols; ++c) w.cell(x[r * data.geometry.cols + c]);
            w.end_row();
        }
        return w.text();
    }
    }
    return {};
}

// ---- synthetic stand-ins

Eigen::VectorXd synthetic_count_matrix_truth(std::size_t d)
{
    const CmpGraphical model(d);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(model.dimension()));
    for (std::size_t i = 0; i < d; ++i) theta(static_cast<Eigen::Index>(i)) = 1.0 + 0.1 * static_cast<double>(i % 3);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            theta(static_cast<Eigen::Index>(model.pair_index(i, j))) = (j == i + 1) ? 0.05 : 0.01;
    theta.tail(static_cast<Eigen::Index>(d)).setConstant(1.0);
    return theta;
}

Dataset synthetic_count_matrix(std::size_t n, std::size_t d, std::uint64_t seed)
{
    if (n == 0 || d == 0) throw ConfigError("synthetic count matrix needs n, d >= 1");
    const CmpGraphical model(d);
    const Eigen::VectorXd truth = synthetic_count_matrix_truth(d);
    Rng rng = make_rng({.seed = seed, .stream = 101});
    PredictiveOptions po;
    po.burn_in = 2000;
    po.thin = 20;
    auto rows = mh_posterior_predictive_cmp_graphical(model, truth.transpose(), n, po, rng);
    return make_count_matrix(std::move(rows));
}

Dataset synthetic_count_series(std::size_t length, std::uint64_t seed)
{
    Rng rng = make_rng({.seed = seed, .stream = 102});
    return make_count_series(simulate_ingarch(Eigen::Vector3d(0.7, 0.4, 1.0), 0.3, length, rng, 1.0, 200));
}

Dataset synthetic_raster(std::size_t rows, std::size_t cols, std::int64_t states, std::uint64_t seed)
{
    if (rows == 0 || cols == 0 || states < 2) throw ConfigError("synthetic raster needs rows, cols >= 1 and states >= 2");
    Rng rng = make_rng({.seed = seed, .stream = 103});
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    const double scale = 6.0 / static_cast<double>(std::max(rows, cols));
    std::vector<double> f(rows * cols, 0.0);
    for (int k = 0; k < 12; ++k) {
        const double fx = 0.5 * z(rng) * scale, fy = 0.5 * z(rng) * scale;
        const double ph = u(rng), amp = z(rng);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                f[i * cols + j] += amp * std::cos(2.0 * std::numbers::pi * (fx * i + fy * j) + ph);
    }
    for (auto& v : f) v += 0.3 * z(rng);
    std::vector<double> sorted = f;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (std::int64_t k = 1; k < states; ++k)
        cuts.push_back(sorted[static_cast<std::size_t>(k) * sorted.size() / static_cast<std::size_t>(states)]);
    StatePoint x(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        x[i] = static_cast<std::int64_t>(std::upper_bound(cuts.begin(), cuts.end(), f[i]) - cuts.begin());
    return make_raster(x, LatticeGeometry{rows, cols});
}

} // namespace lrmbayes::harness
