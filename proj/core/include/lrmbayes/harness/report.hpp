#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lrmbayes::harness {

// ---- CSV

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// RFC-4180 writer: CRLF line ends, fields quoted when they contain a comma, quote or line break.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& cell(std::string_view s);
    CsvWriter& cell(double v);
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(std::size_t v);
    /// Ends the current row. Throws InvariantError if it has the wrong number of cells.
    void end_row();

    std::size_t columns() const { return columns_; }
    const std::string& text() const { return out_; }

private:
    void field(std::string_view s);

    std::string out_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
};

/// Parsed RFC-4180 table; quoted fields may hold commas, doubled quotes and line breaks.
struct CsvTable {
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line on which each row starts.
    std::vector<std::size_t> lines;
};

/// Throws ConfigError naming the line of an unterminated quote.
CsvTable parse_csv(std::string_view text);

// ---- credible ellipses

/// Axes of { z : (z - c)^T S^-1 (z - c) <= level } for a 2 x 2 covariance S.
struct EllipseParams {
    double cx = 0.0, cy = 0.0;
    double semi_major = 0.0, semi_minor = 0.0;
    double angle = 0.0; ///< radians from the x axis to the major axis
};

EllipseParams ellipse_params(const Eigen::Vector2d& centre, const Eigen::Matrix2d& cov, double level);

/// Boundary points of the ellipse, closed (first point repeated).
std::vector<Eigen::Vector2d> ellipse_outline(const EllipseParams& e, std::size_t points = 96);

// ---- SVG

/// A single panel with axes. Elements are given in data coordinates.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel);

    void set_log_y(bool on) { log_y_ = on; }
    void set_x_range(double lo, double hi) { xr_ = {lo, hi}; }
    void set_y_range(double lo, double hi) { yr_ = {lo, hi}; }

    void ellipse(const EllipseParams& e, const std::string& colour, const std::string& label);
    void line(std::vector<double> xs, std::vector<double> ys, const std::string& colour, const std::string& label,
              bool dashed = false);
    void points(std::vector<double> xs, std::vector<double> ys, const std::string& colour, const std::string& label);
    /// Symmetric vertical error bars.
    void error_bars(std::vector<double> xs, std::vector<double> ys, std::vector<double> err,
                    const std::string& colour, const std::string& label);
    /// Bars over [edges[i], edges[i+1]) with the given heights.
    void histogram(std::vector<double> edges, std::vector<double> heights, const std::string& colour,
                   const std::string& label, double opacity = 0.5);
    void vline(double x, const std::string& colour);
    void hline(double y, const std::string& colour);

    /// SVG group drawn into the box (x, y, w, h) of the parent document.
    std::string render(double x, double y, double w, double h) const;

private:
    struct Element {
        enum class Kind { Path, Points, Bars, ErrorBars, VLine, HLine } kind;
        std::vector<double> xs, ys, extra;
        std::string colour, label, title;
        bool closed = false;
        bool dashed = false;
        double opacity = 1.0;
    };
    std::pair<double, double> x_extent() const;
    std::pair<double, double> y_extent() const;

    std::string title_, xlabel_, ylabel_;
    std::vector<Element> elements_;
    std::optional<std::pair<double, double>> xr_, yr_;
    bool log_y_ = false;
};

/// Complete SVG 1.1 document laying the panels out on a grid.
std::string render_svg(const std::vector<SvgPlot>& panels, std::size_t columns = 2, double panel_w = 420.0,
                       double panel_h = 320.0);

/// Colour for series k.
const std::string& palette(std::size_t k);

// ---- output directory and manifest

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

struct ManifestEntry {
    std::string path; ///< relative to the output directory
    std::uint64_t bytes = 0;
    std::string fnv1a64; ///< 16 hex digits
    std::string kind;    ///< csv, svg or json
};

/// Writes files into one directory and records every one of them.
class OutputDir {
public:
    /// Creates the directory. A non-empty directory is accepted only when `overwrite` is set
    /// and every file in it was listed by an earlier manifest; those files are removed.
    explicit OutputDir(std::filesystem::path root, bool overwrite = false);

    const std::filesystem::path& root() const { return root_; }
    const std::vector<ManifestEntry>& entries() const { return entries_; }

    void write(const std::string& name, const std::string& content);

    /// manifest.json listing every written file, plus `extra` JSON text under "run".
    void write_manifest(const std::string& run_json = "{}");

private:
    std::filesystem::path root_;
    std::vector<ManifestEntry> entries_;
};

/// Files present in `dir` but missing from its manifest.json (the manifest itself excluded).
std::vector<std::string> unlisted_files(const std::filesystem::path& dir);

struct ManifestCheck {
    std::size_t listed = 0;
    std::vector<std::string> missing;    ///< listed but absent
    std::vector<std::string> mismatched; ///< size or hash differs
    std::vector<std::string> unlisted;
    bool ok() const { return missing.empty() && mismatched.empty() && unlisted.empty(); }
};

/// Re-hashes every file listed in dir/manifest.json. Throws ConfigError without a readable manifest.
ManifestCheck verify_manifest(const std::filesystem::path& dir);

} // namespace lrmbayes::harness
