#include "lrmbayes/harness/report.hpp"

#include "lrmbayes/error.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace lrmbayes::harness {

using json = nlohmann::json;

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// ---- CSV

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    if (header.empty()) throw InvariantError("CSV header must have at least one column");
    for (const auto& h : header) cell(h);
    end_row();
}

void CsvWriter::field(std::string_view s)
{
    if (in_row_ > 0) out_ += ',';
    const bool quote = s.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!quote) {
        out_ += s;
    } else {
        out_ += '"';
        for (char c : s) {
            if (c == '"') out_ += '"';
            out_ += c;
        }
        out_ += '"';
    }
    ++in_row_;
}

CsvWriter& CsvWriter::cell(std::string_view s)
{
    field(s);
    return *this;
}

CsvWriter& CsvWriter::cell(double v)
{
    field(format_double(v));
    return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t v)
{
    field(std::to_string(v));
    return *this;
}

CsvWriter& CsvWriter::cell(std::size_t v)
{
    field(std::to_string(v));
    return *this;
}

void CsvWriter::end_row()
{
    if (in_row_ != columns_)
        throw InvariantError("CSV row has " + std::to_string(in_row_) + " cells, expected " + std::to_string(columns_));
    out_ += "\r\n";
    in_row_ = 0;
}

CsvTable parse_csv(std::string_view text)
{
    CsvTable t;
    std::vector<std::string> row;
    std::string cur;
    bool quoted = false, any = false;
    std::size_t line = 1, row_line = 1, quote_line = 0;
    auto finish_row = [&] {
        row.push_back(std::move(cur));
        cur.clear();
        // a bare empty line is not a row
        if (!(row.size() == 1 && row[0].empty() && !any)) {
            t.rows.push_back(std::move(row));
            t.lines.push_back(row_line);
        }
        row.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                cur += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            quoted = true;
            any = true;
            quote_line = line;
            break;
        case ',':
            row.push_back(std::move(cur));
            cur.clear();
            any = true;
            break;
        case '\r':
            break;
        case '\n':
            finish_row();
            row_line = ++line;
            break;
        default:
            cur += c;
            any = true;
        }
    }
    if (quoted) throw ConfigError("line " + std::to_string(quote_line) + ": unterminated quoted field");
    if (any || !row.empty()) finish_row();
    return t;
}

// ---- ellipses

EllipseParams ellipse_params(const Eigen::Vector2d& centre, const Eigen::Matrix2d& cov, double level)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (cov + cov.transpose()));
    if (es.info() != Eigen::Success || es.eigenvalues()(0) < 0.0)
        throw NumericalError("ellipse covariance is not positive semi-definite");
    EllipseParams e;
    e.cx = centre(0);
    e.cy = centre(1);
    e.semi_major = std::sqrt(level * es.eigenvalues()(1));
    e.semi_minor = std::sqrt(level * std::max(es.eigenvalues()(0), 0.0));
    const Eigen::Vector2d v = es.eigenvectors().col(1);
    e.angle = std::atan2(v(1), v(0));
    if (e.angle <= -std::numbers::pi / 2) e.angle += std::numbers::pi;
    if (e.angle > std::numbers::pi / 2) e.angle -= std::numbers::pi;
    return e;
}

std::vector<Eigen::Vector2d> ellipse_outline(const EllipseParams& e, std::size_t points)
{
    std::vector<Eigen::Vector2d> out;
    out.reserve(points + 1);
    const double ca = std::cos(e.angle), sa = std::sin(e.angle);
    for (std::size_t k = 0; k <= points; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k % points) / static_cast<double>(points);
        const double u = e.semi_major * std::cos(t), v = e.semi_minor * std::sin(t);
        out.emplace_back(e.cx + ca * u - sa * v, e.cy + sa * u + ca * v);
    }
    return out;
}

// ---- SVG

namespace {

std::string esc(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

std::string px(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::vector<double> nice_ticks(double lo, double hi, int target = 6)
{
    std::vector<double> out;
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

const std::string& palette(std::size_t k)
{
    static const std::array<std::string, 8> colours{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    return colours[k % colours.size()];
}

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel))
{
}

void SvgPlot::ellipse(const EllipseParams& e, const std::string& colour, const std::string& label)
{
    Element el{Element::Kind::Path, {}, {}, {}, colour, label, {}};
    for (const auto& p : ellipse_outline(e)) {
        el.xs.push_back(p(0));
        el.ys.push_back(p(1));
    }
    el.closed = true;
    el.title = label + ": centre (" + format_double(e.cx) + ", " + format_double(e.cy) + ")";
    elements_.push_back(std::move(el));
    points({e.cx}, {e.cy}, colour, "");
}

void SvgPlot::line(std::vector<double> xs, std::vector<double> ys, const std::string& colour, const std::string& label,
                   bool dashed)
{
    Element el{Element::Kind::Path, std::move(xs), std::move(ys), {}, colour, label, {}};
    el.dashed = dashed;
    elements_.push_back(std::move(el));
}

void SvgPlot::points(std::vector<double> xs, std::vector<double> ys, const std::string& colour,
                     const std::string& label)
{
    elements_.push_back({Element::Kind::Points, std::move(xs), std::move(ys), {}, colour, label, {}});
}

void SvgPlot::error_bars(std::vector<double> xs, std::vector<double> ys, std::vector<double> err,
                         const std::string& colour, const std::string& label)
{
    elements_.push_back({Element::Kind::ErrorBars, std::move(xs), std::move(ys), std::move(err), colour, label, {}});
}

void SvgPlot::histogram(std::vector<double> edges, std::vector<double> heights, const std::string& colour,
                        const std::string& label, double opacity)
{
    if (edges.size() != heights.size() + 1) throw InvariantError("histogram needs one more edge than bar");
    Element el{Element::Kind::Bars, std::move(edges), std::move(heights), {}, colour, label, {}};
    el.opacity = opacity;
    elements_.push_back(std::move(el));
}

void SvgPlot::vline(double x, const std::string& colour)
{
    Element el{Element::Kind::VLine, {x}, {}, {}, colour, "", {}};
    el.dashed = true;
    elements_.push_back(std::move(el));
}

void SvgPlot::hline(double y, const std::string& colour)
{
    Element el{Element::Kind::HLine, {}, {y}, {}, colour, "", {}};
    el.dashed = true;
    elements_.push_back(std::move(el));
}

std::pair<double, double> SvgPlot::x_extent() const
{
    if (xr_) return *xr_;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& e : elements_) {
        if (e.kind == Element::Kind::HLine) continue;
        for (double x : e.xs)
            if (std::isfinite(x)) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
    }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::pair<double, double> SvgPlot::y_extent() const
{
    if (yr_) return *yr_;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto take = [&](double y) {
        if (!std::isfinite(y) || (log_y_ && y <= 0.0)) return;
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    };
    for (const auto& e : elements_) {
        if (e.kind == Element::Kind::VLine) continue;
        for (std::size_t i = 0; i < e.ys.size(); ++i) {
            take(e.ys[i]);
            if (e.kind == Element::Kind::ErrorBars) {
                take(e.ys[i] - e.extra[i]);
                take(e.ys[i] + e.extra[i]);
            }
        }
        if (e.kind == Element::Kind::Bars && !log_y_) take(0.0);
    }
    if (!std::isfinite(lo)) return {log_y_ ? 0.1 : 0.0, 1.0};
    if (log_y_) return {lo / 1.5, hi * 1.5};
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::string SvgPlot::render(double x, double y, double w, double h) const
{
    const double ml = 62, mr = 12, mt = 28, mb = 44;
    const double pw = w - ml - mr, ph = h - mt - mb;
    const auto [x0, x1] = x_extent();
    auto [y0, y1] = y_extent();
    const auto ty = [&](double v) { return log_y_ ? std::log10(std::max(v, 1e-300)) : v; };
    const double ly0 = ty(y0), ly1 = ty(y1);
    const auto sx = [&](double v) { return x + ml + (v - x0) / (x1 - x0) * pw; };
    const auto sy = [&](double v) { return y + mt + ph - (ty(v) - ly0) / (ly1 - ly0) * ph; };

    std::ostringstream o;
    o << "<g>\n";
    o << "<rect x=\"" << px(x + ml) << "\" y=\"" << px(y + mt) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << px(x + ml + pw / 2) << "\" y=\"" << px(y + 18)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << esc(title_) << "</text>\n";
    o << "<text x=\"" << px(x + ml + pw / 2) << "\" y=\"" << px(y + h - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << esc(xlabel_) << "</text>\n";
    o << "<text x=\"" << px(x + 14) << "\" y=\"" << px(y + mt + ph / 2) << "\" text-anchor=\"middle\" font-size=\"11\""
      << " transform=\"rotate(-90 " << px(x + 14) << ' ' << px(y + mt + ph / 2) << ")\">" << esc(ylabel_)
      << "</text>\n";

    for (double t : nice_ticks(x0, x1)) {
        o << "<line x1=\"" << px(sx(t)) << "\" y1=\"" << px(y + mt + ph) << "\" x2=\"" << px(sx(t)) << "\" y2=\""
          << px(y + mt + ph + 4) << "\" stroke=\"#444\"/>";
        o << "<text x=\"" << px(sx(t)) << "\" y=\"" << px(y + mt + ph + 16)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(t) << "</text>\n";
    }
    std::vector<double> yt;
    if (log_y_) {
        for (double e = std::ceil(ly0); e <= ly1; e += 1.0) yt.push_back(std::pow(10.0, e));
        if (yt.empty()) yt = {y0, y1};
    } else {
        yt = nice_ticks(y0, y1);
    }
    for (double t : yt) {
        o << "<line x1=\"" << px(x + ml - 4) << "\" y1=\"" << px(sy(t)) << "\" x2=\"" << px(x + ml) << "\" y2=\""
          << px(sy(t)) << "\" stroke=\"#444\"/>";
        o << "<text x=\"" << px(x + ml - 6) << "\" y=\"" << px(sy(t) + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(t) << "</text>\n";
    }

    o << "<svg x=\"" << px(x + ml) << "\" y=\"" << px(y + mt) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
      << "\" viewBox=\"" << px(x + ml) << ' ' << px(y + mt) << ' ' << px(pw) << ' ' << px(ph) << "\">\n";
    for (const auto& e : elements_) {
        const std::string dash = e.dashed ? " stroke-dasharray=\"5,3\"" : "";
        switch (e.kind) {
        case Element::Kind::Path: {
            o << "<path d=\"";
            bool pen = false;
            for (std::size_t i = 0; i < e.xs.size(); ++i) {
                if (!std::isfinite(e.xs[i]) || !std::isfinite(e.ys[i]) || (log_y_ && e.ys[i] <= 0.0)) {
                    pen = false;
                    continue;
                }
                o << (pen ? 'L' : 'M') << px(sx(e.xs[i])) << ',' << px(sy(e.ys[i])) << ' ';
                pen = true;
            }
            if (e.closed) o << 'Z';
            o << "\" fill=\"none\" stroke=\"" << e.colour << "\" stroke-width=\"1.6\"" << dash << ">";
            if (!e.title.empty()) o << "<title>" << esc(e.title) << "</title>";
            o << "</path>\n";
            break;
        }
        case Element::Kind::Points:
            for (std::size_t i = 0; i < e.xs.size(); ++i)
                o << "<circle cx=\"" << px(sx(e.xs[i])) << "\" cy=\"" << px(sy(e.ys[i])) << "\" r=\"2.5\" fill=\""
                  << e.colour << "\"/>\n";
            break;
        case Element::Kind::ErrorBars:
            for (std::size_t i = 0; i < e.xs.size(); ++i) {
                const double cx = sx(e.xs[i]);
                o << "<line x1=\"" << px(cx) << "\" y1=\"" << px(sy(e.ys[i] - e.extra[i])) << "\" x2=\"" << px(cx)
                  << "\" y2=\"" << px(sy(e.ys[i] + e.extra[i])) << "\" stroke=\"" << e.colour << "\"/>";
                o << "<circle cx=\"" << px(cx) << "\" cy=\"" << px(sy(e.ys[i])) << "\" r=\"3\" fill=\"" << e.colour
                  << "\"/>\n";
            }
            break;
        case Element::Kind::Bars:
            for (std::size_t i = 0; i < e.ys.size(); ++i) {
                const double base = log_y_ ? y0 : 0.0;
                const double top = sy(e.ys[i]), bottom = sy(base);
                o << "<rect x=\"" << px(sx(e.xs[i])) << "\" y=\"" << px(std::min(top, bottom)) << "\" width=\""
                  << px(sx(e.xs[i + 1]) - sx(e.xs[i])) << "\" height=\"" << px(std::abs(bottom - top))
                  << "\" fill=\"" << e.colour << "\" fill-opacity=\"" << px(e.opacity) << "\"/>\n";
            }
            break;
        case Element::Kind::VLine:
            o << "<line x1=\"" << px(sx(e.xs[0])) << "\" y1=\"" << px(y + mt) << "\" x2=\"" << px(sx(e.xs[0]))
              << "\" y2=\"" << px(y + mt + ph) << "\" stroke=\"" << e.colour << "\"" << dash << "/>\n";
            break;
        case Element::Kind::HLine:
            o << "<line x1=\"" << px(x + ml) << "\" y1=\"" << px(sy(e.ys[0])) << "\" x2=\"" << px(x + ml + pw)
              << "\" y2=\"" << px(sy(e.ys[0])) << "\" stroke=\"" << e.colour << "\"" << dash << "/>\n";
            break;
        }
    }
    o << "</svg>\n";

    // legend
    std::set<std::string> shown;
    double ly = y + mt + 12;
    for (const auto& e : elements_) {
        if (e.label.empty() || !shown.insert(e.label).second) continue;
        o << "<rect x=\"" << px(x + ml + pw - 130) << "\" y=\"" << px(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
          << e.colour << "\"/><text x=\"" << px(x + ml + pw - 116) << "\" y=\"" << px(ly + 1)
          << "\" font-size=\"10\">" << esc(e.label) << "</text>\n";
        ly += 14;
    }
    o << "</g>\n";
    return o.str();
}

std::string render_svg(const std::vector<SvgPlot>& panels, std::size_t columns, double panel_w, double panel_h)
{
    columns = std::max<std::size_t>(1, std::min(columns, std::max<std::size_t>(panels.size(), 1)));
    const std::size_t rows = (panels.size() + columns - 1) / columns;
    const double W = panel_w * static_cast<double>(columns), H = panel_h * static_cast<double>(std::max<std::size_t>(rows, 1));
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << px(W) << "\" height=\"" << px(H)
      << "\" viewBox=\"0 0 " << px(W) << ' ' << px(H) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t k = 0; k < panels.size(); ++k)
        o << panels[k].render(panel_w * static_cast<double>(k % columns), panel_h * static_cast<double>(k / columns),
                              panel_w, panel_h);
    o << "</svg>\n";
    return o.str();
}

// ---- manifest

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::set<std::string> manifest_names(const std::filesystem::path& dir)
{
    std::set<std::string> names;
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) return names;
    try {
        const json j = json::parse(in);
        for (const auto& f : j.at("files")) names.insert(f.at("path").get<std::string>());
    } catch (const json::exception&) {
    }
    return names;
}

} // namespace

OutputDir::OutputDir(std::filesystem::path root, bool overwrite) : root_(std::move(root))
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec || !fs::is_directory(root_))
        throw ConfigError("cannot create output directory " + root_.string());
    std::vector<fs::path> present;
    for (const auto& e : fs::directory_iterator(root_)) present.push_back(e.path());
    if (present.empty()) return;
    if (!overwrite) throw ConfigError("output directory " + root_.string() + " is not empty");
    const auto listed = manifest_names(root_);
    for (const auto& p : present) {
        const auto name = p.filename().string();
        if (name != "manifest.json" && !listed.count(name))
            throw ConfigError("output directory holds " + name + ", which no earlier manifest lists");
    }
    for (const auto& p : present) fs::remove(p);
}

void OutputDir::write(const std::string& name, const std::string& content)
{
    if (name.empty() || name.find('/') != std::string::npos || name == "manifest.json")
        throw InvariantError("invalid output file name '" + name + "'");
    std::ofstream out(root_ / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw ConfigError("cannot write " + (root_ / name).string());
    const auto dot = name.rfind('.');
    ManifestEntry e{name, content.size(), hex64(fnv1a64(content)), dot == std::string::npos ? "" : name.substr(dot + 1)};
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& x) { return x.path == name; });
    if (it != entries_.end())
        *it = e;
    else
        entries_.push_back(e);
}

void OutputDir::write_manifest(const std::string& run_json)
{
    json j;
    j["run"] = json::parse(run_json);
    j["hash"] = "fnv1a64";
    j["files"] = json::array();
    for (const auto& e : entries_)
        j["files"].push_back({{"path", e.path}, {"bytes", e.bytes}, {"fnv1a64", e.fnv1a64}, {"kind", e.kind}});
    std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("cannot write manifest in " + root_.string());
}

std::vector<std::string> unlisted_files(const std::filesystem::path& dir)
{
    const auto listed = manifest_names(dir);
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name != "manifest.json" && !listed.count(name)) out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

ManifestCheck verify_manifest(const std::filesystem::path& dir)
{
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) throw ConfigError("no manifest.json in " + dir.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("manifest.json in " + dir.string() + " is not valid JSON: " + e.what());
    }
    ManifestCheck c;
    for (const auto& f : j.value("files", json::array())) {
        ++c.listed;
        const auto name = f.value("path", std::string());
        std::ifstream file(dir / name, std::ios::binary);
        if (!file) {
            c.missing.push_back(name);
            continue;
        }
        std::ostringstream buf;
        buf << file.rdbuf();
        const std::string bytes = buf.str();
        if (bytes.size() != f.value("bytes", std::uint64_t{0}) || hex64(fnv1a64(bytes)) != f.value("fnv1a64", std::string()))
            c.mismatched.push_back(name);
    }
    c.unlisted = unlisted_files(dir);
    return c;
}

} // namespace lrmbayes::harness
