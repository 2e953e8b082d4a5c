#include "sgw/plot.hpp"

#include "sgw/csv.hpp"
#include "sgw/error.hpp"
#include "sgw/gsgw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace sgw::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 0.0) {
      const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= d;
      hi += d;
    }
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
}

void axis_labels(std::ostringstream& out, const std::string& x, const std::string& y) {
  out << "<text x=\"" << coord(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << xml_escape(x) << "</text>\n"
      << "<text transform=\"translate(16," << coord(kTop + (kHeight - kTop - kBottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y) << "</text>\n";
}

// Simple blue-to-yellow ramp.
std::string ramp(double t) {
  static constexpr std::array<std::array<double, 3>, 4> stops = {
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

std::size_t column(const csv::Table& table, const std::string& name, const std::filesystem::path& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end())
    throw ParseError("'" + path.string() + "' has no column '" + name + "'", 1);
  return static_cast<std::size_t>(it - table.header.begin());
}

}  // namespace

std::string render_svg(const LineChart& chart) {
  Range xr;
  Range yr;
  for (const Series& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.add(s.x[i]);
      if (!chart.log_y || s.y[i] > 0.0) yr.add(chart.log_y ? std::log10(s.y[i]) : s.y[i]);
    }
  }
  xr.pad();
  yr.pad();

  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;

  std::ostringstream out;
  header(out, chart.title);
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\""
      << y0 - y1 << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    const double px = xr.map(xv, x0, x1);
    const double py = yr.map(yv, y0, y1);
    out << "<text x=\"" << coord(px) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(xv)
        << "</text>\n"
        << "<text x=\"" << x0 - 6 << "\" y=\"" << coord(py + 4) << "\" text-anchor=\"end\">"
        << (chart.log_y ? "1e" + num(yv) : num(yv)) << "</text>\n"
        << "<line x1=\"" << x0 << "\" x2=\"" << x1 << "\" y1=\"" << coord(py) << "\" y2=\""
        << coord(py) << "\" stroke=\"#ddd\"/>\n";
  }
  axis_labels(out, chart.x_label, chart.y_label);

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const char* color = kPalette[k % kPalette.size()];
    out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (chart.log_y && !(s.y[i] > 0.0)) continue;
      const double yv = chart.log_y ? std::log10(s.y[i]) : s.y[i];
      out << coord(xr.map(s.x[i], x0, x1)) << ',' << coord(yr.map(yv, y0, y1)) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << x1 + 10 << "\" x2=\"" << x1 + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << x1 + 35 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_svg(const Heatmap& map) {
  Range vr;
  for (const auto& row : map.cells)
    for (double v : row) vr.add(v);
  vr.pad();

  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;
  const double cw = (x1 - x0) / static_cast<double>(std::max<std::size_t>(1, map.cols.size()));
  const double ch = (y0 - y1) / static_cast<double>(std::max<std::size_t>(1, map.rows.size()));

  std::ostringstream out;
  header(out, map.title);
  for (std::size_t r = 0; r < map.rows.size(); ++r) {
    // First row at the bottom.
    const double py = y0 - ch * static_cast<double>(r + 1);
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << coord(py + ch / 2 + 4) << "\" text-anchor=\"end\">"
        << xml_escape(map.rows[r]) << "</text>\n";
    for (std::size_t c = 0; c < map.cols.size(); ++c) {
      const double v = map.cells[r][c];
      const std::string fill = std::isfinite(v) ? ramp((v - vr.lo) / (vr.hi - vr.lo)) : "#bbbbbb";
      out << "<rect class=\"cell\" x=\"" << coord(x0 + cw * static_cast<double>(c)) << "\" y=\""
          << coord(py) << "\" width=\"" << coord(cw) << "\" height=\"" << coord(ch) << "\" fill=\""
          << fill << "\"><title>" << xml_escape(map.rows[r]) << ", " << xml_escape(map.cols[c])
          << ": " << num(v) << "</title></rect>\n";
    }
  }
  for (std::size_t c = 0; c < map.cols.size(); ++c) {
    out << "<text x=\"" << coord(x0 + cw * (static_cast<double>(c) + 0.5)) << "\" y=\"" << y0 + 16
        << "\" text-anchor=\"middle\">" << xml_escape(map.cols[c]) << "</text>\n";
  }
  axis_labels(out, map.col_label, map.row_label);

  // Colour bar.
  const int steps = 20;
  const double bh = (y0 - y1) / steps;
  for (int i = 0; i < steps; ++i) {
    out << "<rect x=\"" << x1 + 20 << "\" y=\"" << coord(y0 - bh * (i + 1)) << "\" width=\"18\" height=\""
        << coord(bh + 0.5) << "\" fill=\"" << ramp((i + 0.5) / steps) << "\"/>\n";
  }
  out << "<text x=\"" << x1 + 44 << "\" y=\"" << y0 << "\">" << num(vr.lo) << "</text>\n"
      << "<text x=\"" << x1 + 44 << "\" y=\"" << y1 + 10 << "\">" << num(vr.hi) << "</text>\n"
      << "</svg>\n";
  return out.str();
}

LineChart nmse_chart(const std::filesystem::path& nmse_csv) {
  const csv::Table table = csv::read(nmse_csv);
  const std::size_t kc = column(table, "k", nmse_csv);
  const std::size_t ec = column(table, "nmse", nmse_csv);
  if (table.rows.empty()) throw ParseError("'" + nmse_csv.string() + "' has no data rows", 2);
  Series s{"NMSE", {}, {}};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    s.x.push_back(static_cast<double>(csv::to_int(table.rows[r][kc], table.lines[r])));
    s.y.push_back(csv::to_double(table.rows[r][ec], table.lines[r]));
  }
  return {"Reconstruction error", "number of eigenfunctions k", "NMSE", {std::move(s)}, true};
}

LineChart gsgw_chart(const std::filesystem::path& gsgw_csv) {
  const std::vector<GsgwRow> rows = read_gsgw_csv(gsgw_csv);
  if (rows.empty()) throw ParseError("'" + gsgw_csv.string() + "' has no data rows", 2);
  LineChart chart{"GSGW descriptors", "entry", "value", {}, false};
  for (const GsgwRow& row : rows) {
    Series s{row.label.empty() ? row.id : row.id + " (" + row.label + ")", {}, {}};
    for (Eigen::Index i = 0; i < row.values.size(); ++i) {
      s.x.push_back(static_cast<double>(i + 1));
      s.y.push_back(row.values[i]);
    }
    chart.series.push_back(std::move(s));
  }
  return chart;
}

Heatmap sweep_heatmap(const std::filesystem::path& sweep_csv, const std::string& value,
                      const std::string& bone, const std::string& side) {
  const csv::Table table = csv::read(sweep_csv);
  const std::size_t rc = column(table, "R", sweep_csv);
  const std::size_t kc = column(table, "k", sweep_csv);
  const std::size_t bc = column(table, "bone", sweep_csv);
  const std::size_t sc = column(table, "side", sweep_csv);
  const std::size_t vc = column(table, value, sweep_csv);
  if (table.rows.empty()) throw ParseError("'" + sweep_csv.string() + "' has no data rows", 2);

  std::string want_bone = bone;
  std::string want_side = side;
  if (want_bone.empty()) want_bone = table.rows.front()[bc];
  if (want_side.empty()) want_side = table.rows.front()[sc];

  std::map<long long, std::map<long long, double>> grid;
  std::map<long long, bool> ks;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    if (f[bc] != want_bone || f[sc] != want_side) continue;
    const long long rv = csv::to_int(f[rc], table.lines[r]);
    const long long kv = csv::to_int(f[kc], table.lines[r]);
    grid[rv][kv] = f[vc].empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : csv::to_double(f[vc], table.lines[r]);
    ks[kv] = true;
  }
  if (grid.empty())
    throw ParseError("no rows for stratum " + want_bone + "/" + want_side, 2);

  Heatmap map{value + " (" + want_bone + ", " + want_side + ")", "R", "k", {}, {}, {}};
  for (const auto& [k, unused] : ks) map.cols.push_back(std::to_string(k));
  for (const auto& [rv, row] : grid) {
    map.rows.push_back(std::to_string(rv));
    std::vector<double> cells;
    for (const auto& [k, unused] : ks) {
      const auto it = row.find(k);
      cells.push_back(it == row.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
    }
    map.cells.push_back(std::move(cells));
  }
  return map;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace sgw::plot
