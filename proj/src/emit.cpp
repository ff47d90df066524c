#include "odcmp/emit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "odcmp/error.hpp"
#include "odcmp/io.hpp"

namespace odcmp {

namespace {

// (n+1)^2 presentation grid: interior cells plus the U row/column built from
// marginal relative frequencies.
struct DisplayGrid {
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<CellFlag> flags;

  size_t size() const { return labels.size(); }
  double at(size_t i, size_t j) const { return values[i * labels.size() + j]; }
  CellFlag flag(size_t i, size_t j) const { return flags[i * labels.size() + j]; }
};

CellFlag classify(double a, double b) {
  if (a > 0.0 && b > 0.0) return CellFlag::kDefined;
  if (a <= 0.0 && b <= 0.0) return CellFlag::kBothZero;
  return b <= 0.0 ? CellFlag::kZeroDenominator : CellFlag::kZeroNumerator;
}

DisplayGrid ratio_display_grid(const std::vector<double>& interior,
                               const std::vector<CellFlag>& interior_flags,
                               const std::vector<std::string>& labels, double epsilon,
                               const ClusterODMatrix& a, const ClusterODMatrix& b, bool log_scale) {
  const size_t n = labels.size();
  DisplayGrid grid;
  grid.labels = labels;
  grid.labels.push_back("U");
  const size_t m = n + 1;
  grid.values.assign(m * m, std::nan(""));
  grid.flags.assign(m * m, CellFlag::kDefined);

  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      grid.values[i * m + j] = interior[i * n + j];
      grid.flags[i * m + j] = interior_flags[i * n + j];
    }
  }

  auto marginal = [&](const ClusterODMatrix& src, size_t i, size_t j) -> double {
    // U column: share of trips starting in i; U row: share ending in j
    if (i < n && j == n) return (double)src.row_margin[i] / (double)src.grand_total;
    if (i == n && j < n) return (double)src.col_margin[j] / (double)src.grand_total;
    return 1.0;  // U,U corner
  };

  for (size_t i = 0; i <= n; ++i) {
    for (size_t j = 0; j <= n; ++j) {
      if (i < n && j < n) continue;
      double ra = marginal(a, i, j) + epsilon;
      double rb = marginal(b, i, j) + epsilon;
      CellFlag flag = classify(ra, rb);
      grid.flags[i * m + j] = flag;
      if (flag == CellFlag::kDefined) {
        grid.values[i * m + j] = log_scale ? std::log2(ra / rb) : ra / rb;
      }
    }
  }
  return grid;
}

void write_grid_csv(const std::string& path, const std::string& flags_path,
                    const DisplayGrid& grid) {
  std::ostringstream out;
  out << "origin";
  for (const auto& l : grid.labels) out << ',' << l;
  out << '\n';
  for (size_t i = 0; i < grid.size(); ++i) {
    out << grid.labels[i];
    for (size_t j = 0; j < grid.size(); ++j) {
      out << ',';
      if (grid.flag(i, j) == CellFlag::kDefined) out << format_double(grid.at(i, j));
    }
    out << '\n';
  }
  write_file(path, out.str());

  std::ostringstream flags;
  flags << "origin,dest,flag\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    for (size_t j = 0; j < grid.size(); ++j) {
      if (grid.flag(i, j) != CellFlag::kDefined) {
        flags << grid.labels[i] << ',' << grid.labels[j] << ',' << to_string(grid.flag(i, j))
              << '\n';
      }
    }
  }
  write_file(flags_path, flags.str());
}

}  // namespace

void write_od_matrix_csv(const std::string& path, const ClusterODMatrix& m) {
  std::ostringstream out;
  out << "origin";
  for (const auto& l : m.labels) out << ',' << l;
  out << ",U\n";
  for (size_t i = 0; i < m.size(); ++i) {
    out << m.labels[i];
    for (size_t j = 0; j < m.size(); ++j) out << ',' << m.at(i, j);
    out << ',' << m.row_margin[i] << '\n';
  }
  out << 'U';
  for (size_t j = 0; j < m.size(); ++j) out << ',' << m.col_margin[j];
  out << ',' << m.grand_total << '\n';
  write_file(path, out.str());
}

void write_rf_matrix_csv(const std::string& path, const RFMatrix& rf, const ClusterODMatrix& m) {
  std::ostringstream out;
  out << "origin";
  for (const auto& l : rf.labels) out << ',' << l;
  out << ",U\n";
  const double total = (double)m.grand_total;
  for (size_t i = 0; i < rf.size(); ++i) {
    out << rf.labels[i];
    for (size_t j = 0; j < rf.size(); ++j) out << ',' << format_double(rf.at(i, j));
    out << ',' << format_double((double)m.row_margin[i] / total) << '\n';
  }
  out << 'U';
  for (size_t j = 0; j < rf.size(); ++j) {
    out << ',' << format_double((double)m.col_margin[j] / total);
  }
  out << ",1\n";
  write_file(path, out.str());
}

void write_rfr_csv(const std::string& path, const std::string& flags_path, const RatioMatrix& ratio,
                   const ClusterODMatrix& a, const ClusterODMatrix& b) {
  write_grid_csv(path, flags_path,
                 ratio_display_grid(ratio.values, ratio.flags, ratio.labels, ratio.epsilon, a, b,
                                    /*log_scale=*/false));
}

void write_lrfr_csv(const std::string& path, const std::string& flags_path, const LrfrMatrix& lr,
                    const ClusterODMatrix& a, const ClusterODMatrix& b) {
  write_grid_csv(path, flags_path,
                 ratio_display_grid(lr.values, lr.flags, lr.labels, lr.epsilon, a, b,
                                    /*log_scale=*/true));
}

void write_chord_edges_csv(const std::string& path, const ClusterODMatrix& m) {
  std::ostringstream out;
  out << "source,target,value\n";
  for (size_t i = 0; i < m.size(); ++i) {
    for (size_t j = 0; j < m.size(); ++j) {
      if (m.at(i, j) > 0) out << m.labels[i] << ',' << m.labels[j] << ',' << m.at(i, j) << '\n';
    }
  }
  write_file(path, out.str());
}

void write_normalized_csv(const std::string& path, const NormalizedVectors& v) {
  std::ostringstream out;
  out << "cluster,within,from,to," << v.basis << ",flagged\n";
  for (size_t i = 0; i < v.labels.size(); ++i) {
    out << v.labels[i] << ',';
    if (!v.flagged[i]) out << format_double(v.within[i]);
    out << ',';
    if (!v.flagged[i]) out << format_double(v.from[i]);
    out << ',';
    if (!v.flagged[i]) out << format_double(v.to[i]);
    out << ',';
    if (!v.flagged[i]) out << format_double(v.denominator[i]);
    out << ',' << (v.flagged[i] ? 1 : 0) << '\n';
  }
  write_file(path, out.str());
}

void write_sampling_rates_csv(const std::string& path, const SamplingRateTable& t) {
  std::ostringstream out;
  out << "cluster,population,devices_night,devices_day,rate_night_pct,rate_day_pct\n";
  for (size_t i = 0; i < t.labels.size(); ++i) {
    out << t.labels[i] << ',' << format_double(t.population[i]) << ','
        << format_double(t.devices_night[i]) << ',' << format_double(t.devices_day[i]) << ','
        << format_double(t.rate_night_pct[i]) << ',' << format_double(t.rate_day_pct[i]) << '\n';
  }
  write_file(path, out.str());
}

namespace {

std::string lerp_color(double t, const int hi[3]) {
  // t in [0,1] from white toward hi
  char buf[8];
  int r = (int)std::lround(255 + t * (hi[0] - 255));
  int g = (int)std::lround(255 + t * (hi[1] - 255));
  int b = (int)std::lround(255 + t * (hi[2] - 255));
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_lrfr_heatmap_svg(const std::string& path, const LrfrMatrix& lr,
                            const ClusterODMatrix& a, const ClusterODMatrix& b) {
  DisplayGrid grid = ratio_display_grid(lr.values, lr.flags, lr.labels, lr.epsilon, a, b,
                                        /*log_scale=*/true);
  const size_t n = grid.size();
  const int cell = 64, margin = 80;
  const int wide = margin + (int)n * cell + 20;
  const int tall = margin + (int)n * cell + 20;

  double vmax = 0.0;
  for (size_t i = 0; i < n * n; ++i) {
    if (grid.flags[i] == CellFlag::kDefined) vmax = std::max(vmax, std::fabs(grid.values[i]));
  }
  if (vmax < 1e-9) vmax = 1.0;

  static const int kRed[3] = {0xb2, 0x18, 0x2b};
  static const int kBlue[3] = {0x21, 0x66, 0xac};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << wide << "\" height=\"" << tall
      << "\" font-family=\"monospace\" font-size=\"12\">\n";
  svg << "<defs><pattern id=\"hatch\" width=\"8\" height=\"8\" patternUnits=\"userSpaceOnUse\">"
         "<rect width=\"8\" height=\"8\" fill=\"#eeeeee\"/>"
         "<path d=\"M0,8 L8,0\" stroke=\"#999999\" stroke-width=\"1\"/></pattern></defs>\n";

  for (size_t j = 0; j < n; ++j) {
    svg << "<text x=\"" << margin + (int)j * cell + cell / 2 << "\" y=\"" << margin - 10
        << "\" text-anchor=\"middle\">" << grid.labels[j] << "</text>\n";
  }
  for (size_t i = 0; i < n; ++i) {
    svg << "<text x=\"" << margin - 10 << "\" y=\"" << margin + (int)i * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << grid.labels[i] << "</text>\n";
  }

  char value_buf[32];
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const int x = margin + (int)j * cell;
      const int y = margin + (int)i * cell;
      std::string fill;
      std::string text;
      if (grid.flag(i, j) == CellFlag::kDefined) {
        double v = grid.at(i, j);
        double t = std::min(1.0, std::fabs(v) / vmax);
        fill = lerp_color(t, v >= 0.0 ? kRed : kBlue);
        std::snprintf(value_buf, sizeof(value_buf), "%.2f", v);
        text = value_buf;
      } else {
        fill = "url(#hatch)";
        text = "n/a";
      }
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << fill << "\" stroke=\"#444444\"/>\n";
      svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\">" << text << "</text>\n";
    }
  }
  svg << "</svg>\n";
  write_file(path, svg.str());
}

}  // namespace odcmp
