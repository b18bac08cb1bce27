#include "s2cgan/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "s2cgan/checkpoint.hpp"
#include "s2cgan/error.hpp"

namespace s2cgan {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError("parse_metrics_csv: bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string metrics_csv(std::span<const MetricsRecord> history) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : history) {
    const ObjectiveBreakdown& o = r.objective;
    out += std::to_string(r.step) + "," + format_double(o.v_sup) + "," + format_double(o.v_labeller) + "," +
           format_double(o.v_unsup) + "," + format_double(o.v_full) + "," + format_double(r.label_agreement) +
           "," + format_double(r.mean_iou) + "," + format_double(r.mmd2) + "," + cell(r.marginal_tv) + "," +
           cell(r.pseudo_label_acc) + "\n";
  }
  return out;
}

void emit_metrics_csv(std::span<const MetricsRecord> history, const std::filesystem::path& path) {
  write_file_atomic(path, metrics_csv(history));
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError("parse_metrics_csv: bad header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != 10) throw FormatError("parse_metrics_csv: expected 10 columns");
    MetricsRow row;
    row.step = static_cast<std::size_t>(parse_double(cells[0]));
    for (std::size_t i = 1; i < cells.size(); ++i) {
      row.values.push_back(cells[i].empty() ? std::nullopt : std::optional<double>(parse_double(cells[i])));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

constexpr double kSize = 800.0;
constexpr double kPad = 60.0;  // room for tick labels and legend
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

const char* colour(int label) {
  const std::size_t n = std::size(kPalette);
  return kPalette[static_cast<std::size_t>(label < 0 ? 0 : label) % n];
}

void check_points(const Tensor& pts, std::span<const int> labels, const char* what) {
  if (pts.rank() == 0 && labels.empty()) return;  // no points
  if (pts.rank() != 2 || pts.cols() != 2) {
    throw ShapeError(std::string("emit_scatter_svg: ") + what + " points must be (n, 2)");
  }
  if (labels.size() != pts.rows()) {
    throw ShapeError(std::string("emit_scatter_svg: ") + what + " labels must match the point count");
  }
}

std::size_t point_count(const Tensor& pts) { return pts.rank() == 2 ? pts.rows() : 0; }

}  // namespace

std::string scatter_svg(const Tensor& real, std::span<const int> real_labels, const Tensor& fake,
                        std::span<const int> fake_labels) {
  check_points(real, real_labels, "real");
  check_points(fake, fake_labels, "generated");
  const std::size_t n_real = point_count(real);
  const std::size_t n_fake = point_count(fake);

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
  auto extend = [&](const Tensor& t, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      lo_x = std::min(lo_x, t.at(i, 0));
      hi_x = std::max(hi_x, t.at(i, 0));
      lo_y = std::min(lo_y, t.at(i, 1));
      hi_y = std::max(hi_y, t.at(i, 1));
    }
  };
  extend(real, n_real);
  extend(fake, n_fake);
  if (n_real + n_fake == 0) lo_x = lo_y = -1.0, hi_x = hi_y = 1.0;
  const double span_x = std::max(hi_x - lo_x, 1e-9);
  const double span_y = std::max(hi_y - lo_y, 1e-9);
  lo_x -= 0.1 * span_x, hi_x += 0.1 * span_x;
  lo_y -= 0.1 * span_y, hi_y += 0.1 * span_y;

  const double plot = kSize - 2.0 * kPad;
  auto px = [&](double x) { return kPad + (x - lo_x) / (hi_x - lo_x) * plot; };
  auto py = [&](double y) { return kSize - kPad - (y - lo_y) / (hi_y - lo_y) * plot; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
  s << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  s << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  s << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << plot << "\" height=\"" << plot << "\"/>\n";
  s << "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << kPad << "\" y=\"" << kSize - kPad + 18 << "\">" << num(lo_x) << "</text>\n";
  s << "<text x=\"" << kSize - kPad << "\" y=\"" << kSize - kPad + 18 << "\" text-anchor=\"end\">" << num(hi_x)
    << "</text>\n";
  s << "<text x=\"" << kPad - 6 << "\" y=\"" << kSize - kPad << "\" text-anchor=\"end\">" << num(lo_y)
    << "</text>\n";
  s << "<text x=\"" << kPad - 6 << "\" y=\"" << kPad + 12 << "\" text-anchor=\"end\">" << num(hi_y) << "</text>\n";
  s << "</g>\n";

  s << "<g class=\"real-points\">\n";
  for (std::size_t i = 0; i < n_real; ++i) {
    s << "<circle class=\"real\" cx=\"" << num(px(real.at(i, 0))) << "\" cy=\"" << num(py(real.at(i, 1)))
      << "\" r=\"3\" fill=\"" << colour(real_labels[i]) << "\" fill-opacity=\"0.6\"/>\n";
  }
  s << "</g>\n<g class=\"fake-points\" stroke-width=\"1.5\">\n";
  for (std::size_t i = 0; i < n_fake; ++i) {
    const double x = px(fake.at(i, 0));
    const double y = py(fake.at(i, 1));
    s << "<path class=\"fake\" d=\"M" << num(x - 4) << " " << num(y - 4) << "L" << num(x + 4) << " " << num(y + 4)
      << "M" << num(x - 4) << " " << num(y + 4) << "L" << num(x + 4) << " " << num(y - 4) << "\" stroke=\""
      << colour(fake_labels[i]) << "\"/>\n";
  }
  s << "</g>\n";

  int max_label = -1;
  for (int l : real_labels) max_label = std::max(max_label, l);
  for (int l : fake_labels) max_label = std::max(max_label, l);
  s << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  double ly = 20.0;
  s << "<text x=\"" << kPad << "\" y=\"" << ly + 4 << "\">o real   x generated</text>\n";
  for (int l = 0; l <= max_label; ++l) {
    const double lx = kPad + 170.0 + 80.0 * l;
    s << "<rect x=\"" << lx << "\" y=\"" << ly - 6 << "\" width=\"10\" height=\"10\" fill=\"" << colour(l)
      << "\"/><text x=\"" << lx + 14 << "\" y=\"" << ly + 4 << "\">class " << l << "</text>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

void emit_scatter_svg(const Tensor& real, std::span<const int> real_labels, const Tensor& fake,
                      std::span<const int> fake_labels, const std::filesystem::path& path) {
  write_file_atomic(path, scatter_svg(real, real_labels, fake, fake_labels));
}

}  // namespace s2cgan
