#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "attrib/error.h"
#include "attrib/report.h"

namespace attrib {
namespace {

constexpr double kWidth = 720;
constexpr double kMarginTop = 40;
constexpr double kMarginBottom = 50;
constexpr const char* kPositive = "#e8710a";
constexpr const char* kNegative = "#1f77b4";
constexpr const char* kNeutral = "#4c72b0";

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Num(double v) {
  if (!std::isfinite(v)) v = 0.0;
  std::string s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

struct Range {
  double lo = 0.0, hi = 1.0;

  void Pad() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double Map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Range RangeOf(const std::vector<double>& values) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  if (!std::isfinite(r.lo)) r = {0.0, 1.0};
  r.Pad();
  return r;
}

class Svg {
 public:
  Svg(double width, double height) : width_(width), height_(height) {
    out_ = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
        "viewBox=\"0 0 {0} {1}\">\n"
        "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
        Num(width), Num(height));
  }

  void Text(double x, double y, const std::string& text, const char* anchor = "start",
            int size = 12, bool rotate = false) {
    out_ += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" "
                        "text-anchor=\"{}\"",
                        Num(x), Num(y), size, anchor);
    if (rotate) out_ += fmt::format(" transform=\"rotate(-90 {} {})\"", Num(x), Num(y));
    out_ += ">" + Escape(text) + "</text>\n";
  }
  void Line(double x1, double y1, double x2, double y2, const char* color, double width,
            const char* dash = nullptr) {
    out_ += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" "
                        "stroke-width=\"{}\"",
                        Num(x1), Num(y1), Num(x2), Num(y2), color, Num(width));
    if (dash) out_ += fmt::format(" stroke-dasharray=\"{}\"", dash);
    out_ += "/>\n";
  }
  void Rect(double x, double y, double w, double h, const char* color) {
    out_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                        Num(x), Num(y), Num(std::max(w, 0.0)), Num(std::max(h, 0.0)), color);
  }
  void Circle(double x, double y, double r, const char* color) {
    out_ += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" "
                        "fill-opacity=\"0.7\"/>\n",
                        Num(x), Num(y), Num(r), color);
  }
  void Polyline(const std::vector<std::pair<double, double>>& points, const char* color,
                double width, double opacity) {
    out_ += "<polyline fill=\"none\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i) out_ += ' ';
      out_ += Num(points[i].first) + "," + Num(points[i].second);
    }
    out_ += fmt::format("\" stroke=\"{}\" stroke-width=\"{}\" stroke-opacity=\"{}\"/>\n",
                        color, Num(width), Num(opacity));
  }

  std::string Finish() {
    out_ += "</svg>\n";
    return std::move(out_);
  }
  double width() const { return width_; }
  double height() const { return height_; }

 private:
  double width_, height_;
  std::string out_;
};

void Title(Svg& svg, const PlotSpec& spec) {
  svg.Text(svg.width() / 2, 24, spec.title, "middle", 15);
}

// Horizontal bars, one per category.
std::string RenderBars(const PlotSpec& spec, bool signed_colors) {
  const auto& values = spec.series[0].y;
  const std::size_t n = values.size();
  const double row = 26;
  const double left = 260, right = spec.annotations.empty() ? 40 : 140;
  Svg svg(kWidth, kMarginTop + row * static_cast<double>(n) + kMarginBottom);
  Title(svg, spec);

  std::vector<double> extent = values;
  extent.push_back(0.0);
  for (std::size_t i = 0; i < spec.errors.size(); ++i) {
    extent.push_back(values[i] + spec.errors[i]);
    extent.push_back(values[i] - spec.errors[i]);
  }
  Range r = RangeOf(extent);
  const double x0 = left, x1 = kWidth - right;
  const double zero = r.Map(0.0, x0, x1);
  const double bottom = kMarginTop + row * static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double y = kMarginTop + row * static_cast<double>(i);
    const double xv = r.Map(values[i], x0, x1);
    const char* color = signed_colors ? (values[i] >= 0 ? kPositive : kNegative) : kNeutral;
    svg.Rect(std::min(zero, xv), y + 4, std::abs(xv - zero), row - 8, color);
    svg.Text(x0 - 8, y + row / 2 + 4, spec.categories[i], "end");
    if (!spec.errors.empty()) {
      const double lo = r.Map(values[i] - spec.errors[i], x0, x1);
      const double hi = r.Map(values[i] + spec.errors[i], x0, x1);
      svg.Line(lo, y + row / 2, hi, y + row / 2, "#000000", 1.5);
    }
    if (!spec.annotations.empty()) {
      svg.Text(kWidth - right + 12, y + row / 2 + 4, spec.annotations[i]);
    }
  }
  svg.Line(zero, kMarginTop, zero, bottom, "#333333", 1);
  svg.Line(x0, bottom, x1, bottom, "#333333", 1);
  svg.Text(x0, bottom + 16, Num(r.lo), "middle", 10);
  svg.Text(x1, bottom + 16, Num(r.hi), "middle", 10);
  svg.Text((x0 + x1) / 2, bottom + 36, spec.x_label, "middle");
  return svg.Finish();
}

std::string RenderXY(const PlotSpec& spec) {
  const double height = 480;
  const double x0 = 80, x1 = kWidth - 30, y0 = height - kMarginBottom - 10, y1 = kMarginTop;
  Svg svg(kWidth, height);
  Title(svg, spec);

  std::vector<double> xs, ys;
  for (const auto& s : spec.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  Range rx = RangeOf(xs), ry = RangeOf(ys);
  if (spec.kind == PlotKind::kScatter) {
    rx = ry = RangeOf({rx.lo, rx.hi, ry.lo, ry.hi});
  }

  svg.Line(x0, y0, x1, y0, "#333333", 1);
  svg.Line(x0, y0, x0, y1, "#333333", 1);
  svg.Text(x0, y0 + 16, Num(rx.lo), "middle", 10);
  svg.Text(x1, y0 + 16, Num(rx.hi), "middle", 10);
  svg.Text(x0 - 6, y0, Num(ry.lo), "end", 10);
  svg.Text(x0 - 6, y1 + 4, Num(ry.hi), "end", 10);
  svg.Text((x0 + x1) / 2, y0 + 36, spec.x_label, "middle");
  svg.Text(24, (y0 + y1) / 2, spec.y_label, "middle", 12, true);

  auto point = [&](double x, double y) {
    return std::make_pair(rx.Map(x, x0, x1), ry.Map(y, y0, y1));
  };
  if (spec.kind == PlotKind::kScatter) {
    svg.Line(x0, y0, x1, y1, "#999999", 1, "4 3");
    const auto& s = spec.series[0];
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const auto [px, py] = point(s.x[i], s.y[i]);
      svg.Circle(px, py, 3, kNeutral);
    }
    return svg.Finish();
  }

  auto draw = [&](const Series& s, const char* color, double width, double opacity) {
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < s.x.size(); ++i) points.push_back(point(s.x[i], s.y[i]));
    svg.Polyline(points, color, width, opacity);
  };
  if (spec.kind == PlotKind::kCurveFamily) {
    for (std::size_t i = 1; i < spec.series.size(); ++i) {
      draw(spec.series[i], "#7f7f7f", 1, 0.35);
    }
    draw(spec.series[0], kPositive, 3, 1);
  } else {
    static constexpr const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                               "#8172b3", "#937860"};
    for (std::size_t i = 0; i < spec.series.size(); ++i) draw(spec.series[i], kPalette[i % 6], 2, 1);
  }
  return svg.Finish();
}

}  // namespace

void PlotSpec::Validate() const {
  if (series.empty() || series[0].y.empty()) throw ValidationError("plot '" + title + "' has no data");
  for (const auto& s : series) {
    if (kind != PlotKind::kBar && kind != PlotKind::kRulePanel && s.x.size() != s.y.size()) {
      throw ValidationError("plot '" + title + "' has series of unequal x/y length");
    }
  }
  if (kind == PlotKind::kBar || kind == PlotKind::kRulePanel) {
    if (categories.size() != series[0].y.size()) {
      throw ValidationError("plot '" + title + "' needs one category per bar");
    }
  }
  if (!errors.empty() && errors.size() != series[0].y.size()) {
    throw ValidationError("plot '" + title + "' has error bars of the wrong length");
  }
  if (!annotations.empty() && annotations.size() != series[0].y.size()) {
    throw ValidationError("plot '" + title + "' has annotations of the wrong length");
  }
}

std::string RenderSvg(const PlotSpec& spec) {
  spec.Validate();
  switch (spec.kind) {
    case PlotKind::kBar: return RenderBars(spec, false);
    case PlotKind::kRulePanel: return RenderBars(spec, true);
    default: return RenderXY(spec);
  }
}

void RenderSvg(const PlotSpec& spec, const std::filesystem::path& path) {
  WriteTextFile(path, RenderSvg(spec));
}

PlotSpec AttributionBarPlot(const AttributionVector& global, std::size_t top_k,
                            const std::string& title) {
  std::vector<std::size_t> order(global.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return global.values[a] > global.values[b];
  });
  if (order.size() > top_k) order.resize(top_k);
  PlotSpec spec;
  spec.kind = PlotKind::kBar;
  spec.title = title;
  spec.x_label = "attribution";
  spec.series.push_back({global.method, {}, {}});
  for (std::size_t j : order) {
    spec.categories.push_back(global.features[j]);
    spec.series[0].y.push_back(global.values[j]);
    spec.errors.push_back(j < global.dispersion.size() ? global.dispersion[j] : 0.0);
  }
  return spec;
}

PlotSpec ConsensusBarPlot(const ConsensusReport& report, std::size_t top_k) {
  PlotSpec spec;
  spec.kind = PlotKind::kBar;
  spec.title = std::string(ConsensusKindName(report.kind)) + ": " + report.subject;
  spec.x_label = report.kind == ConsensusKind::kAttributionByMethod ? "mean normalized attribution"
                                                                    : "mean rank";
  spec.series.push_back({report.subject, {}, {}});
  for (std::size_t i = 0; i < std::min(top_k, report.ranking.size()); ++i) {
    spec.categories.push_back(report.ranking[i].feature);
    spec.series[0].y.push_back(report.ranking[i].score);
    spec.errors.push_back(report.ranking[i].dispersion);
  }
  return spec;
}

PlotSpec RulePanelPlot(const LocalExplanation& explanation, const std::string& title) {
  PlotSpec spec;
  spec.kind = PlotKind::kRulePanel;
  spec.title = title;
  spec.x_label = "weight";
  spec.series.push_back({"rules", {}, {}});
  for (const auto& rule : explanation.rules) {
    spec.categories.push_back(FormatRule(rule));
    spec.series[0].y.push_back(rule.weight);
    spec.annotations.push_back(rule.name + " = " +
                               fmt::format("{:.2f}", explanation.feature_values[rule.feature]));
  }
  if (spec.categories.empty()) {
    spec.categories.push_back("no rules");
    spec.series[0].y.push_back(0.0);
    spec.annotations.push_back("");
  }
  return spec;
}

}  // namespace attrib
